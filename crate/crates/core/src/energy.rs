//! Energy density `F(t)`, `t = |∇u|²`, and the constants of the free boundary
//! condition.
//!
//! On a smooth free boundary the gradient modulus is the constant `λ*` solving
//!
//! ```text
//! λ² = 2 F'(s²) s² − F(s²),   s = λ*.
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{invalid, Error, Result};

/// Scalar map `t ↦ value` used for custom densities.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum EnergyKind {
    /// `F(t) = t^{p/2}`.
    PowerLaw { p: f64 },
    /// User supplied `F`, `F'`, `F''`.
    Custom { name: String, f: ScalarFn, f1: ScalarFn, f2: ScalarFn },
}

impl fmt::Debug for EnergyKind {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyKind::PowerLaw { p } => write!(fm, "PowerLaw {{ p: {p} }}"),
            EnergyKind::Custom { name, .. } => write!(fm, "Custom {{ name: {name:?} }}"),
        }
    }
}

/// Energy density together with the constant `λ` of the area term.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    pub kind: EnergyKind,
    pub lambda: f64,
}

impl EnergyModel {
    pub fn power(p: f64, lambda: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(invalid("p must exceed 1"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda must be positive"));
        }
        Ok(Self { kind: EnergyKind::PowerLaw { p }, lambda })
    }

    /// Power law with `λ² = 2F'(1) − F(1) = p − 1`, so that `λ* = 1`.
    pub fn power_normalized(p: f64) -> Result<Self> {
        let mut m = Self::power(p, 1.0)?;
        m.lambda = normalized_lambda_sq(&m).sqrt();
        Ok(m)
    }

    pub fn custom(
        name: impl Into<String>,
        f: ScalarFn,
        f1: ScalarFn,
        f2: ScalarFn,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda must be positive"));
        }
        Ok(Self { kind: EnergyKind::Custom { name: name.into(), f, f1, f2 }, lambda })
    }

    /// Same density with `λ` replaced by the normalized value.
    pub fn normalized(&self) -> Self {
        let mut m = self.clone();
        m.lambda = normalized_lambda_sq(self).sqrt();
        m
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            EnergyKind::PowerLaw { p } => Some(p),
            EnergyKind::Custom { .. } => None,
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match &self.kind {
            EnergyKind::PowerLaw { p } => t.powf(0.5 * p),
            EnergyKind::Custom { f, .. } => f(t),
        }
    }

    pub fn f1(&self, t: f64) -> f64 {
        match &self.kind {
            EnergyKind::PowerLaw { p } => 0.5 * p * t.powf(0.5 * p - 1.0),
            EnergyKind::Custom { f1, .. } => f1(t),
        }
    }

    pub fn f2(&self, t: f64) -> f64 {
        match &self.kind {
            // p = 2 would otherwise evaluate 0 · t^{-1} = NaN at t = 0.
            EnergyKind::PowerLaw { p } if *p == 2.0 => 0.0,
            EnergyKind::PowerLaw { p } => 0.5 * p * (0.5 * p - 1.0) * t.powf(0.5 * p - 2.0),
            EnergyKind::Custom { f2, .. } => f2(t),
        }
    }

    pub fn lambda_sq(&self) -> f64 {
        self.lambda * self.lambda
    }
}

/// Result of [`check_structural`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuralReport {
    pub t_min: f64,
    pub t_max: f64,
    pub c0: f64,
    pub big_c0: f64,
    pub passes: bool,
}

/// Samples the structural bounds `c0 ≤ F' ≤ C0`, `0 ≤ F'' ≤ C0/(1+t)` on `[0, t_max]`.
pub fn check_structural(model: &EnergyModel, t_max: f64, n_samples: usize) -> Result<StructuralReport> {
    check_structural_on(model, 0.0, t_max, n_samples)
}

/// As [`check_structural`] on `[t_min, t_max]`. Pure powers with `p ≠ 2` only
/// satisfy the bounds on intervals away from `0` and `∞`.
pub fn check_structural_on(
    model: &EnergyModel,
    t_min: f64,
    t_max: f64,
    n_samples: usize,
) -> Result<StructuralReport> {
    if !(t_max > 0.0) || !(t_min >= 0.0) || t_min >= t_max {
        return Err(invalid("need 0 <= t_min < t_max"));
    }
    if n_samples < 2 {
        return Err(invalid("n_samples must be at least 2"));
    }
    let mut c0 = f64::INFINITY;
    let mut big_c0 = f64::NEG_INFINITY;
    let mut convex = true;
    for i in 0..n_samples {
        let t = t_min + (t_max - t_min) * i as f64 / (n_samples - 1) as f64;
        let (f, f1, f2) = (model.f(t), model.f1(t), model.f2(t));
        if !(f.is_finite() && f1.is_finite() && f2.is_finite()) {
            return Err(Error::NumericalDomain(format!("F, F' or F'' not finite at t = {t}")));
        }
        c0 = c0.min(f1);
        big_c0 = big_c0.max(f1.max(f2 * (1.0 + t)));
        convex &= f2 >= 0.0;
    }
    Ok(StructuralReport { t_min, t_max, c0, big_c0, passes: c0 > 0.0 && convex })
}

/// `2F'(1) − F(1)`: the `λ²` for which the free boundary gradient is 1.
pub fn normalized_lambda_sq(model: &EnergyModel) -> f64 {
    2.0 * model.f1(1.0) - model.f(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernoulliConstants {
    pub lambda_sq: f64,
    pub lambda_star: f64,
    pub normalized: bool,
}

/// Root finder used by [`lambda_star_with`] for non-closed-form models.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootMethod {
    Bisection,
    /// Newton iteration safeguarded by the bisection bracket.
    Newton,
}

/// `g(s) = 2F'(s²)s² − F(s²)`.
pub fn bernoulli_g(model: &EnergyModel, s: f64) -> f64 {
    let t = s * s;
    2.0 * model.f1(t) * t - model.f(t)
}

fn bernoulli_g_prime(model: &EnergyModel, s: f64) -> f64 {
    let t = s * s;
    2.0 * s * (model.f1(t) + 2.0 * model.f2(t) * t)
}

/// Gradient modulus on the free boundary. Power laws use the closed form
/// `(λ²/(p−1))^{1/p}`; other models use safeguarded Newton.
pub fn lambda_star(model: &EnergyModel) -> Result<BernoulliConstants> {
    lambda_star_with(model, RootMethod::Newton, true)
}

/// As [`lambda_star`]; `closed_form = false` forces the generic root finder
/// for power laws too.
pub fn lambda_star_with(
    model: &EnergyModel,
    method: RootMethod,
    closed_form: bool,
) -> Result<BernoulliConstants> {
    if !(model.lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let lambda_sq = model.lambda_sq();
    let target = normalized_lambda_sq(model);
    let normalized = (lambda_sq - target).abs() <= 4.0 * f64::EPSILON * target.abs().max(1.0);
    if normalized {
        return Ok(BernoulliConstants { lambda_sq, lambda_star: 1.0, normalized });
    }
    let lambda_star = match (model.kind.clone(), closed_form) {
        (EnergyKind::PowerLaw { p }, true) => (lambda_sq / (p - 1.0)).powf(1.0 / p),
        _ => solve_bernoulli(model, lambda_sq, method)?,
    };
    Ok(BernoulliConstants { lambda_sq, lambda_star, normalized })
}

fn solve_bernoulli(model: &EnergyModel, lambda_sq: f64, method: RootMethod) -> Result<f64> {
    let mut lo = 1e-8;
    let mut hi = (10.0f64).max(10.0 * model.lambda);
    let g = |s: f64| bernoulli_g(model, s) - lambda_sq;
    let (mut glo, mut ghi) = (g(lo), g(hi));
    for _ in 0..60 {
        if !(glo > 0.0 && glo.is_finite() && lo > 1e-300) {
            break;
        }
        lo *= 1e-4;
        glo = g(lo);
    }
    for _ in 0..60 {
        if !(ghi < 0.0 && ghi.is_finite() && hi < 1e300) {
            break;
        }
        hi *= 4.0;
        ghi = g(hi);
    }
    if !(glo.is_finite() && ghi.is_finite()) {
        return Err(Error::NumericalDomain("Bernoulli relation not finite on bracket".into()));
    }
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::RootNotFound(format!(
            "no sign change of 2F'(s²)s² − F(s²) − λ² on [{lo}, {hi}]"
        )));
    }
    let rel_tol = 1e-12;
    match method {
        RootMethod::Bisection => {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    return Ok(mid);
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 0.25 * rel_tol * mid {
                    break;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        RootMethod::Newton => {
            let mut s = 0.5 * (lo + hi);
            for _ in 0..200 {
                let gs = g(s);
                if gs == 0.0 {
                    return Ok(s);
                }
                if gs < 0.0 {
                    lo = s;
                } else {
                    hi = s;
                }
                let d = bernoulli_g_prime(model, s);
                let mut next = s - gs / d;
                if !(next > lo && next < hi) || !next.is_finite() {
                    next = 0.5 * (lo + hi);
                }
                if (next - s).abs() <= 0.25 * rel_tol * next || hi - lo <= 0.25 * rel_tol * next {
                    return Ok(next);
                }
                s = next;
            }
            Ok(s)
        }
    }
}

/// JSON model descriptor: `{"kind":"power","p":3.0,"lambda":1.0}`. A missing
/// `lambda` selects the normalized value. `{"kind":"custom","name":...}` is
/// resolved through a [`ModelRegistry`].
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelDescriptor {
    Power { p: f64, lambda: Option<f64> },
    Custom { name: String, lambda: Option<f64> },
}

/// Custom densities that may be referenced from JSON by name.
#[derive(Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, EnergyModel>,
}

impl ModelRegistry {
    pub fn register(&mut self, model: EnergyModel) {
        if let EnergyKind::Custom { name, .. } = &model.kind {
            self.models.insert(name.clone(), model);
        }
    }

    pub fn resolve(&self, desc: &ModelDescriptor) -> Result<EnergyModel> {
        match desc {
            ModelDescriptor::Power { p, lambda: Some(l) } => EnergyModel::power(*p, *l),
            ModelDescriptor::Power { p, lambda: None } => EnergyModel::power_normalized(*p),
            ModelDescriptor::Custom { name, lambda } => {
                let base = self
                    .models
                    .get(name)
                    .ok_or_else(|| invalid(format!("custom model {name:?} is not registered")))?;
                match lambda {
                    Some(l) if *l > 0.0 => Ok(EnergyModel { lambda: *l, ..base.clone() }),
                    Some(_) => Err(invalid("lambda must be positive")),
                    None => Ok(base.normalized()),
                }
            }
        }
    }

    pub fn parse_json(&self, text: &str) -> Result<EnergyModel> {
        let desc: ModelDescriptor =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        self.resolve(&desc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_model() -> EnergyModel {
        EnergyModel::custom(
            "t+log(1+t)",
            Arc::new(|t| t + (1.0 + t).ln()),
            Arc::new(|t| 1.0 + 1.0 / (1.0 + t)),
            Arc::new(|t| -1.0 / ((1.0 + t) * (1.0 + t))),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn power_law_derivatives_consistent() {
        for &p in &[1.5, 2.0, 3.0, 4.3] {
            let m = EnergyModel::power(p, 1.0).unwrap();
            for &t in &[0.1, 0.7, 1.0, 2.5, 9.0] {
                let h = 1e-5 * t;
                let d1 = (m.f(t + h) - m.f(t - h)) / (2.0 * h);
                let d2 = (m.f1(t + h) - m.f1(t - h)) / (2.0 * h);
                assert!((d1 - m.f1(t)).abs() < 1e-8 * m.f1(t).abs().max(1.0));
                assert!((d2 - m.f2(t)).abs() < 1e-6 * m.f2(t).abs().max(1.0));
                assert!((m.f(t) - t.powf(p / 2.0)).abs() <= 1e-12 * m.f(t));
            }
        }
    }

    #[test]
    fn structural_check_linear() {
        let m = EnergyModel::power(2.0, 1.0).unwrap();
        let r = check_structural(&m, 10.0, 100).unwrap();
        assert_eq!((r.c0, r.big_c0, r.passes), (1.0, 1.0, true));
    }

    #[test]
    fn structural_check_quartic_fails_at_zero() {
        let m = EnergyModel::power(4.0, 1.0).unwrap();
        let r = check_structural(&m, 4.0, 100).unwrap();
        assert_eq!(r.c0, 0.0);
        assert!(!r.passes);
        assert!((r.big_c0 - 10.0).abs() < 1e-12);
        let away = check_structural_on(&m, 0.5, 4.0, 100).unwrap();
        assert!(away.passes && (away.c0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn structural_check_log_density() {
        // F'' = −1/(1+t)² is negative, so the convexity bound fails; F' ∈ [12/11, 2].
        let r = check_structural(&log_model(), 10.0, 100).unwrap();
        assert!((r.c0 - 12.0 / 11.0).abs() < 1e-14);
        assert!((r.big_c0 - 2.0).abs() < 1e-14);
        assert!(!r.passes);
    }

    #[test]
    fn structural_check_singular_second_derivative_is_domain_error() {
        let m = EnergyModel::power(3.0, 1.0).unwrap();
        assert!(matches!(check_structural(&m, 1.0, 10), Err(Error::NumericalDomain(_))));
        assert!(check_structural(&m, 1.0, 1).is_err());
    }

    #[test]
    fn lambda_star_examples() {
        let m = EnergyModel::power(2.0, 1.0).unwrap();
        assert_eq!(lambda_star(&m).unwrap().lambda_star, 1.0);
        let m = EnergyModel::power(3.0, 1.0).unwrap();
        let s = lambda_star(&m).unwrap().lambda_star;
        assert!((s - 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!((s - 0.793_701).abs() < 1e-6);
        let m = EnergyModel::power(3.0, 2f64.sqrt()).unwrap();
        let c = lambda_star(&m).unwrap();
        assert!(c.normalized);
        assert_eq!(c.lambda_star, 1.0);
    }

    #[test]
    fn normalized_lambda_examples() {
        for (p, v) in [(2.0, 1.0), (4.0, 3.0), (5.0, 4.0)] {
            let m = EnergyModel::power(p, 1.0).unwrap();
            assert!((normalized_lambda_sq(&m) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_root_finders() {
        for &p in &[2.0, 2.5, 3.0, 4.0, 4.9] {
            for &lam in &[0.3, 1.0, 2.7] {
                let m = EnergyModel::power(p, lam).unwrap();
                let exact = lambda_star(&m).unwrap().lambda_star;
                let bis = lambda_star_with(&m, RootMethod::Bisection, false).unwrap().lambda_star;
                let newton = lambda_star_with(&m, RootMethod::Newton, false).unwrap().lambda_star;
                assert!((exact - bis).abs() < 1e-10, "p={p} lam={lam}");
                assert!((exact - newton).abs() < 1e-10, "p={p} lam={lam}");
                assert!((bernoulli_g(&m, newton) - lam * lam).abs() < 1e-10 * lam * lam);
            }
        }
    }

    #[test]
    fn custom_model_root() {
        let m = log_model();
        let bis = lambda_star_with(&m, RootMethod::Bisection, true).unwrap().lambda_star;
        let newton = lambda_star_with(&m, RootMethod::Newton, true).unwrap().lambda_star;
        assert!((bis - newton).abs() < 1e-10);
        assert!((bernoulli_g(&m, newton) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn no_sign_change_is_root_not_found() {
        let m = EnergyModel::custom(
            "log(1+t)",
            Arc::new(|t: f64| (1.0 + t).ln()),
            Arc::new(|t| 1.0 / (1.0 + t)),
            Arc::new(|t| -1.0 / ((1.0 + t) * (1.0 + t))),
            1.0,
        )
        .unwrap();
        assert!(matches!(lambda_star(&m), Err(Error::RootNotFound(_))));
    }

    #[test]
    fn descriptor_parsing() {
        let reg = ModelRegistry::default();
        let m = reg.parse_json(r#"{"kind":"power","p":3.0,"lambda":1.0}"#).unwrap();
        assert_eq!(m.power_exponent(), Some(3.0));
        let m = reg.parse_json(r#"{"kind":"power","p":4.0}"#).unwrap();
        assert!((m.lambda_sq() - 3.0).abs() < 1e-15);
        assert!(reg.parse_json(r#"{"kind":"custom","name":"x"}"#).is_err());
        assert!(reg.parse_json(r#"{"kind":"power","p":0.5,"lambda":1}"#).is_err());
        let mut reg = ModelRegistry::default();
        reg.register(log_model());
        let m = reg.parse_json(r#"{"kind":"custom","name":"t+log(1+t)"}"#).unwrap();
        assert!((m.lambda_sq() - normalized_lambda_sq(&m)).abs() < 1e-15);
    }
}
