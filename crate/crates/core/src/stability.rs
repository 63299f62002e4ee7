//! Second variation of `J_F` at the double cone and the flatness criterion.
//!
//! For a radial test function `ψ(ρ)` the bulk form separates,
//!
//! ```text
//! bulk = [∫ ψ′² ρ² dρ] · 2π ∫_{θ₀}^{π−θ₀} g(θ) w(θ) sin θ dθ,
//! g = F′(|∇u|²)/F′(1),   w = 1 + (2F″/F′)(|∇u|²) · scale² f²,
//! ```
//!
//! and the boundary term `∫_Γ H ψ²` equals `(∫_{Γ∩S²} κ) · ∫ ψ² dρ`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cone::DoubleConeSolution;
use crate::energy::EnergyModel;
use crate::error::{invalid, Result};
use crate::quadrature::{self, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialTestFunction {
    /// `min(1/δ, 1/r)`.
    InverseTruncated { delta: f64 },
    /// `r^{-1/2}` on `[2ε, 1/2]` with smoothstep ramps on `[ε, 2ε]` and `[1/2, 3/4]`.
    Bernstein { eps: f64 },
    /// Planar cutoff: `1` up to `e^N`, `2 − ln r / N` up to `e^{2N}`, then `0`.
    LogCutoff { n: f64 },
    Zero,
}

fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t))
    }
}

impl RadialTestFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::InverseTruncated { delta } if !(delta > 0.0 && delta.is_finite()) => {
                Err(invalid("delta must be positive"))
            }
            Self::Bernstein { eps } if !(eps > 0.0 && eps < 0.125) => {
                Err(invalid("eps must lie in (0, 1/8)"))
            }
            Self::LogCutoff { n } if !(n > 0.0 && n.is_finite()) => Err(invalid("N must be positive")),
            _ => Ok(()),
        }
    }

    /// The parameter δ, ε or N.
    pub fn parameter(&self) -> f64 {
        match *self {
            Self::InverseTruncated { delta } => delta,
            Self::Bernstein { eps } => eps,
            Self::LogCutoff { n } => n,
            Self::Zero => 0.0,
        }
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn dpsi(&self, r: f64) -> f64 {
        self.eval(r).1
    }

    /// `(ψ(r), ψ′(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match *self {
            Self::InverseTruncated { delta } => {
                if r <= delta {
                    (1.0 / delta, 0.0)
                } else {
                    (1.0 / r, -1.0 / (r * r))
                }
            }
            Self::Bernstein { eps } => {
                if r <= eps || r >= 0.75 {
                    return (0.0, 0.0);
                }
                let (h, dh) = smoothstep((r - eps) / eps);
                let (s, ds) = smoothstep((r - 0.5) / 0.25);
                let (g, dg) = (1.0 - s, -4.0 * ds);
                let dh = dh / eps;
                let root = r.sqrt();
                let psi = h * g / root;
                (psi, (dh * g + h * dg) / root - 0.5 * psi / r)
            }
            Self::LogCutoff { n } => {
                let s = r.ln();
                (self.psi_log(s), if s > n && s <= 2.0 * n { -1.0 / (n * r) } else { 0.0 })
            }
            Self::Zero => (0.0, 0.0),
        }
    }

    /// LogCutoff profile as a function of `s = ln r`.
    fn psi_log(&self, s: f64) -> f64 {
        match *self {
            Self::LogCutoff { n } if s <= n => 1.0,
            Self::LogCutoff { n } if s <= 2.0 * n => 2.0 - s / n,
            Self::LogCutoff { .. } => 0.0,
            _ => self.psi(s.exp()),
        }
    }

    /// Points where the profile switches formula.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::InverseTruncated { delta } => vec![delta],
            Self::Bernstein { eps } => {
                let mut b = vec![eps, 2.0 * eps];
                // Decades keep the adaptive bisection from chasing the 1/r core.
                let mut x = 20.0 * eps;
                while x < 0.5 {
                    b.push(x);
                    x *= 10.0;
                }
                b.extend([0.5, 0.75]);
                b
            }
            Self::LogCutoff { n } => vec![n.exp(), (2.0 * n).exp()],
            Self::Zero => vec![],
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Self::InverseTruncated { .. } => (0.0, f64::INFINITY),
            Self::Bernstein { eps } => (eps, 0.75),
            Self::LogCutoff { n } => (0.0, (2.0 * n).exp()),
            Self::Zero => (0.0, 0.0),
        }
    }
}

/// `∫_lo^hi h`, with `hi = ∞` mapped onto `(0, 1]` by `r = a/s` past the last break.
fn radial_integral<F: Fn(f64) -> f64>(
    h: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<f64> {
    if hi.is_finite() {
        return Ok(quadrature::integrate(&h, lo, hi, breaks, opts)?.value);
    }
    let a = breaks.iter().copied().fold(lo, f64::max);
    let a = if a > 0.0 { a } else { 1.0 };
    let head = quadrature::integrate(&h, lo, a, breaks, opts)?.value;
    let tail = quadrature::integrate(|s: f64| h(a / s) * a / (s * s), 0.0, 1.0, &[], opts)?.value;
    Ok(head + tail)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coefficients of `F(|∇u − ε∇ψ|²) = A₀ + A₁ε + A₂ε² + O(ε³)`.
pub fn expansion_coeffs(grad_u: &[f64], grad_psi: &[f64], model: &EnergyModel) -> ExpansionCoefficients {
    let t = dot(grad_u, grad_u);
    let up = dot(grad_u, grad_psi);
    let f1 = model.f1(t);
    ExpansionCoefficients {
        a0: model.f(t),
        a1: -2.0 * f1 * up,
        a2: f1 * dot(grad_psi, grad_psi) + 2.0 * model.f2(t) * up * up,
    }
}

/// `a_ij = (F′(|∇u|²)/F′(1)) [δ_ij + (2F″/F′)(|∇u|²) u_i u_j]`.
pub fn diffusion_tensor(grad_u: &[f64], model: &EnergyModel) -> DMatrix<f64> {
    let n = grad_u.len();
    let t = dot(grad_u, grad_u);
    let f1 = model.f1(t);
    let ratio = if t > 0.0 { 2.0 * model.f2(t) / f1 } else { 0.0 };
    let g = f1 / model.f1(1.0);
    DMatrix::from_fn(n, n, |i, j| {
        g * (if i == j { 1.0 } else { 0.0 } + ratio * grad_u[i] * grad_u[j])
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub p: f64,
    pub delta_or_eps: f64,
    pub bulk: f64,
    pub boundary: f64,
    #[serde(rename = "I")]
    pub i: f64,
    pub delta_scaled: Option<f64>,
    pub c_hat: f64,
    pub ratio_4_over_chat: f64,
    /// `∫_{Γ∩B_δ} H ψ²` for the truncated fundamental solution; not part of
    /// `boundary`, which covers `Γ \ B_δ`.
    #[serde(skip)]
    pub boundary_inside_truncation: f64,
}

fn quad_opts(tol: f64) -> QuadOptions {
    QuadOptions { abs_tol: tol, rel_tol: tol, max_panels: 20_000 }
}

/// `∫ ψ′² ρ² dρ`.
pub fn radial_bulk(psi: &RadialTestFunction, tol: f64) -> Result<f64> {
    let (lo, hi) = psi.support();
    if lo == hi {
        return Ok(0.0);
    }
    radial_integral(
        |r| {
            let d = psi.dpsi(r);
            d * d * r * r
        },
        lo,
        hi,
        &psi.breakpoints(),
        quad_opts(tol),
    )
}

/// `∫ ψ² dρ`, over `ρ > δ` for the truncated fundamental solution.
pub fn radial_boundary(psi: &RadialTestFunction, tol: f64) -> Result<f64> {
    let (lo, hi) = match *psi {
        RadialTestFunction::InverseTruncated { delta } => (delta, f64::INFINITY),
        _ => psi.support(),
    };
    if lo == hi {
        return Ok(0.0);
    }
    radial_integral(
        |r| {
            let v = psi.psi(r);
            v * v
        },
        lo,
        hi,
        &psi.breakpoints(),
        quad_opts(tol),
    )
}

fn angular<W: Fn(f64, f64, f64) -> f64>(sol: &DoubleConeSolution, weight: W, tol: f64) -> Result<f64> {
    let half = quadrature::integrate(
        |theta| {
            let (f, fdot, _) = sol.profile_at(theta).expect("band inside profile range");
            weight(theta, f, fdot) * theta.sin()
        },
        sol.theta0,
        FRAC_PI_2,
        &[],
        quad_opts(tol),
    )?;
    // Reflection about the equator doubles the half band.
    Ok(2.0 * 2.0 * PI * half.value)
}

fn assemble(
    sol: &DoubleConeSolution,
    psi: &RadialTestFunction,
    angular_factor: f64,
    c_hat: f64,
    tol: f64,
) -> Result<StabilityReport> {
    let kappa_total = sol.geometry().total_sphere_curvature;
    let bulk = radial_bulk(psi, tol)? * angular_factor;
    let boundary = radial_boundary(psi, tol)? * kappa_total;
    let (delta_scaled, inside) = match *psi {
        RadialTestFunction::InverseTruncated { delta } => (Some(delta * (bulk - boundary)), kappa_total / delta),
        _ => (None, 0.0),
    };
    Ok(StabilityReport {
        p: sol.p,
        delta_or_eps: psi.parameter(),
        bulk,
        boundary,
        i: bulk - boundary,
        delta_scaled,
        c_hat,
        ratio_4_over_chat: 4.0 / c_hat,
        boundary_inside_truncation: inside,
    })
}

/// Pure-power second variation `∫|∇u|^{p−2}{|∇ψ|² + (p−2)(∇u·∇ψ)²/|∇u|²} − ∫_Γ Hψ²`.
pub fn second_variation_cone(
    sol: &DoubleConeSolution,
    psi: &RadialTestFunction,
    quad_tol: f64,
) -> Result<StabilityReport> {
    psi.validate()?;
    let p = sol.p;
    let s2 = sol.scale * sol.scale;
    let factor = angular(
        sol,
        |_, f, fdot| {
            let n = f * f + fdot * fdot;
            (s2 * n).powf(0.5 * (p - 2.0)) * (1.0 + (p - 2.0) * f * f / n)
        },
        quad_tol,
    )?;
    assemble(sol, psi, factor, p - 1.0, quad_tol)
}

/// Second variation for a general density `F`, fed `|∇u|² = scale²(f² + ḟ²)`.
pub fn second_variation_cone_with_model(
    sol: &DoubleConeSolution,
    psi: &RadialTestFunction,
    model: &EnergyModel,
    quad_tol: f64,
) -> Result<StabilityReport> {
    psi.validate()?;
    let s2 = sol.scale * sol.scale;
    let f1_unit = model.f1(1.0);
    let factor = angular(
        sol,
        |_, f, fdot| {
            let t = s2 * (f * f + fdot * fdot);
            let f1 = model.f1(t);
            (f1 / f1_unit) * (1.0 + 2.0 * model.f2(t) / f1 * s2 * f * f)
        },
        quad_tol,
    )?;
    assemble(sol, psi, factor, c_hat(sol, model), quad_tol)
}

/// `Ĉ = 1 + 2 sup F″(|∇u|²)/F′(1)`; `p − 1` for pure powers.
pub fn c_hat(sol: &DoubleConeSolution, model: &EnergyModel) -> f64 {
    if let Some(p) = model.power_exponent() {
        return p - 1.0;
    }
    let f1_unit = model.f1(1.0);
    let s2 = sol.scale * sol.scale;
    let n = 512;
    let sup = (0..=n)
        .map(|k| {
            let theta = sol.theta0 + (FRAC_PI_2 - sol.theta0) * k as f64 / n as f64;
            let (f, fdot, _) = sol.profile_at(theta).expect("band inside profile range");
            model.f2(s2 * (f * f + fdot * fdot))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    1.0 + 2.0 * sup / f1_unit
}

/// `(∫ ψ_ε′² r² dr, ∫ ψ_ε² dr)` for the Bernstein profile.
pub fn bernstein_integrals(eps: f64, quad_tol: f64) -> Result<(f64, f64)> {
    let psi = RadialTestFunction::Bernstein { eps };
    psi.validate()?;
    Ok((radial_bulk(&psi, quad_tol)?, radial_boundary(&psi, quad_tol)?))
}

pub fn bernstein_ratio(eps: f64, quad_tol: f64) -> Result<f64> {
    let (num, den) = bernstein_integrals(eps, quad_tol)?;
    Ok(num / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatnessCriterion {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub admissible: bool,
    pub c_hat: f64,
}

/// Compares `∫_{Γ∩S²} κ` with `(Ĉ/4) ℋ²({u>0} ∩ S²)`.
pub fn bernstein_flatness_criterion(sol: &DoubleConeSolution, model: &EnergyModel) -> FlatnessCriterion {
    let geom = sol.geometry();
    let c_hat = c_hat(sol, model);
    let lhs = geom.total_sphere_curvature;
    let rhs = 0.25 * c_hat * geom.band_area;
    FlatnessCriterion { lhs, rhs, ratio: lhs / rhs, admissible: lhs <= rhs, c_hat }
}

/// `Ĉ ∫_{ℝ²} |∇ψ|²` for the logarithmic cutoff, integrated in `s = ln r`.
pub fn log_test_2d(n: f64, c_hat: f64) -> Result<f64> {
    RadialTestFunction::LogCutoff { n }.validate()?;
    // |∇ψ|² · 2πr dr = 2π (r ψ′)² ds and r ψ′ = −1/N on (N, 2N).
    let r = quadrature::integrate(|_s| 2.0 * PI / (n * n), n, 2.0 * n, &[], QuadOptions::default())?;
    Ok(c_hat * r.value)
}

/// Normal derivative `−∇u/|∇u| · ∇ψ` of `1/|x|` on the free-boundary cone at `rho`.
pub fn boundary_normal_derivative(sol: &DoubleConeSolution, rho: f64) -> f64 {
    let (f, fdot, _) = sol.profile_at(sol.theta0).expect("θ₀ inside profile range");
    f / (rho * rho * f.hypot(fdot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::build_double_cone;
    use std::sync::Arc;

    fn linear() -> EnergyModel {
        EnergyModel::power(2.0, 1.0).unwrap()
    }

    #[test]
    fn expansion_examples() {
        let c = expansion_coeffs(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &linear());
        assert_eq!((c.a0, c.a1, c.a2), (1.0, -2.0, 1.0));
        let p = 3.4;
        let m = EnergyModel::power(p, 1.0).unwrap();
        let c = expansion_coeffs(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &m);
        assert!((c.a0 - 1.0).abs() < 1e-15 && c.a1 == 0.0 && (c.a2 - p / 2.0).abs() < 1e-14);
    }

    #[test]
    fn expansion_third_order() {
        let m = EnergyModel::power(3.7, 1.0).unwrap();
        let gu = [0.6, -0.3, 0.5];
        let gp = [0.2, 0.9, -0.4];
        let c = expansion_coeffs(&gu, &gp, &m);
        let err = |e: f64| {
            let d: Vec<f64> = gu.iter().zip(&gp).map(|(a, b)| a - e * b).collect();
            (m.f(dot(&d, &d)) - (c.a0 + c.a1 * e + c.a2 * e * e)).abs()
        };
        let es = [1e-2, 5e-3, 2.5e-3];
        for w in es.windows(2) {
            let order = (err(w[0]) / err(w[1])).log2();
            assert!(order >= 2.9, "order {order}");
        }
    }

    #[test]
    fn tensor_examples() {
        let a = diffusion_tensor(&[1.0, 0.0, 0.0], &linear());
        assert!((a - DMatrix::identity(3, 3)).norm() < 1e-15);
        let a = diffusion_tensor(&[1.0, 0.0, 0.0], &EnergyModel::power(4.5, 1.0).unwrap());
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.5, 1.0, 1.0]));
        assert!((a - expect).norm() < 1e-13);
    }

    #[test]
    fn p2_cancellation_and_scaling() {
        let sol = build_double_cone(2.0, 1.0).unwrap();
        let k = 4.0 * PI * sol.theta0.cos();
        for delta in [0.1, 0.01] {
            let r = second_variation_cone(&sol, &RadialTestFunction::InverseTruncated { delta }, 1e-12).unwrap();
            assert!((r.bulk * delta - k).abs() < 1e-9);
            assert!((r.boundary * delta - k).abs() < 1e-9);
            assert!(r.delta_scaled.unwrap().abs() <= 1e-8 * k);
            assert!((r.boundary_inside_truncation * delta - k).abs() < 1e-12);
        }
        let r = second_variation_cone(&sol, &RadialTestFunction::InverseTruncated { delta: 0.01 }, 1e-12).unwrap();
        assert!((r.boundary - 1047.4).abs() < 0.5);
    }

    #[test]
    fn zero_test_function() {
        let sol = build_double_cone(3.0, 1.0).unwrap();
        let r = second_variation_cone(&sol, &RadialTestFunction::Zero, 1e-10).unwrap();
        assert_eq!((r.bulk, r.boundary, r.i), (0.0, 0.0, 0.0));
    }

    #[test]
    fn general_path_matches_power_path() {
        for p in [2.0, 3.0, 4.0, 6.5] {
            let sol = build_double_cone(p, 1.0).unwrap();
            let psi = RadialTestFunction::InverseTruncated { delta: 0.05 };
            let a = second_variation_cone(&sol, &psi, 1e-12).unwrap();
            let pw = EnergyModel::power(p, 1.0).unwrap();
            let custom = EnergyModel::custom(
                "power-as-custom",
                Arc::new(move |t: f64| pw.f(t)),
                Arc::new(move |t: f64| EnergyModel::power(p, 1.0).unwrap().f1(t)),
                Arc::new(move |t: f64| EnergyModel::power(p, 1.0).unwrap().f2(t)),
                1.0,
            )
            .unwrap();
            let b = second_variation_cone_with_model(&sol, &psi, &custom, 1e-12).unwrap();
            assert!((a.bulk - b.bulk).abs() <= 1e-10 * a.bulk.abs().max(1.0), "p={p}");
            assert_eq!(a.boundary, b.boundary);
        }
    }

    #[test]
    fn log_cutoff_closed_form() {
        for n in [10.0, 100.0, 1000.0] {
            assert!((log_test_2d(n, 1.0).unwrap() - 2.0 * PI / n).abs() < 1e-12);
        }
        assert!((log_test_2d(10.0, 2.0).unwrap() - 1.25664).abs() < 1e-5);
        let psi = RadialTestFunction::LogCutoff { n: 2.0 };
        assert_eq!(psi.psi(1.0), 1.0);
        assert!((psi.psi(3f64.exp()) - 0.5).abs() < 1e-15);
        assert_eq!(psi.psi(5f64.exp()), 0.0);
    }

    #[test]
    fn bernstein_profile_is_c1() {
        let psi = RadialTestFunction::Bernstein { eps: 0.01 };
        for &b in &[0.01, 0.02, 0.5, 0.75] {
            let (l, r) = (psi.eval(b - 1e-12), psi.eval(b + 1e-12));
            assert!((l.0 - r.0).abs() < 1e-6 && (l.1 - r.1).abs() < 1e-4, "break {b}");
        }
        let h = 1e-7;
        for r in [0.013, 0.1, 0.6] {
            let fd = (psi.psi(r + h) - psi.psi(r - h)) / (2.0 * h);
            assert!((fd - psi.dpsi(r)).abs() < 1e-5);
        }
    }

    #[test]
    fn criterion_ratio() {
        for p in [2.5, 3.0, 5.0, 9.0] {
            let sol = build_double_cone(p, 1.0).unwrap();
            let c = bernstein_flatness_criterion(&sol, &EnergyModel::power(p, 1.0).unwrap());
            assert!((c.ratio - 4.0 / (p - 1.0)).abs() < 1e-10);
            assert_eq!(c.admissible, p >= 5.0);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(bernstein_ratio(0.2, 1e-10).is_err());
        assert!(log_test_2d(0.0, 1.0).is_err());
        let sol = build_double_cone(2.0, 1.0).unwrap();
        let psi = RadialTestFunction::InverseTruncated { delta: -1.0 };
        assert!(second_variation_cone(&sol, &psi, 1e-10).is_err());
    }
}
