//! Allard monotonicity profile and density classification at a point.

use serde::Serialize;

use super::clip::{area_in_ball, deficit_in_ball};
use super::measure::{mean_curvature_measure, CurvatureMeasure};
use super::mesh::{DiscreteVarifold, V3};
use crate::error::{invalid, Error, Result};
use crate::par::Exec;

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityProfile {
    pub xi: [f64; 3],
    pub radii: Vec<f64>,
    /// `μ(B_ρ(ξ)) / ρ²`.
    pub ratio: Vec<f64>,
    /// `e^{Λ R^{1−α} ρ^α} · ratio`.
    pub weighted: Vec<f64>,
    /// `∫_{B_ρ \ B_{ρ₀}} |D⊥r|² / r²`, cumulative from the first radius.
    pub deficit: Vec<f64>,
}

fn check_radii(radii: &[f64], r_max: f64) -> Result<()> {
    if radii.is_empty() {
        return Err(invalid("at least one radius"));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r <= r_max)) {
        return Err(invalid(format!("radii must lie in (0, {r_max}]")));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii must be strictly increasing"));
    }
    Ok(())
}

/// `ξ` must lie in the mesh bounding box grown by `reach`.
fn check_point(v: &DiscreteVarifold, xi: &V3, reach: f64) -> Result<()> {
    let (lo, hi) = v.bounding_box();
    let tol = reach + 1e-9 * (hi - lo).norm().max(1.0);
    if (0..3).any(|k| xi[k] < lo[k] - tol || xi[k] > hi[k] + tol) {
        return Err(Error::Domain(format!("ξ = {:?} outside the mesh bounding box", xi.as_slice())));
    }
    Ok(())
}

/// `μ_V(B_ρ(ξ))` with exact clipping.
pub fn mass_in_ball(v: &DiscreteVarifold, xi: &V3, rho: f64, exec: Exec) -> f64 {
    exec.sum_range(v.faces.len(), |i| v.multiplicity[i] * area_in_ball(&v.corners(i), xi, rho))
}

fn deficit_ball(v: &DiscreteVarifold, xi: &V3, rho: f64, exec: Exec) -> f64 {
    exec.sum_range(v.faces.len(), |i| v.multiplicity[i] * deficit_in_ball(&v.corners(i), xi, rho))
}

pub fn monotonicity_profile(
    v: &DiscreteVarifold,
    xi: &V3,
    alpha: f64,
    lambda: f64,
    r: f64,
    radii: &[f64],
) -> Result<MonotonicityProfile> {
    monotonicity_profile_with(v, xi, alpha, lambda, r, radii, Exec::default())
}

#[allow(clippy::too_many_arguments)]
pub fn monotonicity_profile_with(
    v: &DiscreteVarifold,
    xi: &V3,
    alpha: f64,
    lambda: f64,
    r: f64,
    radii: &[f64],
    exec: Exec,
) -> Result<MonotonicityProfile> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha must lie in (0, 1]"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("Lambda must be nonnegative"));
    }
    check_radii(radii, r)?;
    check_point(v, xi, radii[radii.len() - 1])?;
    let ratio: Vec<f64> = radii.iter().map(|&rho| mass_in_ball(v, xi, rho, exec) / (rho * rho)).collect();
    let weighted = radii
        .iter()
        .zip(&ratio)
        .map(|(&rho, q)| (lambda * r.powf(1.0 - alpha) * rho.powf(alpha)).exp() * q)
        .collect();
    let inner = deficit_ball(v, xi, radii[0], exec);
    let deficit = radii.iter().map(|&rho| deficit_ball(v, xi, rho, exec) - inner).collect();
    Ok(MonotonicityProfile { xi: [xi.x, xi.y, xi.z], radii: radii.to_vec(), ratio, weighted, deficit })
}

/// Smallest `Λ` for which `(1/α) |H|(B_ρ) ≤ Λ (ρ/R)^{α−1} μ(B_ρ)` holds on every
/// listed radius.
pub fn allard_lambda(
    v: &DiscreteVarifold,
    h: &CurvatureMeasure,
    xi: &V3,
    alpha: f64,
    r: f64,
    radii: &[f64],
) -> Result<f64> {
    check_radii(radii, r)?;
    Ok(radii
        .iter()
        .map(|&rho| {
            let mu = mass_in_ball(v, xi, rho, Exec::default());
            if mu == 0.0 {
                return 0.0;
            }
            h.mass_in_ball(v, xi, rho) / (alpha * (rho / r).powf(alpha - 1.0) * mu)
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityClassification {
    pub radii: Vec<f64>,
    /// `r^{−2} |H|(B_r(ξ))`.
    pub density: Vec<f64>,
    /// `density(r) ≥ ε* r^{α−1}`.
    pub in_e: Vec<bool>,
}

pub fn density_classify(
    v: &DiscreteVarifold,
    xi: &V3,
    alpha: f64,
    eps_star: f64,
    radii: &[f64],
) -> Result<DensityClassification> {
    let h = mean_curvature_measure(v)?;
    density_classify_with(v, &h, xi, alpha, eps_star, radii)
}

pub fn density_classify_with(
    v: &DiscreteVarifold,
    h: &CurvatureMeasure,
    xi: &V3,
    alpha: f64,
    eps_star: f64,
    radii: &[f64],
) -> Result<DensityClassification> {
    check_radii(radii, f64::INFINITY)?;
    check_point(v, xi, radii[radii.len() - 1])?;
    let density: Vec<f64> = radii.iter().map(|&r| h.mass_in_ball(v, xi, r) / (r * r)).collect();
    let in_e = radii.iter().zip(&density).map(|(&r, &d)| d >= eps_star * r.powf(alpha - 1.0)).collect();
    Ok(DensityClassification { radii: radii.to_vec(), density, in_e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::mesh::{double_cone, plane, sphere};
    use std::f64::consts::PI;

    #[test]
    fn plane_ratio_is_pi() {
        let m = plane(2.0, 0.1).unwrap();
        let p = monotonicity_profile(&m, &V3::new(0.1, 0.2, 0.0), 1.0, 0.0, 1.0, &[0.3, 0.6, 1.0]).unwrap();
        for q in &p.ratio {
            assert!((q - PI).abs() < 1e-12);
        }
        assert!(p.deficit.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn offset_plane_deficit_identity() {
        let m = plane(3.0, 0.2).unwrap();
        let d = 0.2;
        let xi = V3::new(0.0, 0.0, d);
        let radii = [0.4, 0.8, 1.6];
        let p = monotonicity_profile(&m, &xi, 1.0, 0.0, 2.0, &radii).unwrap();
        for k in 0..3 {
            let rho = radii[k];
            assert!((p.ratio[k] - PI * (1.0 - d * d / (rho * rho))).abs() < 1e-12);
            assert!((p.ratio[k] - p.ratio[0] - p.deficit[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_ratio_constant() {
        let theta0 = 0.585_281_588_932_581;
        let m = double_cone(theta0, 1.0, 0.05).unwrap();
        let p = monotonicity_profile(&m, &V3::zeros(), 1.0, 0.0, 1.0, &[0.1, 0.25, 0.5, 0.9]).unwrap();
        let (lo, hi) = p.ratio.iter().fold((f64::MAX, 0.0f64), |(a, b), &q| (a.min(q), b.max(q)));
        assert!(hi / lo - 1.0 < 1e-9);
        assert!((p.ratio[0] - 2.0 * PI * theta0.sin()).abs() < 0.01);
        assert!(p.deficit.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn sphere_weighted_nondecreasing() {
        let m = sphere(1.0, 0.05).unwrap();
        let xi = m.vertices[0];
        let p = monotonicity_profile(&m, &xi, 1.0, 2.0, 1.0, &[0.2, 0.4, 0.8]).unwrap();
        assert!(p.weighted.windows(2).all(|w| w[1] >= w[0]));
        // Closed-form cap area 2π(1 − cos s) with ρ = 2 sin(s/2) is πρ².
        assert!(p.ratio.iter().all(|q| (q - PI).abs() < 0.01));
    }

    #[test]
    fn density_of_plane_is_zero() {
        let m = plane(1.0, 0.1).unwrap();
        let c = density_classify(&m, &V3::zeros(), 0.5, 0.1, &[0.1, 0.5]).unwrap();
        assert!(c.density.iter().all(|&d| d < 1e-12));
        assert!(c.in_e.iter().all(|&b| !b));
    }

    #[test]
    fn bad_inputs() {
        let m = plane(1.0, 0.2).unwrap();
        assert!(monotonicity_profile(&m, &V3::zeros(), 1.0, 0.0, 1.0, &[0.5, 0.3]).is_err());
        assert!(matches!(
            monotonicity_profile(&m, &V3::new(5.0, 0.0, 0.0), 1.0, 0.0, 1.0, &[0.5]),
            Err(Error::Domain(_))
        ));
    }
}
