//! The homogeneous double-cone solution `u = ρ · max(scale · f(θ), 0)`.
//!
//! `f` is the symmetric p-Legendre profile with `f(π/2) = 1`, `ḟ(π/2) = 0`,
//! extended to `(π/2, π)` by `f(π − θ) = f(θ)`. The positivity set is the band
//! `θ₀ < θ < π − θ₀`; the zero set is two solid cones around the axis.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::energy::{lambda_star, EnergyModel};
use crate::error::{invalid, Error, Result};
use crate::profile::{locate_zero, ProfileOptions, ProfileSolution, ProfileState};

#[derive(Clone, Debug)]
pub struct DoubleConeSolution {
    pub p: f64,
    pub profile: ProfileSolution,
    pub theta0: f64,
    /// `ḟ(θ₀)` of the unit profile (positive).
    pub fdot0: f64,
    pub scale: f64,
    pub target_grad: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeGeometry {
    pub theta0: f64,
    pub band_area: f64,
    pub geodesic_curvature: f64,
    pub total_sphere_curvature: f64,
    /// Number of components of the zero set on the sphere.
    pub zero_components: usize,
}

impl ConeGeometry {
    pub fn from_theta0(theta0: f64) -> Self {
        let (s, c) = theta0.sin_cos();
        let flat = theta0 == FRAC_PI_2;
        // Two circles of length 2π sin θ₀ with κ = cot θ₀; written as 4π cos θ₀
        // so that it is bitwise equal to the band area.
        let band = if flat { 0.0 } else { 4.0 * PI * c };
        Self {
            theta0,
            band_area: band,
            geodesic_curvature: if flat { 0.0 } else { c / s },
            total_sphere_curvature: band,
            zero_components: 2,
        }
    }

    /// Mean curvature of the free-boundary cone at distance `rho` from the apex.
    pub fn cone_mean_curvature_at(&self, rho: f64) -> f64 {
        self.geodesic_curvature / rho
    }

    /// Area of one zero cap plus the curvature of its boundary circle.
    pub fn gauss_bonnet_per_cap(&self) -> f64 {
        2.0 * PI * (1.0 - self.theta0.cos()) + 0.5 * self.total_sphere_curvature
    }
}

/// Spherical coordinates `(ρ, θ, φ)` with θ the polar angle from `+z`.
pub fn spherical(x: [f64; 3]) -> (f64, f64, f64) {
    let rho = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let theta = (x[0].hypot(x[1])).atan2(x[2]);
    let phi = x[1].atan2(x[0]);
    (rho, theta, phi)
}

pub fn build_double_cone(p: f64, target_grad: f64) -> Result<DoubleConeSolution> {
    build_double_cone_with(p, target_grad, ProfileOptions::with_tol(1e-12))
}

pub fn build_double_cone_with(
    p: f64,
    target_grad: f64,
    opts: ProfileOptions,
) -> Result<DoubleConeSolution> {
    if !(target_grad > 0.0 && target_grad.is_finite()) {
        return Err(invalid("target gradient must be positive"));
    }
    let profile = locate_zero(p, ProfileState::symmetric(), opts)?;
    let theta0 = profile.theta0.expect("located zero");
    let fdot0 = profile.fdot_at_theta0.expect("located zero").abs();
    if fdot0 == 0.0 {
        return Err(Error::Singular("ḟ(θ₀) = 0".into()));
    }
    Ok(DoubleConeSolution { p, profile, theta0, fdot0, scale: target_grad / fdot0, target_grad })
}

impl DoubleConeSolution {
    /// `(f, ḟ, f̈)` of the unit profile at polar angle `theta`, reflected about
    /// the equator; `None` inside the zero cones beyond the integrated range.
    pub fn profile_at(&self, theta: f64) -> Option<(f64, f64, f64)> {
        let (folded, sign) = if theta > FRAC_PI_2 { (PI - theta, -1.0) } else { (theta, 1.0) };
        self.profile.eval(folded).map(|(f, fd, fdd)| (f, sign * fd, fdd))
    }

    fn in_band(&self, theta: f64) -> bool {
        theta > self.theta0 && theta < PI - self.theta0
    }

    pub fn u(&self, x: [f64; 3]) -> f64 {
        let (rho, theta, _) = spherical(x);
        if rho == 0.0 || !self.in_band(theta) {
            return 0.0;
        }
        let (f, _, _) = self.profile_at(theta).expect("band inside profile range");
        rho * (self.scale * f).max(0.0)
    }

    /// Gradient in the frame `(e_ρ, e_φ, e_θ)`: `scale · (f, 0, ḟ)`.
    pub fn grad_spherical(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let (rho, theta, _) = spherical(x);
        if rho == 0.0 {
            return Err(Error::Singular("gradient at the apex".into()));
        }
        if theta < self.theta0 || theta > PI - self.theta0 {
            return Ok([0.0; 3]);
        }
        let (f, fdot, _) = self.profile_at(theta).expect("band inside profile range");
        Ok([self.scale * f, 0.0, self.scale * fdot])
    }

    pub fn eval_grad(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let [gr, _, gt] = self.grad_spherical(x)?;
        let (_, theta, phi) = spherical(x);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let e_rho = [st * cp, st * sp, ct];
        let e_theta = [ct * cp, ct * sp, -st];
        Ok([0, 1, 2].map(|i| gr * e_rho[i] + gt * e_theta[i]))
    }

    /// `|2 sinθ g f + d/dθ[sinθ g ḟ]|` with `g = (f² + ḟ²)^{(p−2)/2}`.
    pub fn p_harmonic_residual(&self, x: [f64; 3]) -> Result<f64> {
        let (rho, theta, _) = spherical(x);
        if rho == 0.0 || !self.in_band(theta) {
            return Err(Error::Domain(format!("θ = {theta} outside the positivity band")));
        }
        let (f, fdot, fddot) = self.profile_at(theta).expect("band inside profile range");
        Ok(flux_residual(self.p, theta, f, fdot, fddot).abs())
    }

    pub fn geometry(&self) -> ConeGeometry {
        ConeGeometry::from_theta0(self.theta0)
    }

    /// `|∇u|` at polar angle `theta` inside the band.
    pub fn grad_modulus_at(&self, theta: f64) -> Option<f64> {
        self.profile_at(theta).map(|(f, fd, _)| self.scale * f.hypot(fd))
    }

    /// Gradient constant of the power law with explicit `λ = 1`.
    pub fn lambda_star_unit(&self) -> Result<f64> {
        Ok(lambda_star(&EnergyModel::power(self.p, 1.0)?)?.lambda_star)
    }
}

/// Divergence-form residual of the p-Laplace equation for `u = ρ f(θ)`,
/// multiplied by `ρ sin θ`.
pub fn flux_residual(p: f64, theta: f64, f: f64, fdot: f64, fddot: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let n = f * f + fdot * fdot;
    let g = n.powf(0.5 * (p - 2.0));
    let dg = (p - 2.0) * n.powf(0.5 * (p - 4.0)) * (f * fdot + fdot * fddot);
    2.0 * s * g * f + c * g * fdot + s * (dg * fdot + g * fddot)
}
