//! Angular profile of 1-homogeneous p-harmonic functions in ℝ³.
//!
//! For `u = ρ f(θ)` the p-Laplace equation reduces to
//!
//! ```text
//! f̈ + (f + cot θ ḟ) (f² + ḟ²) / (f² + (p−1) ḟ²) + f = 0,
//! ```
//!
//! a second-order ODE on `θ ∈ (0, π)`. It is integrated with Dormand–Prince 5(4);
//! the dense output is a quintic Hermite interpolant built from `(f, ḟ, f̈)` and
//! `(ḟ, f̈, f⃛)` at the accepted nodes, so `f̈` between nodes comes from
//! differentiating the interpolant rather than re-evaluating the ODE.
//!
//! The substitution `ḟ = w f` gives the first-order Riccati form
//!
//! ```text
//! ẇ = −w² − (1 + w cot θ)(1 + w²)/(1 + (p−1) w²) − 1.
//! ```

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::ode::{self, OdeOptions, Trajectory};

/// Smallest admissible distance from the poles `θ = 0, π`.
pub const DEFAULT_THETA_MIN: f64 = 1e-6;
const DENOM_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileState {
    pub theta: f64,
    pub f: f64,
    pub fdot: f64,
}

impl ProfileState {
    pub fn new(theta: f64, f: f64, fdot: f64) -> Self {
        Self { theta, f, fdot }
    }

    /// The symmetric double-cone initial condition `(π/2, 1, 0)`.
    pub fn symmetric() -> Self {
        Self::new(FRAC_PI_2, 1.0, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiState {
    pub theta: f64,
    pub w: f64,
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid("p must exceed 1"))
    }
}

/// `f̈` from the p-Legendre equation.
pub fn legendre_rhs(state: ProfileState, p: f64) -> Result<f64> {
    let ProfileState { theta, f, fdot } = state;
    let denom = f * f + (p - 1.0) * fdot * fdot;
    if !(denom >= DENOM_FLOOR) {
        return Err(Error::Singular(format!("f² + (p−1)ḟ² = {denom:e} at θ = {theta}")));
    }
    let cot = theta.cos() / theta.sin();
    let num = f * f + fdot * fdot;
    Ok(-(f + cot * fdot) * num / denom - f)
}

/// `f⃛ = d/dθ f̈` along solutions, by the chain rule on [`legendre_rhs`].
pub fn legendre_jerk(state: ProfileState, fddot: f64, p: f64) -> f64 {
    let ProfileState { theta, f, fdot } = state;
    let (s, c) = theta.sin_cos();
    let cot = c / s;
    let num = f * f + fdot * fdot;
    let den = f * f + (p - 1.0) * fdot * fdot;
    let q = num / den;
    let a = f + cot * fdot;
    let dq_df = 2.0 * f * (p - 2.0) * fdot * fdot / (den * den);
    let dq_dfdot = 2.0 * fdot * f * f * (2.0 - p) / (den * den);
    let dr_dtheta = fdot * q / (s * s);
    let dr_df = -q - a * dq_df - 1.0;
    let dr_dfdot = -cot * q - a * dq_dfdot;
    dr_dtheta + dr_df * fdot + dr_dfdot * fddot
}

/// Residual of the polynomial form
/// `f̈(f²+(p−1)ḟ²) + f(2f²+pḟ²) + cot θ ḟ(f²+ḟ²)`.
pub fn expanded_residual(theta: f64, f: f64, fdot: f64, fddot: f64, p: f64) -> f64 {
    let cot = theta.cos() / theta.sin();
    fddot * (f * f + (p - 1.0) * fdot * fdot)
        + f * (2.0 * f * f + p * fdot * fdot)
        + cot * fdot * (f * f + fdot * fdot)
}

/// `ẇ` from the Riccati reduction.
pub fn riccati_rhs(state: RiccatiState, p: f64) -> Result<f64> {
    let RiccatiState { theta, w } = state;
    if !w.is_finite() || !theta.is_finite() {
        return Err(Error::NumericalDomain("non-finite Riccati state".into()));
    }
    let cot = theta.cos() / theta.sin();
    Ok(-w * w - (1.0 + w * cot) * (1.0 + w * w) / (1.0 + (p - 1.0) * w * w) - 1.0)
}

/// Integrates the Riccati equation for `w = ḟ/f` (valid while `f ≠ 0`).
pub fn integrate_riccati(
    p: f64,
    ic: RiccatiState,
    theta_end: f64,
    tol: f64,
) -> Result<Trajectory<1>> {
    check_p(p)?;
    let rhs = |theta: f64, y: &[f64; 1]| Ok([riccati_rhs(RiccatiState { theta, w: y[0] }, p)?]);
    ode::integrate(rhs, ic.theta, [ic.w], theta_end, OdeOptions::with_tol(tol), |_, _| false)
}

#[derive(Clone, Copy, Debug)]
pub struct ProfileOptions {
    pub tol: f64,
    pub theta_min: f64,
}

impl ProfileOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, theta_min: DEFAULT_THETA_MIN }
    }
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self::with_tol(1e-10)
    }
}

/// Node data for the Hermite dense output.
#[derive(Clone, Copy, Debug)]
struct Node {
    state: ProfileState,
    fddot: f64,
    jerk: f64,
}

/// Trajectory of the p-Legendre equation with dense output.
#[derive(Clone, Debug)]
pub struct ProfileSolution {
    pub p: f64,
    nodes: Vec<Node>,
    pub theta0: Option<f64>,
    pub fdot_at_theta0: Option<f64>,
}

fn hermite5(s: f64, h: f64, y0: [f64; 3], y1: [f64; 3]) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let b = [
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        0.5 * (s3 - 2.0 * s4 + s5),
    ];
    let db = [
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
        30.0 * s2 - 60.0 * s3 + 30.0 * s4,
        -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
        0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4),
    ];
    let c = [y0[0], h * y0[1], h * h * y0[2], y1[0], h * y1[1], h * h * y1[2]];
    let v: f64 = (0..6).map(|i| c[i] * b[i]).sum();
    let d: f64 = (0..6).map(|i| c[i] * db[i]).sum::<f64>() / h;
    (v, d)
}

impl ProfileSolution {
    fn from_trajectory(p: f64, traj: &Trajectory<2>) -> Result<Self> {
        let nodes = traj
            .t
            .iter()
            .zip(&traj.y)
            .map(|(&theta, y)| {
                let state = ProfileState::new(theta, y[0], y[1]);
                let fddot = legendre_rhs(state, p)?;
                Ok(Node { state, fddot, jerk: legendre_jerk(state, fddot, p) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { p, nodes, theta0: None, fdot_at_theta0: None })
    }

    /// Accepted integrator nodes, ordered along the integration direction.
    pub fn samples(&self) -> Vec<ProfileState> {
        self.nodes.iter().map(|n| n.state).collect()
    }

    pub fn theta_range(&self) -> (f64, f64) {
        let a = self.nodes.first().unwrap().state.theta;
        let b = self.nodes.last().unwrap().state.theta;
        (a.min(b), a.max(b))
    }

    pub fn start(&self) -> ProfileState {
        self.nodes[0].state
    }

    pub fn end(&self) -> ProfileState {
        self.nodes.last().unwrap().state
    }

    fn segment(&self, theta: f64) -> Option<usize> {
        let n = self.nodes.len();
        if n < 2 {
            return None;
        }
        let forward = self.nodes[n - 1].state.theta > self.nodes[0].state.theta;
        let key = |node: &Node| if forward { node.state.theta } else { -node.state.theta };
        let target = if forward { theta } else { -theta };
        let (lo, hi) = (key(&self.nodes[0]), key(&self.nodes[n - 1]));
        if !(target >= lo && target <= hi) {
            return None;
        }
        let idx = self.nodes.partition_point(|node| key(node) <= target);
        Some(idx.clamp(1, n - 1) - 1)
    }

    /// `(f, ḟ, f̈)` at `theta` from the dense output, or `None` outside the
    /// integrated range.
    pub fn eval(&self, theta: f64) -> Option<(f64, f64, f64)> {
        if self.nodes.len() == 1 {
            let n = self.nodes[0];
            return (theta == n.state.theta).then_some((n.state.f, n.state.fdot, n.fddot));
        }
        let i = self.segment(theta)?;
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let h = b.state.theta - a.state.theta;
        let s = (theta - a.state.theta) / h;
        let (f, _) = hermite5(
            s,
            h,
            [a.state.f, a.state.fdot, a.fddot],
            [b.state.f, b.state.fdot, b.fddot],
        );
        let (fdot, fddot) =
            hermite5(s, h, [a.state.fdot, a.fddot, a.jerk], [b.state.fdot, b.fddot, b.jerk]);
        Some((f, fdot, fddot))
    }

    /// Expanded-form residual with `f̈` taken from the interpolant derivative.
    pub fn residual_at(&self, theta: f64) -> Option<f64> {
        self.eval(theta).map(|(f, fdot, fddot)| expanded_residual(theta, f, fdot, fddot, self.p))
    }

    /// Residual at every accepted node.
    pub fn node_residuals(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| expanded_residual(n.state.theta, n.state.f, n.state.fdot, n.fddot, self.p))
            .collect()
    }

    /// `n` equally spaced dense samples from the start to the end of the run:
    /// `(θ, f, ḟ, residual)`.
    pub fn dense_samples(&self, n: usize) -> Vec<(f64, f64, f64, f64)> {
        let a = self.start().theta;
        let b = self.end().theta;
        (0..n)
            .map(|k| {
                let theta = match k {
                    0 => a,
                    _ if k + 1 == n => b,
                    _ => a + (b - a) * k as f64 / (n - 1) as f64,
                };
                let (f, fdot, fddot) = self.eval(theta).expect("inside integrated range");
                (theta, f, fdot, expanded_residual(theta, f, fdot, fddot, self.p))
            })
            .collect()
    }
}

fn validate_theta(theta: f64, theta_min: f64, what: &str) -> Result<()> {
    if theta > theta_min && theta < PI - theta_min {
        Ok(())
    } else {
        Err(invalid(format!("{what} = {theta} must lie in ({theta_min}, π − {theta_min})")))
    }
}

fn legendre_system(p: f64, theta_min: f64) -> impl Fn(f64, &[f64; 2]) -> Result<[f64; 2]> {
    move |theta, y| {
        if !(theta > theta_min && theta < PI - theta_min) {
            return Err(Error::Singular(format!("θ = {theta} reached the pole guard")));
        }
        Ok([y[1], legendre_rhs(ProfileState::new(theta, y[0], y[1]), p)?])
    }
}

/// Integrates the p-Legendre equation from `ic` to `theta_end`.
pub fn integrate(p: f64, ic: ProfileState, theta_end: f64, opts: ProfileOptions) -> Result<ProfileSolution> {
    check_p(p)?;
    if !(opts.tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    validate_theta(ic.theta, opts.theta_min, "initial theta")?;
    validate_theta(theta_end, opts.theta_min, "theta_end")?;
    legendre_rhs(ic, p)?;
    let traj = ode::integrate(
        legendre_system(p, opts.theta_min),
        ic.theta,
        [ic.f, ic.fdot],
        theta_end,
        OdeOptions::with_tol(opts.tol),
        |_, _| false,
    )?;
    ProfileSolution::from_trajectory(p, &traj)
}

/// Integrates from `ic` toward `θ = 0` until `f` changes sign and locates the
/// zero by bisection on the dense output. The returned solution covers
/// `[θ₀, ic.theta]` (slightly past `θ₀`).
pub fn locate_zero(p: f64, ic: ProfileState, opts: ProfileOptions) -> Result<ProfileSolution> {
    check_p(p)?;
    if !(ic.f > 0.0) {
        return Err(invalid("initial f must be positive"));
    }
    validate_theta(ic.theta, opts.theta_min, "initial theta")?;
    let end = opts.theta_min * (1.0 + 1e-9);
    let traj = ode::integrate(
        legendre_system(p, opts.theta_min),
        ic.theta,
        [ic.f, ic.fdot],
        end,
        OdeOptions::with_tol(opts.tol),
        |_, y| y[0] <= 0.0,
    );
    let traj = match traj {
        Ok(t) => t,
        Err(Error::IntegrationFailure { .. }) => return Err(Error::NoZero { theta_min: opts.theta_min }),
        Err(e) => return Err(e),
    };
    if !traj.stopped {
        return Err(Error::NoZero { theta_min: opts.theta_min });
    }
    let mut sol = ProfileSolution::from_trajectory(p, &traj)?;
    let n = traj.t.len();
    // f > 0 at `hi`, f ≤ 0 at `lo`.
    let (mut lo, mut hi) = (traj.t[n - 1], traj.t[n - 2]);
    if traj.y[n - 1][0] == 0.0 {
        hi = lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (f, _, _) = sol.eval(mid).expect("bracket inside trajectory");
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (flo, _, _) = sol.eval(lo).unwrap();
    let (fhi, _, _) = sol.eval(hi).unwrap();
    let theta0 = if flo.abs() <= fhi.abs() { lo } else { hi };
    let (_, fdot0, _) = sol.eval(theta0).unwrap();
    sol.theta0 = Some(theta0);
    sol.fdot_at_theta0 = Some(fdot0);
    Ok(sol)
}

/// Zero `θ₀` of the profile started at `ic` and the slope `ḟ(θ₀)`.
pub fn find_theta0(p: f64, ic: ProfileState, tol: f64) -> Result<(f64, f64)> {
    let sol = locate_zero(p, ic, ProfileOptions::with_tol(tol))?;
    Ok((sol.theta0.unwrap(), sol.fdot_at_theta0.unwrap()))
}
