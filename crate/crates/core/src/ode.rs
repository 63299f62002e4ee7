//! Dormand–Prince 5(4) integrator with PI step-size control and the
//! fourth-order continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step magnitude; `None` picks 1% of the interval.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Steps smaller than this (relative to `max(1, |t|)`) abort the run.
    pub min_step: f64,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, initial_step: None, max_steps: 200_000, min_step: 1e-14 }
    }
}

/// Continuous extension of one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])))
        })
    }
}

/// Accepted nodes plus dense output of a Dormand–Prince run.
#[derive(Clone, Debug)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub steps: Vec<DenseStep<N>>,
    pub rejected: usize,
    /// Whether the run ended because the stop predicate fired.
    pub stopped: bool,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }

    /// Index of the step whose closed interval contains `t`.
    pub fn step_index(&self, t: f64) -> Option<usize> {
        if self.steps.is_empty() {
            return None;
        }
        let forward = self.steps[0].h > 0.0;
        let key = |s: &DenseStep<N>| if forward { s.t1() } else { -s.t1() };
        let target = if forward { t } else { -t };
        let idx = self.steps.partition_point(|s| key(s) < target);
        let idx = idx.min(self.steps.len() - 1);
        let s = &self.steps[idx];
        let (lo, hi) = if forward { (s.t0, s.t1()) } else { (s.t1(), s.t0) };
        (t >= lo && t <= hi).then_some(idx)
    }

    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        self.step_index(t).map(|i| self.steps[i].eval(t))
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// `stop` is evaluated after every accepted step; returning `true` ends the
/// run early with [`Trajectory::stopped`] set. An `Err` from `rhs` rejects the
/// trial step and shrinks the step size; when the step underflows the run fails
/// with [`Error::IntegrationFailure`] carrying the last accepted state.
pub fn integrate<const N: usize, F, S>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
    mut stop: S,
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    S: FnMut(f64, &[f64; N]) -> bool,
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidInput("ODE tolerances must be positive".into()));
    }
    let mut traj = Trajectory { t: vec![t0], y: vec![y0], steps: Vec::new(), rejected: 0, stopped: false };
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(traj);
    }
    let dir = span.signum();
    let mut h = dir * opts.initial_step.unwrap_or(0.01 * span.abs()).min(span.abs());
    let mut t = t0;
    let mut y = y0;
    let fail = |t: f64, y: &[f64; N], reason: &str| Error::IntegrationFailure {
        t,
        state: y.to_vec(),
        reason: reason.to_string(),
    };
    let mut k1 = rhs(t, &y).map_err(|e| fail(t, &y, &e.to_string()))?;
    let mut fac_old: f64 = 1e-4;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let safe = 0.9;
    let mut last_rejected = false;

    for _ in 0..opts.max_steps {
        let remaining = t1 - t;
        if remaining * dir <= 0.0 {
            return Ok(traj);
        }
        if (h.abs()) > remaining.abs() {
            h = remaining;
        }
        if h.abs() < opts.min_step * t.abs().max(1.0) {
            return Err(fail(t, &y, "step size underflow"));
        }

        let trial = (|| -> Result<_> {
            let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = rhs(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = rhs(
                t + h,
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y_new =
                axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = rhs(t + h, &y_new)?;
            Ok((k2, k3, k4, k5, k6, k7, y_new))
        })();

        let (_k2, k3, k4, k5, k6, k7, y_new) = match trial {
            Ok(v) => v,
            Err(_) => {
                traj.rejected += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }
        };

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            traj.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(beta) / safe).clamp(0.2, 10.0);
            fac_old = err.max(1e-4);
            let rcont = {
                let r1 = y;
                let r2: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
                let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
                let r5: [f64; N] = std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                });
                [r1, r2, r3, r4, r5]
            };
            traj.steps.push(DenseStep { t0: t, h, rcont });
            t += h;
            if (t1 - t) * dir <= 0.0 || (t1 - t).abs() < 1e-15 * t1.abs().max(1.0) {
                t = t1;
            }
            y = y_new;
            k1 = k7;
            traj.t.push(t);
            traj.y.push(y);
            if stop(t, &y) {
                traj.stopped = true;
                return Ok(traj);
            }
            let mut h_new = h / fac;
            if last_rejected {
                h_new = dir * h_new.abs().min(h.abs());
            }
            last_rejected = false;
            h = h_new;
        } else {
            traj.rejected += 1;
            h /= (fac11 / safe).min(5.0);
            last_rejected = true;
        }
    }
    Err(fail(t, &y, "maximum number of steps exceeded"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy_and_dense_output() {
        let rhs = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let traj = integrate(rhs, 0.0, [0.0, 1.0], 10.0, OdeOptions::with_tol(1e-11), |_, _| false)
            .unwrap();
        let (t, y) = traj.last();
        assert_eq!(t, 10.0);
        assert!((y[0] - 10f64.sin()).abs() < 1e-9);
        for k in 0..200 {
            let s = 0.05 * k as f64;
            let v = traj.eval(s).unwrap();
            assert!((v[0] - s.sin()).abs() < 1e-8, "dense error at {s}");
        }
    }

    #[test]
    fn backward_direction() {
        let rhs = |_t: f64, y: &[f64; 1]| Ok([y[0]]);
        let traj =
            integrate(rhs, 1.0, [1.0], 0.0, OdeOptions::with_tol(1e-12), |_, _| false).unwrap();
        let (_, y) = traj.last();
        assert!((y[0] - (-1f64).exp()).abs() < 1e-11);
        assert!(traj.eval(0.5).is_some());
        assert!(traj.eval(1.5).is_none());
    }

    #[test]
    fn stop_predicate_ends_run() {
        let rhs = |_t: f64, _y: &[f64; 1]| Ok([-1.0]);
        let traj =
            integrate(rhs, 0.0, [1.0], 5.0, OdeOptions::with_tol(1e-10), |_, y| y[0] < 0.0).unwrap();
        assert!(traj.stopped);
        assert!(traj.last().1[0] < 0.0);
    }

    #[test]
    fn blow_up_reports_failure_with_last_state() {
        let rhs = |_t: f64, y: &[f64; 1]| {
            if y[0] > 1e6 {
                Err(Error::Singular("too large".into()))
            } else {
                Ok([y[0] * y[0]])
            }
        };
        let err = integrate(rhs, 0.0, [1.0], 2.0, OdeOptions::with_tol(1e-8), |_, _| false)
            .unwrap_err();
        match err {
            Error::IntegrationFailure { t, state, .. } => {
                assert!(t < 1.0 && t > 0.99);
                assert!(state[0] > 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
