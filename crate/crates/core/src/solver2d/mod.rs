//! Discrete minimization of `J_F(u) = ∫ F(|∇u|²) + λ² χ{u>0}` on a rectangle.
//!
//! Nodes `(i, j)` sit at `(i h, j h)`, `0 ≤ i ≤ nx`, `0 ≤ j ≤ ny`. Each cell is
//! split into the four corner triangles spanned by the two cell edges at a
//! corner; the gradient energy of a cell is the average over them, which keeps
//! every symmetry of the square lattice. The area term uses the mean of the four
//! corner values.

mod contour;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{lambda_star, EnergyKind, EnergyModel, ModelDescriptor, ModelRegistry};
use crate::error::{invalid, Error, Result};
use crate::par::Exec;

pub use contour::{bernoulli_residual, extract_fb, line_deviation, BernoulliResidual, FbSample, FreeBoundaryPolyline};

/// Boundary data presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dirichlet {
    /// `(a − x)⁺`.
    Slab { a: f64 },
    Constant { m: f64 },
    Zero,
}

impl Dirichlet {
    pub fn value(&self, x: f64, _y: f64) -> f64 {
        match *self {
            Dirichlet::Slab { a } => (a - x).max(0.0),
            Dirichlet::Constant { m } => m,
            Dirichlet::Zero => 0.0,
        }
    }
}

impl FromStr for Dirichlet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| v.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let d = match s.split_once(':') {
            Some(("slab", a)) => Dirichlet::Slab { a: num(a)? },
            Some(("constant", m)) => Dirichlet::Constant { m: num(m)? },
            None if s == "zero" => Dirichlet::Zero,
            _ => return Err(Error::Parse(format!("unknown Dirichlet preset {s:?}"))),
        };
        match d {
            Dirichlet::Slab { a } if !a.is_finite() => Err(invalid("slab offset must be finite")),
            Dirichlet::Constant { m } if !(m >= 0.0 && m.is_finite()) => Err(invalid("Dirichlet data must be nonnegative")),
            _ => Ok(d),
        }
    }
}

impl fmt::Display for Dirichlet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dirichlet::Slab { a } => write!(f, "slab:{a}"),
            Dirichlet::Constant { m } => write!(f, "constant:{m}"),
            Dirichlet::Zero => write!(f, "zero"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Grid2DState {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Node values, row-major in `j`.
    pub u: Vec<f64>,
    pub dirichlet: Dirichlet,
    pub model: EnergyModel,
    pub smoothing_eps: f64,
}

impl Grid2DState {
    /// State with boundary nodes set to the preset and interior nodes to zero.
    pub fn new(nx: usize, ny: usize, h: f64, model: EnergyModel, dirichlet: Dirichlet) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(invalid("grid needs at least 2 cells per side"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h must be positive"));
        }
        let mut s = Self { nx, ny, h, u: vec![0.0; (nx + 1) * (ny + 1)], dirichlet, model, smoothing_eps: 0.0 };
        s.apply_dirichlet();
        Ok(s)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    fn apply_dirichlet(&mut self) {
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                if self.is_boundary(i, j) {
                    let (x, y) = self.coords(i, j);
                    let k = self.idx(i, j);
                    self.u[k] = self.dirichlet.value(x, y);
                }
            }
        }
    }

    /// Sets every node to `f(x, y)⁺`, then restores the boundary data.
    pub fn set_field<F: Fn(f64, f64) -> f64>(&mut self, f: F) {
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                let (x, y) = self.coords(i, j);
                let k = self.idx(i, j);
                self.u[k] = f(x, y).max(0.0);
            }
        }
        self.apply_dirichlet();
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.u[self.idx(i, j)]
    }

    /// Nonnegative, finite, and equal to the boundary data on the boundary.
    pub fn validate(&self) -> Result<()> {
        if self.u.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::NumericalDomain("u must be finite and nonnegative".into()));
        }
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                if self.is_boundary(i, j) {
                    let (x, y) = self.coords(i, j);
                    if self.value(i, j) != self.dirichlet.value(x, y) {
                        return Err(invalid("boundary nodes must equal the Dirichlet data"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Treatment of the area term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Indicator {
    /// `clamp(s/ε, 0, 1)`.
    Smoothed(f64),
    Hard,
    Off,
}

#[derive(Clone, Copy)]
enum Density<'a> {
    P2,
    P3,
    P4,
    General(&'a EnergyModel),
}

impl<'a> Density<'a> {
    fn of(model: &'a EnergyModel) -> Self {
        match model.kind {
            EnergyKind::PowerLaw { p: 2.0 } => Density::P2,
            EnergyKind::PowerLaw { p: 3.0 } => Density::P3,
            EnergyKind::PowerLaw { p: 4.0 } => Density::P4,
            _ => Density::General(model),
        }
    }

    /// `(F(t), F'(t))`, with `F'` reported as 0 at `t = 0`.
    #[inline]
    fn eval(self, t: f64) -> (f64, f64) {
        match self {
            Density::P2 => (t, 1.0),
            Density::P3 => {
                let s = t.sqrt();
                (t * s, 1.5 * s)
            }
            Density::P4 => (t * t, 2.0 * t),
            Density::General(m) => (m.f(t), if t > 0.0 { m.f1(t) } else { 0.0 }),
        }
    }
}

struct Cells<'a> {
    nx: usize,
    ny: usize,
    h: f64,
    density: Density<'a>,
    lambda_sq: f64,
}

impl Cells<'_> {
    fn of(s: &Grid2DState) -> Cells<'_> {
        Cells::new(s.nx, s.ny, s.h, &s.model)
    }

    fn new(nx: usize, ny: usize, h: f64, model: &EnergyModel) -> Cells<'_> {
        Cells { nx, ny, h, density: Density::of(model), lambda_sq: model.lambda_sq() }
    }

    /// Energy of cell `c` and its derivative with respect to the corners
    /// `(i,j), (i+1,j), (i,j+1), (i+1,j+1)`.
    #[inline]
    fn cell(&self, u: &[f64], c: usize, ind: Indicator) -> (f64, [f64; 4]) {
        let (i, j) = (c % self.nx, c / self.nx);
        let w = self.nx + 1;
        let k = j * w + i;
        let (u00, u10, u01, u11) = (u[k], u[k + 1], u[k + w], u[k + w + 1]);
        let (dxb, dxt, dyl, dyr) = (u10 - u00, u11 - u01, u01 - u00, u11 - u10);
        let ih2 = 1.0 / (self.h * self.h);
        let (f00, g00) = self.density.eval((dxb * dxb + dyl * dyl) * ih2);
        let (f10, g10) = self.density.eval((dxb * dxb + dyr * dyr) * ih2);
        let (f01, g01) = self.density.eval((dxt * dxt + dyl * dyl) * ih2);
        let (f11, g11) = self.density.eval((dxt * dxt + dyr * dyr) * ih2);
        let area = self.h * self.h;
        let mut e = 0.25 * area * (f00 + f10 + f01 + f11);
        let gb = 0.5 * dxb * (g00 + g10);
        let gt = 0.5 * dxt * (g01 + g11);
        let gl = 0.5 * dyl * (g00 + g01);
        let gr = 0.5 * dyr * (g10 + g11);
        let mut d = [-gb - gl, gb - gr, -gt + gl, gt + gr];
        let uc = 0.25 * (u00 + u10 + u01 + u11);
        let (chi, dchi) = match ind {
            Indicator::Off => (0.0, 0.0),
            Indicator::Hard => ((uc > 0.0) as u8 as f64, 0.0),
            Indicator::Smoothed(eps) => {
                if uc < eps {
                    (uc.max(0.0) / eps, 1.0 / eps)
                } else {
                    (1.0, 0.0)
                }
            }
        };
        e += self.lambda_sq * area * chi;
        let da = 0.25 * self.lambda_sq * area * dchi;
        for x in &mut d {
            *x += da;
        }
        (e, d)
    }

    fn energy(&self, u: &[f64], ind: Indicator, exec: Exec) -> f64 {
        exec.sum_range(self.nx * self.ny, |c| self.cell(u, c, ind).0)
    }

    fn cell_energies(&self, u: &[f64], ind: Indicator, exec: Exec) -> Vec<f64> {
        exec.map_range(self.nx * self.ny, |c| self.cell(u, c, ind).0)
    }

    fn energy_grad(&self, u: &[f64], ind: Indicator, grad: &mut [f64], exec: Exec) -> f64 {
        self.cell_energies_grad(u, ind, grad, exec).iter().sum()
    }

    /// Cell energies and the gradient; gradient entries are gathered per node so
    /// the result does not depend on the execution policy.
    fn cell_energies_grad(&self, u: &[f64], ind: Indicator, grad: &mut [f64], exec: Exec) -> Vec<f64> {
        let cells = exec.map_range(self.nx * self.ny, |c| self.cell(u, c, ind));
        let (nx, ny) = (self.nx, self.ny);
        exec.fill(grad, |k| {
            let (i, j) = (k % (nx + 1), k / (nx + 1));
            let mut g = 0.0;
            if i < nx && j < ny {
                g += cells[j * nx + i].1[0];
            }
            if i > 0 && j < ny {
                g += cells[j * nx + i - 1].1[1];
            }
            if i < nx && j > 0 {
                g += cells[(j - 1) * nx + i].1[2];
            }
            if i > 0 && j > 0 {
                g += cells[(j - 1) * nx + i - 1].1[3];
            }
            g
        });
        cells.into_iter().map(|c| c.0).collect()
    }
}

/// Hard-indicator energy `Σ h² [F(|∇u|²) + λ² χ{u_cell > 0}]`.
pub fn energy(state: &Grid2DState) -> f64 {
    energy_with(state, Indicator::Hard, Exec::default())
}

pub fn energy_with(state: &Grid2DState, ind: Indicator, exec: Exec) -> f64 {
    Cells::of(state).energy(&state.u, ind, exec)
}

/// Energy gradient with respect to every node value.
pub fn energy_gradient(state: &Grid2DState, ind: Indicator, exec: Exec) -> Vec<f64> {
    let mut g = vec![0.0; state.u.len()];
    Cells::of(state).energy_grad(&state.u, ind, &mut g, exec);
    g
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    /// Smoothing scales, decreasing. Empty selects `default_eps`.
    pub eps: Vec<f64>,
    pub max_iters: usize,
    /// Stop when the projected gradient, divided by `h²`, falls below this.
    pub tol: f64,
    /// Number of coarser grids solved first.
    pub levels: usize,
    /// Re-solve the gradient energy on `{u > 0}` and on supports grown or peeled
    /// by whole node layers, keeping the lowest hard energy.
    pub polish: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { eps: Vec::new(), max_iters: 4000, tol: 1e-9, levels: 3, polish: true }
    }
}

/// `ε_k = m 2^{-k-1}` down to at most `4h`, with `m` the largest boundary value.
pub fn default_eps(state: &Grid2DState) -> Vec<f64> {
    let m = state.u.iter().copied().fold(0.0, f64::max).max(state.h);
    let mut eps = vec![0.5 * m];
    while *eps.last().unwrap() > 4.0 * state.h {
        eps.push(0.5 * eps.last().unwrap());
    }
    eps
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub level_h: f64,
    pub eps: Option<f64>,
    pub iterations: usize,
    pub energy_start: f64,
    pub energy_end: f64,
    pub kkt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeReport {
    pub stages: Vec<StageReport>,
    pub energy_hard: f64,
    /// Layers removed (negative) or added (positive) to `{u > 0}` by the kept
    /// polished candidate.
    pub polish_layers: Option<i32>,
}

/// Projected gradient, divided by `h²`, in the sup norm over free nodes.
fn kkt(u: &[f64], g: &[f64], free: &[bool], h: f64) -> f64 {
    u.iter()
        .zip(g)
        .zip(free)
        .filter(|(_, f)| **f)
        .map(|((x, g), _)| if *x > 0.0 { g.abs() } else { (-g).max(0.0) })
        .fold(0.0, f64::max)
        / (h * h)
}

/// `Σ (a_c − b_c)`; differencing per cell keeps small decreases visible.
fn diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x - y).sum()
}

/// Monotone accelerated projected gradient with backtracking on the step.
fn descend(
    cells: &Cells,
    u: &mut [f64],
    free: &[bool],
    ind: Indicator,
    max_iters: usize,
    tol: f64,
    exec: Exec,
) -> Result<StageReport> {
    let n = u.len();
    let pinned: Vec<f64> = u.to_vec();
    let mut x = u.to_vec();
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut z = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut xc = cells.cell_energies(&x, ind, exec);
    let e0: f64 = xc.iter().sum();
    // Running energy, updated by exact per-cell differences.
    let mut ex = e0;
    let (mut t, mut lip) = (1.0f64, 1.0f64);
    let mut history = vec![ex];
    let mut iters = 0;
    let mut res = f64::INFINITY;
    while iters < max_iters {
        iters += 1;
        let yc = cells.cell_energies_grad(&y, ind, &mut g, exec);
        for k in 0..n {
            if !free[k] {
                g[k] = 0.0;
            }
        }
        let zc = loop {
            for k in 0..n {
                z[k] = if free[k] { (y[k] - g[k] / lip).max(0.0) } else { pinned[k] };
            }
            let zc = cells.cell_energies(&z, ind, exec);
            let (mut lin, mut sq) = (0.0, 0.0);
            for k in 0..n {
                let d = z[k] - y[k];
                lin += g[k] * d;
                sq += d * d;
            }
            if diff(&zc, &yc) <= lin + 0.5 * lip * sq {
                break zc;
            }
            lip *= 2.0;
            if lip > 1e30 {
                return Err(Error::StepSize(format!("backtracking failed at iteration {iters}")));
            }
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        x_prev.copy_from_slice(&x);
        let dz = diff(&zc, &xc);
        if dz <= 0.0 {
            x.copy_from_slice(&z);
            xc = zc;
            ex += dz;
            for k in 0..n {
                y[k] = (x[k] + ((t - 1.0) / t_next) * (x[k] - x_prev[k])).max(0.0);
            }
            t = t_next;
            lip *= 0.9;
        } else {
            // Momentum restart.
            y.copy_from_slice(&x);
            t = 1.0;
        }
        history.push(ex);
        if history[history.len() - 2] < ex {
            return Err(Error::StepSize(format!("energy increased at iteration {iters}")));
        }
        if iters % 10 == 0 {
            cells.energy_grad(&x, ind, &mut g, exec);
            res = kkt(&x, &g, free, cells.h);
            if res <= tol || (iters >= 200 && history[iters - 200] == ex) {
                break;
            }
        }
    }
    let end: f64 = xc.iter().sum();
    if end > e0 + 1e-12 * e0.abs().max(1.0) {
        return Err(Error::StepSize(format!("stage energy rose from {e0} to {end}")));
    }
    u.copy_from_slice(&x);
    let eps = match ind {
        Indicator::Smoothed(e) => Some(e),
        _ => None,
    };
    Ok(StageReport { level_h: cells.h, eps, iterations: iters, energy_start: e0, energy_end: end, kkt: res })
}

fn boundary_mask(s: &Grid2DState) -> Vec<bool> {
    (0..s.u.len()).map(|k| !s.is_boundary(k % (s.nx + 1), k / (s.nx + 1))).collect()
}

/// Free nodes after removing (`dir < 0`) the support nodes next to a pinned zero,
/// or adding (`dir > 0`) the free-able nodes next to the support.
fn shift_support(s: &Grid2DState, base: &[bool], free: &[bool], dir: i32) -> Vec<bool> {
    let w = s.nx + 1;
    let zero = |k: usize| base[k] && !free[k];
    let neighbours = |k: usize| {
        let (i, j) = (k % w, k / w);
        [(i > 0).then(|| k - 1), (i < s.nx).then(|| k + 1), (j > 0).then(|| k - w), (j < s.ny).then(|| k + w)]
    };
    (0..free.len())
        .map(|k| {
            if !base[k] {
                return false;
            }
            let touch = |pred: &dyn Fn(usize) -> bool| neighbours(k).into_iter().flatten().any(pred);
            if dir < 0 {
                free[k] && !touch(&zero)
            } else {
                free[k] || touch(&|n| free[n] || (!base[n] && s.u[n] > 0.0))
            }
        })
        .collect()
}

/// Bilinear prolongation from the grid with half as many cells per side.
fn prolong(coarse: &Grid2DState, fine: &mut Grid2DState) {
    for j in 0..=fine.ny {
        for i in 0..=fine.nx {
            let (ci, cj) = (i / 2, j / 2);
            let (ri, rj) = (i % 2, j % 2);
            let v = |a: usize, b: usize| coarse.value((ci + a).min(coarse.nx), (cj + b).min(coarse.ny));
            let val = match (ri, rj) {
                (0, 0) => v(0, 0),
                (1, 0) => 0.5 * (v(0, 0) + v(1, 0)),
                (0, 1) => 0.5 * (v(0, 0) + v(0, 1)),
                _ => 0.25 * (v(0, 0) + v(1, 0) + v(0, 1) + v(1, 1)),
            };
            let k = fine.idx(i, j);
            fine.u[k] = val;
        }
    }
    fine.apply_dirichlet();
}

pub fn minimize(state: Grid2DState, schedule: &Schedule) -> Result<(Grid2DState, MinimizeReport)> {
    minimize_with(state, schedule, Exec::default())
}

/// Continuation over the smoothing scales, coarse grids first, followed by the
/// optional support polish. The smoothed energy never increases within a stage.
pub fn minimize_with(state: Grid2DState, schedule: &Schedule, exec: Exec) -> Result<(Grid2DState, MinimizeReport)> {
    state.validate()?;
    if schedule.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) || schedule.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps sequence must be positive and decreasing"));
    }
    if !(schedule.tol > 0.0) || schedule.max_iters == 0 {
        return Err(invalid("schedule needs positive tol and max_iters"));
    }
    let eps = if schedule.eps.is_empty() { default_eps(&state) } else { schedule.eps.clone() };
    let mut levels = 0;
    while levels < schedule.levels && state.nx.is_multiple_of(2 << levels) && state.ny.is_multiple_of(2 << levels) && state.nx >> (levels + 1) >= 4 && state.ny >> (levels + 1) >= 4 {
        levels += 1;
    }
    let mut stages = Vec::new();
    let mut current: Option<Grid2DState> = None;
    let mut done = 0;
    for lv in (0..=levels).rev() {
        let mut s = Grid2DState::new(state.nx >> lv, state.ny >> lv, state.h * (1 << lv) as f64, state.model.clone(), state.dirichlet)?;
        match &current {
            Some(c) => prolong(c, &mut s),
            None if lv == 0 => s.u.copy_from_slice(&state.u),
            None => {}
        }
        let free = boundary_mask(&s);
        let cells = Cells::new(s.nx, s.ny, s.h, &state.model);
        // Each grid runs the pending scales it resolves (ε ≥ 2h); a grid with
        // none pending repeats the last one.
        let take = if lv == 0 { eps.len() } else { eps.iter().filter(|&&e| e >= 2.0 * s.h).count().max(done) };
        let mut steps: Vec<Indicator> = eps[done..take].iter().map(|&e| Indicator::Smoothed(e)).collect();
        if steps.is_empty() && done > 0 {
            steps.push(Indicator::Smoothed(eps[done - 1]));
        }
        if current.is_none() {
            steps.insert(0, Indicator::Off);
        }
        done = take;
        for ind in steps {
            stages.push(descend(&cells, &mut s.u, &free, ind, schedule.max_iters, schedule.tol, exec)?);
        }
        s.smoothing_eps = if done > 0 { eps[done - 1] } else { 0.0 };
        current = Some(s);
    }
    let mut best = current.unwrap();
    let mut best_e = energy_with(&best, Indicator::Hard, exec);
    let mut polish_layers = None;
    if schedule.polish {
        let cells = Cells::new(best.nx, best.ny, best.h, &state.model);
        let base = boundary_mask(&best);
        let solve = |from: &Grid2DState, free: &[bool], stages: &mut Vec<StageReport>| -> Result<(Grid2DState, f64)> {
            let mut cand = from.clone();
            for (k, v) in cand.u.iter_mut().enumerate() {
                if base[k] && !free[k] {
                    *v = 0.0;
                }
            }
            stages.push(descend(&cells, &mut cand.u, free, Indicator::Off, 4 * schedule.max_iters, 1e-3 * schedule.tol, exec)?);
            let e = energy_with(&cand, Indicator::Hard, exec);
            Ok((cand, e))
        };
        let free: Vec<bool> = base.iter().zip(&best.u).map(|(f, v)| *f && *v > 0.0).collect();
        let (mut cur, mut cur_e) = solve(&best, &free, &mut stages)?;
        let mut cur_free = free;
        let mut layers = 0i32;
        for dir in [-1i32, 1] {
            if dir == 1 && layers != 0 {
                break;
            }
            for _ in 0..8 {
                let next = shift_support(&best, &base, &cur_free, dir);
                if next == cur_free {
                    break;
                }
                let (cand, e) = solve(&cur, &next, &mut stages)?;
                if e >= cur_e {
                    break;
                }
                (cur, cur_e, cur_free) = (cand, e, next);
                layers += dir;
            }
        }
        if cur_e < best_e {
            best = cur;
            best_e = cur_e;
            polish_layers = Some(layers);
        }
    }
    Ok((best, MinimizeReport { stages, energy_hard: best_e, polish_layers }))
}

/// `{nx, ny, model, lambda_mode, dirichlet, schedule}`; `h = 1/nx`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Minimize2dConfig {
    pub nx: usize,
    pub ny: usize,
    pub model: ModelDescriptor,
    pub lambda_mode: LambdaMode,
    pub dirichlet: String,
    #[serde(default)]
    pub schedule: Schedule,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    Normalized,
    Explicit,
}

impl Minimize2dConfig {
    pub fn build(&self, registry: &ModelRegistry) -> Result<Grid2DState> {
        let model = registry.resolve(&self.model)?;
        let model = match self.lambda_mode {
            LambdaMode::Normalized => model.normalized(),
            LambdaMode::Explicit => {
                let explicit = match &self.model {
                    ModelDescriptor::Power { lambda, .. } | ModelDescriptor::Custom { lambda, .. } => lambda.is_some(),
                };
                if !explicit {
                    return Err(invalid("lambda_mode \"explicit\" needs model.lambda"));
                }
                model
            }
        };
        if self.nx == 0 {
            return Err(invalid("nx must be positive"));
        }
        Grid2DState::new(self.nx, self.ny, 1.0 / self.nx as f64, model, self.dirichlet.parse()?)
    }
}

/// `λ*` of the state's model.
pub fn state_lambda_star(state: &Grid2DState) -> Result<f64> {
    Ok(lambda_star(&state.model)?.lambda_star)
}
