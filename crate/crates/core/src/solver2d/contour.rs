//! Free boundary extraction by marching squares and the Bernoulli residual.

use std::collections::BTreeMap;

use serde::Serialize;

use super::Grid2DState;
use crate::energy::lambda_star;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FbSample {
    pub x: f64,
    pub y: f64,
    /// `|∇u|` one node inside the positive side.
    pub grad: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FreeBoundaryPolyline {
    pub lines: Vec<Vec<FbSample>>,
    /// Set when the contour is empty because `u` exceeds the level everywhere.
    pub full_positivity: bool,
}

impl FreeBoundaryPolyline {
    pub fn is_empty(&self) -> bool {
        self.lines.iter().all(Vec::is_empty)
    }

    pub fn samples(&self) -> impl Iterator<Item = &FbSample> {
        self.lines.iter().flatten()
    }

    pub fn length(&self) -> f64 {
        self.lines
            .iter()
            .map(|l| l.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).sum::<f64>())
            .sum()
    }
}

/// Central differences where both neighbours exist, one-sided otherwise.
fn node_gradient(s: &Grid2DState, i: usize, j: usize) -> (f64, f64) {
    let d = |lo: f64, hi: f64, span: f64| (hi - lo) / (span * s.h);
    let gx = match (i > 0, i < s.nx) {
        (true, true) => d(s.value(i - 1, j), s.value(i + 1, j), 2.0),
        (false, _) => d(s.value(i, j), s.value(i + 1, j), 1.0),
        (_, false) => d(s.value(i - 1, j), s.value(i, j), 1.0),
    };
    let gy = match (j > 0, j < s.ny) {
        (true, true) => d(s.value(i, j - 1), s.value(i, j + 1), 2.0),
        (false, _) => d(s.value(i, j), s.value(i, j + 1), 1.0),
        (_, false) => d(s.value(i, j - 1), s.value(i, j), 1.0),
    };
    (gx, gy)
}

/// Horizontal edge `(i,j)–(i+1,j)` has id `2k`, vertical `(i,j)–(i,j+1)` has `2k+1`,
/// with `k` the index of `(i,j)`.
fn edge_nodes(s: &Grid2DState, id: usize) -> ((usize, usize), (usize, usize)) {
    let k = id / 2;
    let (i, j) = (k % (s.nx + 1), k / (s.nx + 1));
    if id.is_multiple_of(2) { ((i, j), (i + 1, j)) } else { ((i, j), (i, j + 1)) }
}

fn sample(s: &Grid2DState, id: usize, level: f64) -> FbSample {
    let (a, b) = edge_nodes(s, id);
    let (pa, pb) = (s.value(a.0, a.1) - level, s.value(b.0, b.1) - level);
    let t = pa / (pa - pb);
    let (xa, ya) = s.coords(a.0, a.1);
    let (xb, yb) = s.coords(b.0, b.1);
    // Positive endpoint, then one more node in the same direction.
    let (pos, neg) = if pa > 0.0 { (a, b) } else { (b, a) };
    let step = (pos.0 as i64 - neg.0 as i64, pos.1 as i64 - neg.1 as i64);
    let inner = (pos.0 as i64 + step.0, pos.1 as i64 + step.1);
    let at = if inner.0 >= 0 && inner.1 >= 0 && (inner.0 as usize) <= s.nx && (inner.1 as usize) <= s.ny {
        (inner.0 as usize, inner.1 as usize)
    } else {
        pos
    };
    let (gx, gy) = node_gradient(s, at.0, at.1);
    FbSample { x: xa + t * (xb - xa), y: ya + t * (yb - ya), grad: gx.hypot(gy) }
}

/// Marching squares on `u = threshold · h`. Saddle cells are resolved by the
/// mean of the corner values.
pub fn extract_fb(s: &Grid2DState, threshold: f64) -> FreeBoundaryPolyline {
    let level = threshold * s.h;
    let w = s.nx + 1;
    let pos = |i: usize, j: usize| s.value(i, j) - level > 0.0;
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut link = |a: usize, b: usize| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for j in 0..s.ny {
        for i in 0..s.nx {
            let c = [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)];
            let e = [2 * (j * w + i), 2 * (j * w + i + 1) + 1, 2 * ((j + 1) * w + i), 2 * (j * w + i) + 1];
            let crossing: Vec<usize> = (0..4).filter(|&k| c[k] != c[(k + 1) % 4]).collect();
            match crossing.len() {
                2 => link(e[crossing[0]], e[crossing[1]]),
                4 => {
                    let mean = 0.25 * (s.value(i, j) + s.value(i + 1, j) + s.value(i + 1, j + 1) + s.value(i, j + 1));
                    if (mean - level > 0.0) == c[0] {
                        link(e[0], e[1]);
                        link(e[2], e[3]);
                    } else {
                        link(e[3], e[0]);
                        link(e[1], e[2]);
                    }
                }
                _ => {}
            }
        }
    }
    if adj.is_empty() {
        let all = s.u.iter().all(|&v| v - level > 0.0);
        return FreeBoundaryPolyline { lines: Vec::new(), full_positivity: all };
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut lines = Vec::new();
    let starts: Vec<usize> = adj
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, _)| *k)
        .chain(adj.keys().copied())
        .collect();
    for start in starts {
        if seen.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        seen.insert(start);
        let mut cur = start;
        while let Some(&next) = adj[&cur].iter().find(|n| !seen.contains(*n)) {
            seen.insert(next);
            chain.push(next);
            cur = next;
        }
        // Close cycles.
        if chain.len() > 2 && adj[&cur].contains(&start) {
            chain.push(start);
        }
        lines.push(chain.into_iter().map(|id| sample(s, id, level)).collect());
    }
    FreeBoundaryPolyline { lines, full_positivity: false }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BernoulliResidual {
    pub max: f64,
    pub mean: f64,
    pub lambda_star: f64,
}

/// Statistics of `| |∇u| − λ* |` over the free boundary samples.
pub fn bernoulli_residual(s: &Grid2DState, fb: &FreeBoundaryPolyline) -> Result<BernoulliResidual> {
    if fb.is_empty() {
        return Err(invalid("empty free boundary"));
    }
    let ls = lambda_star(&s.model)?.lambda_star;
    let r: Vec<f64> = fb.samples().map(|p| (p.grad - ls).abs()).collect();
    Ok(BernoulliResidual {
        max: r.iter().copied().fold(0.0, f64::max),
        mean: r.iter().sum::<f64>() / r.len() as f64,
        lambda_star: ls,
    })
}

/// Largest distance from the points to their total least squares line.
pub fn line_deviation(points: &[(f64, f64)]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Direction of the major axis.
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (nx, ny) = (-angle.sin(), angle.cos());
    points.iter().map(|p| ((p.0 - mx) * nx + (p.1 - my) * ny).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::super::{Dirichlet, Grid2DState};
    use super::*;
    use crate::energy::EnergyModel;

    fn slab(n: usize) -> Grid2DState {
        let mut s = Grid2DState::new(n, n, 1.0 / n as f64, EnergyModel::power_normalized(3.0).unwrap(), Dirichlet::Slab { a: 0.5 }).unwrap();
        s.set_field(|x, _| 0.5 - x);
        s
    }

    #[test]
    fn slab_contour_is_straight() {
        let s = slab(64);
        let fb = extract_fb(&s, 1.0);
        assert_eq!(fb.lines.len(), 1);
        let pts: Vec<(f64, f64)> = fb.samples().map(|p| (p.x, p.y)).collect();
        assert!(line_deviation(&pts) < 1e-12);
        assert!(pts.iter().all(|p| (p.0 - 0.5).abs() <= 2.0 * s.h));
        assert!((fb.length() - 1.0).abs() < 1e-12);
        let r = bernoulli_residual(&s, &fb).unwrap();
        assert!(r.max < 1e-12, "{r:?}");
    }

    #[test]
    fn empty_cases() {
        let s = Grid2DState::new(8, 8, 0.125, EnergyModel::power(2.0, 1.0).unwrap(), Dirichlet::Zero).unwrap();
        let fb = extract_fb(&s, 1.0);
        assert!(fb.is_empty() && !fb.full_positivity);
        let s = Grid2DState::new(8, 8, 0.125, EnergyModel::power(2.0, 1.0).unwrap(), Dirichlet::Constant { m: 2.0 }).unwrap();
        let mut s2 = s.clone();
        s2.set_field(|_, _| 2.0);
        let fb = extract_fb(&s2, 1.0);
        assert!(fb.is_empty() && fb.full_positivity);
        assert!(bernoulli_residual(&s2, &fb).is_err());
    }

    #[test]
    fn linear_field_residual() {
        // u = x has |∇u| = 1, so the residual is |1 − λ*| with λ* = 2^{-1/3}.
        let mut s = Grid2DState::new(16, 16, 1.0 / 16.0, EnergyModel::power(3.0, 1.0).unwrap(), Dirichlet::Zero).unwrap();
        s.u = (0..s.u.len()).map(|k| (k % 17) as f64 / 16.0).collect();
        let fb = extract_fb(&s, 4.5);
        let r = bernoulli_residual(&s, &fb).unwrap();
        let expect = 1.0 - 2f64.powf(-1.0 / 3.0);
        assert!((r.max - expect).abs() < 1e-12 && (r.mean - expect).abs() < 1e-12);
    }

    #[test]
    fn circle_contour_closes() {
        let mut s = Grid2DState::new(40, 40, 0.025, EnergyModel::power(2.0, 1.0).unwrap(), Dirichlet::Zero).unwrap();
        s.u = (0..s.u.len())
            .map(|k| {
                let (x, y) = ((k % 41) as f64 * 0.025 - 0.5, (k / 41) as f64 * 0.025 - 0.5);
                (0.3 - x.hypot(y)).max(0.0)
            })
            .collect();
        // Level u = h is the circle of radius 0.3 − h.
        let fb = extract_fb(&s, 1.0);
        assert_eq!(fb.lines.len(), 1);
        let l = &fb.lines[0];
        assert_eq!((l[0].x, l[0].y), (l[l.len() - 1].x, l[l.len() - 1].y));
        assert!((fb.length() - 2.0 * std::f64::consts::PI * 0.275).abs() < 0.01, "{}", fb.length());
    }

    #[test]
    fn line_deviation_examples() {
        assert_eq!(line_deviation(&[(0.0, 0.0), (1.0, 1.0)]), 0.0);
        let d = line_deviation(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 0.3)]);
        assert!((d - 0.225).abs() < 1e-12);
    }
}
