//! Local-minimality check for `ℱ(F) = ∫|Dχ_F| + ∫χ_F H` on a pixel grid.

use std::ops::Range;

use serde::Serialize;

use crate::error::{invalid, Result};

/// Row and column ranges of the pixels allowed to flip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureCheck {
    pub is_local_min: bool,
    /// Largest decrease of `ℱ` over the tested flips, zero if none decreases it.
    pub best_improvement: f64,
    pub flips_tested: usize,
}

const TOL: f64 = 1e-12;

/// Discrete `ℱ`: interfaces between 4-neighbours times pixel size, plus the
/// Riemann sum of `H` over `E`.
pub fn functional(e: &[Vec<bool>], h: &[Vec<f64>], pixel: f64) -> f64 {
    let (n, m) = (e.len(), e.first().map_or(0, Vec::len));
    let mut per = 0usize;
    let mut bulk = 0.0;
    for i in 0..n {
        for j in 0..m {
            if i + 1 < n && e[i][j] != e[i + 1][j] {
                per += 1;
            }
            if j + 1 < m && e[i][j] != e[i][j + 1] {
                per += 1;
            }
            if e[i][j] {
                bulk += h[i][j];
            }
        }
    }
    per as f64 * pixel + bulk * pixel * pixel
}

fn delta(e: &[Vec<bool>], h: &[Vec<f64>], pixel: f64, flip: &[(usize, usize)]) -> f64 {
    let flipped = |i: usize, j: usize| flip.contains(&(i, j));
    let after = |i: usize, j: usize| e[i][j] ^ flipped(i, j);
    let mut dper = 0i64;
    let mut dbulk = 0.0;
    for &(i, j) in flip {
        dbulk += if e[i][j] { -h[i][j] } else { h[i][j] };
        for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
            // Edges between two flipped pixels do not change.
            if flipped(a, b) {
                continue;
            }
            dper += (after(i, j) != e[a][b]) as i64 - (e[i][j] != e[a][b]) as i64;
        }
    }
    dper as f64 * pixel + dbulk * pixel * pixel
}

/// Tests every single-pixel flip and every 2×2 block flip inside `window`.
pub fn variational_curvature_check(
    e: &[Vec<bool>],
    h: &[Vec<f64>],
    window: &Window,
    pixel: f64,
) -> Result<CurvatureCheck> {
    let n = e.len();
    let m = e.first().map_or(0, Vec::len);
    if h.len() != n || e.iter().any(|r| r.len() != m) || h.iter().any(|r| r.len() != m) {
        return Err(invalid("E and H must have the same rectangular shape"));
    }
    if window.rows.start < 1 || window.cols.start < 1 || window.rows.end + 1 > n || window.cols.end + 1 > m {
        return Err(invalid("window must lie compactly inside the grid"));
    }
    if !(pixel > 0.0 && pixel.is_finite()) {
        return Err(invalid("pixel size must be positive"));
    }
    let mut best = 0.0f64;
    let mut tested = 0;
    for i in window.rows.clone() {
        for j in window.cols.clone() {
            best = best.max(-delta(e, h, pixel, &[(i, j)]));
            tested += 1;
            if i + 1 < window.rows.end && j + 1 < window.cols.end {
                best = best.max(-delta(e, h, pixel, &[(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]));
                tested += 1;
            }
        }
    }
    Ok(CurvatureCheck { is_local_min: best <= TOL, best_improvement: best + 0.0, flips_tested: tested })
}

/// Digital disc of radius `r` pixels centred in an `n × n` grid; the centre is a
/// pixel centre for odd `n` and a pixel corner for even `n`.
pub fn digital_disc(n: usize, r: f64) -> Vec<Vec<bool>> {
    let c = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|i| (0..n).map(|j| (i as f64 - c).powi(2) + (j as f64 - c).powi(2) <= r * r).collect())
        .collect()
}
