//! Closed-form integrals over `triangle ∩ ball`.
//!
//! The ball meets the triangle's plane in a disc of radius `a = √(ρ² − d²)`
//! about the foot `q` of the centre. Integrals of radial functions `φ(s)` (s the
//! in-plane distance to `q`) are summed over the signed wedges `(q, P_i, P_{i+1})`:
//! along each edge the wedge is cut where the edge crosses the circle, pieces
//! inside contribute a closed-form segment term, pieces outside an arc term
//! `Φ(a) Δα` with `Φ(s) = ∫₀^s φ(t) t dt`.

use nalgebra::Vector2;

use super::mesh::V3;

type P2 = Vector2<f64>;

#[derive(Clone, Copy, Debug)]
enum Kernel {
    /// `φ = 1`.
    Area,
    /// `φ = d² / (d² + s²)²`, i.e. `|D⊥r|² / r²` on a plane at distance `d`.
    Deficit { d: f64 },
}

impl Kernel {
    fn big_phi(&self, s: f64) -> f64 {
        match *self {
            Kernel::Area => 0.5 * s * s,
            Kernel::Deficit { d } => 0.5 * s * s / (d * d + s * s),
        }
    }

    /// Signed integral over the wedge `(0, p, q)` when segment `pq` is inside the disc.
    fn segment(&self, p: P2, q: P2) -> f64 {
        let cross = p.perp(&q);
        match *self {
            Kernel::Area => 0.5 * cross,
            Kernel::Deficit { d } => {
                let w = q - p;
                let len = w.norm();
                if cross == 0.0 || len == 0.0 {
                    return 0.0;
                }
                let u = w / len;
                let h = cross.abs() / len;
                let k = (h * h + d * d).sqrt();
                let g = |x: P2| (x.dot(&u) / k).atan();
                cross.signum() * 0.5 * h / k * (g(q) - g(p))
            }
        }
    }
}

fn signed_angle(p: P2, q: P2) -> f64 {
    p.perp(&q).atan2(p.dot(&q))
}

/// Parameters `t ∈ (0, 1)` where `p + t (q − p)` crosses the circle of radius `a`.
fn circle_crossings(p: P2, q: P2, a: f64) -> Vec<f64> {
    let w = q - p;
    let (aa, bb, cc) = (w.dot(&w), 2.0 * p.dot(&w), p.dot(&p) - a * a);
    let disc = bb * bb - 4.0 * aa * cc;
    if aa == 0.0 || disc <= 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    // Stable roots.
    let qv = -0.5 * (bb + bb.signum() * sq);
    let mut ts = if qv == 0.0 { vec![0.0] } else { vec![qv / aa, cc / qv] };
    ts.retain(|&t| t > 0.0 && t < 1.0);
    ts.sort_by(f64::total_cmp);
    ts
}

fn polygon_disc(kernel: Kernel, poly: &[P2; 3], a: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        let (p, q) = (poly[i], poly[(i + 1) % 3]);
        let mut cuts = vec![0.0];
        cuts.extend(circle_crossings(p, q, a));
        cuts.push(1.0);
        for w in cuts.windows(2) {
            let (x, y) = (p + (q - p) * w[0], p + (q - p) * w[1]);
            let mid = p + (q - p) * (0.5 * (w[0] + w[1]));
            total += if mid.norm() <= a {
                kernel.segment(x, y)
            } else {
                kernel.big_phi(a) * signed_angle(x, y)
            };
        }
    }
    total
}

/// Plane data of a triangle relative to a centre: signed distance and 2D
/// coordinates of the corners about the foot of the perpendicular.
fn project(tri: &[V3; 3], center: &V3) -> (f64, [P2; 3]) {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
    let d = (center - tri[0]).dot(&n);
    let foot = center - n * d;
    let e1 = (tri[1] - tri[0]).normalize();
    let e2 = n.cross(&e1);
    let pts = tri.map(|v| {
        let r = v - foot;
        P2::new(r.dot(&e1), r.dot(&e2))
    });
    (d, pts)
}

fn bounding_reject(tri: &[V3; 3], center: &V3, rho: f64) -> bool {
    let c = (tri[0] + tri[1] + tri[2]) / 3.0;
    let r = tri.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
    (c - center).norm() > rho + r
}

/// Area of `triangle ∩ B_ρ(center)`.
pub fn area_in_ball(tri: &[V3; 3], center: &V3, rho: f64) -> f64 {
    if bounding_reject(tri, center, rho) {
        return 0.0;
    }
    if tri.iter().all(|v| (v - center).norm() <= rho) {
        return 0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
    }
    let (d, poly) = project(tri, center);
    if d.abs() >= rho {
        return 0.0;
    }
    polygon_disc(Kernel::Area, &poly, (rho * rho - d * d).sqrt()).abs()
}

/// `∫_{triangle ∩ B_ρ(center)} |D⊥r|² / r²` with `r = |x − center|`; zero when the
/// triangle's plane passes through the centre.
pub fn deficit_in_ball(tri: &[V3; 3], center: &V3, rho: f64) -> f64 {
    if bounding_reject(tri, center, rho) {
        return 0.0;
    }
    let (d, poly) = project(tri, center);
    // Planes through the centre carry no normal component; rounding in `d`
    // would otherwise show up as a point mass at the foot.
    if d.abs() <= 1e-12 * rho || d.abs() >= rho {
        return 0.0;
    }
    polygon_disc(Kernel::Deficit { d }, &poly, (rho * rho - d * d).sqrt()).abs()
}

/// Fraction of the segment `[a, b]` inside `B_ρ(center)`.
pub fn segment_fraction_in_ball(a: &V3, b: &V3, center: &V3, rho: f64) -> f64 {
    let w = b - a;
    let p = a - center;
    let (aa, bb, cc) = (w.dot(&w), 2.0 * p.dot(&w), p.dot(&p) - rho * rho);
    if aa == 0.0 {
        return if cc <= 0.0 { 1.0 } else { 0.0 };
    }
    let disc = bb * bb - 4.0 * aa * cc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-bb - sq) / (2.0 * aa)).max(0.0);
    let t1 = ((-bb + sq) / (2.0 * aa)).min(1.0);
    (t1 - t0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn big_square() -> [[V3; 3]; 2] {
        let (a, b, c, d) = (
            V3::new(-2.0, -2.0, 0.0),
            V3::new(2.0, -2.0, 0.0),
            V3::new(2.0, 2.0, 0.0),
            V3::new(-2.0, 2.0, 0.0),
        );
        [[a, b, c], [a, c, d]]
    }

    #[test]
    fn disc_area_exact() {
        for (z, rho) in [(0.0, 1.0), (0.3, 1.0), (-0.5, 0.9)] {
            let c = V3::new(0.1, -0.2, z);
            let total: f64 = big_square().iter().map(|t| area_in_ball(t, &c, rho)).sum();
            assert!((total - PI * (rho * rho - z * z)).abs() < 1e-13, "{total}");
        }
    }

    #[test]
    fn deficit_exact_for_offset_plane() {
        let d = 0.3;
        let c = V3::new(0.2, 0.1, d);
        for rho in [0.5, 1.0, 1.5] {
            let v: f64 = big_square().iter().map(|t| deficit_in_ball(t, &c, rho)).sum();
            assert!((v - PI * (1.0 - d * d / (rho * rho))).abs() < 1e-13, "rho {rho}: {v}");
        }
    }

    #[test]
    fn deficit_matches_quadrature_on_partial_triangle() {
        let tri = [V3::new(0.1, 0.0, 0.0), V3::new(1.3, 0.2, 0.0), V3::new(0.4, 0.9, 0.0)];
        let (c, rho) = (V3::new(0.3, 0.3, 0.2), 0.8);
        // Midpoint rule on a fine grid in barycentric coordinates.
        let n = 1500;
        let area = 0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
        let (mut a_sum, mut d_sum) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n - i {
                for (di, dj) in [(1.0 / 3.0, 1.0 / 3.0), (2.0 / 3.0, 2.0 / 3.0)] {
                    let (s, t) = ((i as f64 + di) / n as f64, (j as f64 + dj) / n as f64);
                    if s + t > 1.0 {
                        continue;
                    }
                    let x = tri[0] + (tri[1] - tri[0]) * s + (tri[2] - tri[0]) * t;
                    let r = (x - c).norm();
                    if r <= rho {
                        a_sum += 1.0;
                        d_sum += 0.04 / r.powi(4);
                    }
                }
            }
        }
        let cell = area / (n * n) as f64;
        assert!((a_sum * cell - area_in_ball(&tri, &c, rho)).abs() < 2e-3);
        assert!((d_sum * cell - deficit_in_ball(&tri, &c, rho)).abs() < 2e-3);
    }

    #[test]
    fn segment_fraction() {
        let (a, b) = (V3::new(-2.0, 0.0, 0.0), V3::new(2.0, 0.0, 0.0));
        assert!((segment_fraction_in_ball(&a, &b, &V3::zeros(), 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(segment_fraction_in_ball(&a, &b, &V3::new(0.0, 2.0, 0.0), 1.0), 0.0);
        assert_eq!(segment_fraction_in_ball(&a, &b, &V3::zeros(), 3.0), 1.0);
    }
}
