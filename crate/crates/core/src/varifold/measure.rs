//! First variation and the edge-supported mean curvature measure.

use std::collections::HashMap;

use super::clip::segment_fraction_in_ball;
use super::mesh::{DiscreteVarifold, V3};
use crate::error::{Error, Result};
use crate::par::Exec;

/// `δV(X) = Σ θ · area · div_S X`, with `X` interpolated linearly on each face.
pub fn first_variation(v: &DiscreteVarifold, x: &[V3]) -> Result<f64> {
    first_variation_with(v, x, Exec::default())
}

pub fn first_variation_with(v: &DiscreteVarifold, x: &[V3], exec: Exec) -> Result<f64> {
    if x.len() != v.vertices.len() {
        return Err(crate::error::invalid(format!(
            "vector field has {} samples for {} vertices",
            x.len(),
            v.vertices.len()
        )));
    }
    if x.iter().any(|xi| !xi.iter().all(|c| c.is_finite())) {
        return Err(crate::error::invalid("vector field must be finite"));
    }
    Ok(exec.sum_range(v.faces.len(), |i| {
        let f = v.faces[i];
        let p = v.corners(i);
        let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let n = cross.normalize();
        // ∇λ_k = n × (p_{k+2} − p_{k+1}) / (2A), so area · div = ½ Σ X_k · n × e_k.
        let s: f64 = (0..3)
            .map(|k| x[f[k]].dot(&n.cross(&(p[(k + 2) % 3] - p[(k + 1) % 3]))))
            .sum();
        v.multiplicity[i] * 0.5 * s
    }))
}

#[derive(Clone, Debug)]
pub struct EdgeWeight {
    pub a: usize,
    pub b: usize,
    /// `−Σ θ · |e| · ν_out` over the incident faces.
    pub h: V3,
}

#[derive(Clone, Debug)]
pub struct CurvatureMeasure {
    /// Edges shared by two faces.
    pub interior: Vec<EdgeWeight>,
    /// Edges of a single face; they carry the boundary conormal.
    pub boundary: Vec<EdgeWeight>,
    /// `Σ |H_e|` over interior edges.
    pub total_mass: f64,
}

impl CurvatureMeasure {
    /// `Σ_e H_e · X(midpoint)` over all edges; equals `−δV(X)` for affine `X`.
    pub fn pair<F: Fn(&V3) -> V3>(&self, v: &DiscreteVarifold, x: F) -> f64 {
        self.interior
            .iter()
            .chain(&self.boundary)
            .map(|e| e.h.dot(&x(&(0.5 * (v.vertices[e.a] + v.vertices[e.b])))))
            .sum()
    }

    /// `|H|(B_ρ(ξ))`, spreading each interior edge weight uniformly along the edge.
    pub fn mass_in_ball(&self, v: &DiscreteVarifold, xi: &V3, rho: f64) -> f64 {
        self.interior
            .iter()
            .map(|e| e.h.norm() * segment_fraction_in_ball(&v.vertices[e.a], &v.vertices[e.b], xi, rho))
            .sum()
    }

    /// `|H|` of the part of interior edges with both ends at distance in `(lo, hi)`
    /// from `center`, pro rata by length.
    pub fn mass_in_shell(&self, v: &DiscreteVarifold, center: &V3, lo: f64, hi: f64) -> f64 {
        self.mass_in_ball(v, center, hi) - self.mass_in_ball(v, center, lo)
    }
}

pub fn mean_curvature_measure(v: &DiscreteVarifold) -> Result<CurvatureMeasure> {
    let mut edges: HashMap<(usize, usize), (V3, usize)> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (i, f) in v.faces.iter().enumerate() {
        let n = v.normal(i);
        for k in 0..3 {
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let (pa, pb, pc) = (v.vertices[a], v.vertices[b], v.vertices[c]);
            let e = pb - pa;
            let mut nu = e.cross(&n).normalize();
            if (pc - pa).dot(&nu) > 0.0 {
                nu = -nu;
            }
            let key = (a.min(b), a.max(b));
            let entry = edges.entry(key).or_insert_with(|| {
                order.push(key);
                (V3::zeros(), 0)
            });
            entry.0 -= v.multiplicity[i] * e.norm() * nu;
            entry.1 += 1;
            if entry.1 > 2 {
                return Err(Error::Mesh(format!("edge {key:?} is shared by more than two faces")));
            }
        }
    }
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for key in order {
        let (h, count) = edges[&key];
        let w = EdgeWeight { a: key.0, b: key.1, h };
        if count == 2 { interior.push(w) } else { boundary.push(w) }
    }
    let total_mass = interior.iter().map(|e| e.h.norm()).sum();
    Ok(CurvatureMeasure { interior, boundary, total_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::mesh::{plane, sphere};
    use std::f64::consts::PI;

    #[test]
    fn flat_disc_is_stationary() {
        let m = plane(1.0, 0.05).unwrap();
        let h = mean_curvature_measure(&m).unwrap();
        assert!(h.interior.iter().all(|e| e.h.norm() < 1e-12));
        let bump = |p: &V3| {
            let r2 = p.x * p.x + p.y * p.y;
            if r2 < 0.64 { V3::new(p.y, -p.x, 0.0) * (0.64 - r2) } else { V3::zeros() }
        };
        let x: Vec<V3> = m.vertices.iter().map(bump).collect();
        assert!(first_variation(&m, &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sphere_position_field() {
        let m = sphere(1.0, 0.1).unwrap();
        let fv = first_variation(&m, &m.vertices).unwrap();
        assert!((fv - 8.0 * PI).abs() / (8.0 * PI) < 0.02);
        assert!((fv - 2.0 * m.mass()).abs() < 1e-9);
    }

    #[test]
    fn adjoint_for_affine_fields() {
        let m = sphere(1.0, 0.3).unwrap();
        let h = mean_curvature_measure(&m).unwrap();
        let f = |p: &V3| V3::new(0.3 * p.x - p.z + 0.2, 1.1 * p.y, 0.5 * p.x + 0.7);
        let x: Vec<V3> = m.vertices.iter().map(f).collect();
        let lhs = first_variation(&m, &x).unwrap();
        assert!((lhs + h.pair(&m, f)).abs() < 1e-12);
    }

    #[test]
    fn serial_matches_parallel() {
        let m = sphere(1.0, 0.1).unwrap();
        let a = first_variation_with(&m, &m.vertices, Exec::Serial).unwrap();
        let b = first_variation_with(&m, &m.vertices, Exec::Parallel).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn non_manifold_edge_rejected() {
        let v = vec![V3::zeros(), V3::x(), V3::y(), V3::z(), -V3::y()];
        let m = DiscreteVarifold::new(v, vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]]).unwrap();
        assert!(matches!(mean_curvature_measure(&m), Err(Error::Mesh(_))));
    }
}
