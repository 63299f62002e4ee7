//! Slab height, best plane and Hausdorff flatness of a mesh inside a ball.

use nalgebra::{Matrix3, SymmetricEigen};
use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::Serialize;

use super::clip::area_in_ball;
use super::mesh::{DiscreteVarifold, V3};
use crate::error::{invalid, Error, Result};
use crate::par::Exec;

type Tree = RTree<GeomWithData<[f64; 3], usize>>;

fn tree(points: &[V3]) -> Tree {
    RTree::bulk_load(points.iter().enumerate().map(|(i, p)| GeomWithData::new([p.x, p.y, p.z], i)).collect())
}

fn nearest_sq(t: &Tree, p: &V3) -> f64 {
    let q = t.nearest_neighbor([p.x, p.y, p.z]).expect("nonempty tree");
    (V3::from(*q.geom()) - p).norm_squared()
}

fn directed(a: &[V3], b: &Tree, exec: Exec) -> f64 {
    exec.map(a, |p| nearest_sq(b, p))
        .into_iter()
        .fold(0.0, f64::max)
        .sqrt()
}

/// Symmetric Hausdorff distance of two finite point sets.
pub fn hausdorff_distance(a: &[V3], b: &[V3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("Hausdorff distance of an empty set".into()));
    }
    let exec = Exec::default();
    Ok(directed(a, &tree(b), exec).max(directed(b, &tree(a), exec)))
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessReport {
    pub xi: [f64; 3],
    pub r: f64,
    pub plane_normal: [f64; 3],
    pub slab_half_height: f64,
    pub hausdorff_to_plane: f64,
    pub eps_flat: f64,
    pub pitch: f64,
}

/// Closest point of triangle `abc` to `p`.
pub fn closest_point_on_triangle(p: &V3, a: &V3, b: &V3, c: &V3) -> V3 {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Barycentric grid samples of the faces inside `B_r(ξ)` at spacing ≤ `pitch`.
pub fn sample_in_ball(v: &DiscreteVarifold, faces: &[usize], xi: &V3, r: f64, pitch: f64, exec: Exec) -> Vec<V3> {
    exec.map(faces, |&i| {
        let [a, b, c] = v.corners(i);
        let longest = (a - b).norm().max((b - c).norm()).max((c - a).norm());
        let m = (longest / pitch).ceil().max(1.0) as usize;
        let mut out = Vec::new();
        for s in 0..=m {
            for t in 0..=m - s {
                let x = a + (b - a) * (s as f64 / m as f64) + (c - a) * (t as f64 / m as f64);
                if (x - xi).norm() <= r {
                    out.push(x);
                }
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Sorted copy without exact duplicates; shared edges are sampled by both faces.
fn dedup(points: &[V3]) -> Vec<V3> {
    let mut keyed: Vec<[u64; 3]> = points.iter().map(|p| [p.x, p.y, p.z].map(|c| (c + 0.0).to_bits())).collect();
    keyed.sort_unstable();
    keyed.dedup();
    keyed.into_iter().map(|k| V3::new(f64::from_bits(k[0]), f64::from_bits(k[1]), f64::from_bits(k[2]))).collect()
}

fn slab(samples: &[V3], xi: &V3, nu: &V3, exec: Exec) -> f64 {
    exec.map(samples, |x| (x - xi).dot(nu).abs()).into_iter().fold(0.0, f64::max)
}

fn tangent_basis(nu: &V3) -> (V3, V3) {
    let helper = if nu.x.abs() < 0.9 { V3::x() } else { V3::y() };
    let t1 = nu.cross(&helper).normalize();
    (t1, nu.cross(&t1))
}

/// Pattern search over unit normals minimizing the slab height.
fn refine_normal(samples: &[V3], xi: &V3, seed: V3, exec: Exec) -> (V3, f64) {
    let mut nu = seed.normalize();
    let mut best = slab(samples, xi, &nu, exec);
    let mut step = 0.25;
    let mut iters = 0;
    while step > 1e-10 && iters < 5000 {
        iters += 1;
        let (t1, t2) = tangent_basis(&nu);
        let mut improved = None;
        for dir in [t1, -t1, t2, -t2, (t1 + t2) / 2f64.sqrt(), -(t1 + t2) / 2f64.sqrt(), (t1 - t2) / 2f64.sqrt(), (t2 - t1) / 2f64.sqrt()] {
            let cand = (nu + dir * step).normalize();
            let h = slab(samples, xi, &cand, exec);
            if h < best && improved.is_none_or(|(_, hb)| h < hb) {
                improved = Some((cand, h));
            }
        }
        match improved {
            Some((cand, h)) => {
                nu = cand;
                best = h;
            }
            None => step *= 0.5,
        }
    }
    (nu, best)
}

fn canonical_sign(nu: V3) -> V3 {
    let k = (0..3).max_by(|&i, &j| nu[i].abs().total_cmp(&nu[j].abs())).unwrap();
    if nu[k] < 0.0 { -nu } else { nu }
}

pub fn flatness(v: &DiscreteVarifold, xi: &V3, r: f64) -> Result<FlatnessReport> {
    flatness_with(v, xi, r, Exec::default())
}

pub fn flatness_with(v: &DiscreteVarifold, xi: &V3, r: f64, exec: Exec) -> Result<FlatnessReport> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("radius must be positive"));
    }
    let pitch = r / 200.0;
    let weights = exec.map_range(v.faces.len(), |i| v.multiplicity[i] * area_in_ball(&v.corners(i), xi, r));
    let faces: Vec<usize> = (0..v.faces.len()).filter(|&i| weights[i] > 0.0).collect();
    if faces.is_empty() {
        return Err(Error::Domain("the ball does not meet the mesh".into()));
    }
    let samples = dedup(&sample_in_ball(v, &faces, xi, r, pitch, exec));
    if samples.is_empty() {
        return Err(Error::Domain("no mesh samples inside the ball".into()));
    }

    // Area-weighted moments of face centroids about ξ.
    let mut cov = Matrix3::zeros();
    let mut first = V3::zeros();
    let mut total = 0.0;
    for &i in &faces {
        let d = v.centroid(i) - xi;
        cov += weights[i] * d * d.transpose();
        first += weights[i] * d;
        total += weights[i];
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (nu, height) = order
        .iter()
        .map(|&k| refine_normal(&samples, xi, eig.eigenvectors.column(k).into_owned(), exec))
        .fold(None::<(V3, f64)>, |acc, cand| match acc {
            Some(a) if a.1 <= cand.1 => Some(a),
            _ => Some(cand),
        })
        .unwrap();
    let nu = canonical_sign(nu);

    // Mesh → disc: samples lie in the ball, so the distance to the disc is |z|
    // unless the in-plane radius exceeds r.
    let to_disc = exec
        .map(&samples, |x| {
            let d = x - xi;
            let z = d.dot(&nu);
            let s = (d - nu * z).norm();
            (z * z + (s - r).max(0.0).powi(2)).sqrt()
        })
        .into_iter()
        .fold(0.0, f64::max);

    // Disc → mesh on a grid of the disc, measured against the mesh samples and
    // sharpened with exact distances to nearby faces.
    let e1 = {
        let m = first - nu * first.dot(&nu);
        if m.norm() > 1e-3 * r * total {
            m.normalize()
        } else {
            let p = Matrix3::identity() - nu * nu.transpose();
            let c = p * cov * p;
            let e = SymmetricEigen::new(c);
            let k = (0..3).max_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b])).unwrap();
            let lam: Vec<f64> = e.eigenvalues.iter().copied().collect();
            let mut sorted = lam.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted[2] - sorted[1] > 1e-6 * sorted[2].max(1e-300) {
                let v = e.eigenvectors.column(k).into_owned();
                v - nu * v.dot(&nu)
            } else {
                tangent_basis(&nu).0
            }
            .normalize()
        }
    };
    let e2 = nu.cross(&e1);
    let n = (r / pitch).floor() as i64;
    let mut disc = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let (a, b) = (i as f64 * pitch, j as f64 * pitch);
            if a * a + b * b <= r * r {
                disc.push(xi + e1 * a + e2 * b);
            }
        }
    }
    let rim = ((2.0 * std::f64::consts::PI * r / pitch).ceil() as usize).max(8);
    for k in 0..rim {
        let t = 2.0 * std::f64::consts::PI * k as f64 / rim as f64;
        disc.push(xi + (e1 * t.cos() + e2 * t.sin()) * r);
    }
    let sample_tree = tree(&samples);
    let centroids: Vec<V3> = faces.iter().map(|&i| v.centroid(i)).collect();
    let centroid_tree = tree(&centroids);
    let reach = faces
        .iter()
        .map(|&i| {
            let c = v.centroid(i);
            v.corners(i).iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let from_disc = exec
        .map(&disc, |y| {
            let mut best = nearest_sq(&sample_tree, y).sqrt();
            let near: Vec<usize> = centroid_tree
                .locate_within_distance([y.x, y.y, y.z], (best + reach).powi(2))
                .map(|g| g.data)
                .collect();
            if near.len() <= 64 {
                for k in near {
                    let [a, b, c] = v.corners(faces[k]);
                    let cp = closest_point_on_triangle(y, &a, &b, &c);
                    if (cp - xi).norm() <= r * (1.0 + 1e-12) {
                        best = best.min((cp - y).norm());
                    }
                }
            }
            best
        })
        .into_iter()
        .fold(0.0, f64::max);

    let hd = to_disc.max(from_disc);
    Ok(FlatnessReport {
        xi: [xi.x, xi.y, xi.z],
        r,
        plane_normal: [nu.x, nu.y, nu.z],
        slab_half_height: height,
        hausdorff_to_plane: hd,
        eps_flat: hd / r,
        pitch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hausdorff_examples() {
        let o = [V3::zeros()];
        assert_eq!(hausdorff_distance(&o, &[V3::x()]).unwrap(), 1.0);
        assert_eq!(hausdorff_distance(&o, &o).unwrap(), 0.0);
        let sq = [V3::new(0.0, 0.0, 0.0), V3::new(1.0, 0.0, 0.0), V3::new(1.0, 1.0, 0.0), V3::new(0.0, 1.0, 0.0)];
        let hd = hausdorff_distance(&sq, &[V3::new(0.5, 0.5, 0.0)]).unwrap();
        assert!((hd - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(hausdorff_distance(&[], &o).is_err());
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (V3::zeros(), V3::x(), V3::y());
        assert!((closest_point_on_triangle(&V3::new(0.2, 0.2, 1.0), &a, &b, &c) - V3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert_eq!(closest_point_on_triangle(&V3::new(-1.0, -1.0, 0.0), &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&V3::new(0.5, -1.0, 0.0), &a, &b, &c), V3::new(0.5, 0.0, 0.0));
        let p = closest_point_on_triangle(&V3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((p - V3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn plane_is_flat() {
        let m = super::super::mesh::plane(1.5, 0.1).unwrap();
        let rep = flatness(&m, &V3::new(0.1, 0.0, 0.0), 1.0).unwrap();
        assert!(rep.eps_flat <= rep.pitch / rep.r);
        assert!(rep.slab_half_height < 1e-14);
        assert!((rep.plane_normal[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_cone_apex() {
        let theta0: f64 = 0.585_281_588_932_581;
        let m = super::super::mesh::double_cone(theta0, 1.2, 0.05).unwrap();
        let rep = flatness(&m, &V3::zeros(), 1.0).unwrap();
        assert!((rep.eps_flat - theta0.cos()).abs() < 0.02, "{}", rep.eps_flat);
    }

    #[test]
    fn tilted_plane_invariance() {
        use nalgebra::Rotation3;
        let m = super::super::mesh::plane(1.5, 0.1).unwrap();
        let rot = Rotation3::from_euler_angles(0.4, -0.7, 1.1);
        let shift = V3::new(0.3, -1.0, 2.0);
        let xi = V3::new(0.1, 0.2, 0.0);
        let a = flatness(&m, &xi, 1.0).unwrap();
        let b = flatness(&m.transformed(&rot, &shift), &(rot * xi + shift), 1.0).unwrap();
        assert!((a.eps_flat - b.eps_flat).abs() < 1e-10, "{a:?} {b:?}");
        assert!((a.slab_half_height - b.slab_half_height).abs() < 1e-10);
    }

    #[test]
    fn empty_ball() {
        let m = super::super::mesh::plane(1.0, 0.2).unwrap();
        assert!(matches!(flatness(&m, &V3::new(0.0, 0.0, 5.0), 1.0), Err(Error::Domain(_))));
    }
}
