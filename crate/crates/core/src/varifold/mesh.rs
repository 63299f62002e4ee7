//! Triangle meshes with per-face multiplicity, ASCII OFF I/O and generators.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{Rotation3, Vector3};

use crate::error::{Error, Result};

pub type V3 = Vector3<f64>;

const MIN_AREA: f64 = 1e-14;

/// Integral varifold carried by a triangle mesh.
#[derive(Clone, Debug)]
pub struct DiscreteVarifold {
    pub vertices: Vec<V3>,
    pub faces: Vec<[usize; 3]>,
    pub multiplicity: Vec<f64>,
}

impl DiscreteVarifold {
    pub fn new(vertices: Vec<V3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let m = vec![1.0; faces.len()];
        Self::with_multiplicity(vertices, faces, m)
    }

    pub fn with_multiplicity(vertices: Vec<V3>, faces: Vec<[usize; 3]>, multiplicity: Vec<f64>) -> Result<Self> {
        if multiplicity.len() != faces.len() {
            return Err(Error::Mesh(format!(
                "{} multiplicities for {} faces",
                multiplicity.len(),
                faces.len()
            )));
        }
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Mesh(format!("non-finite vertex {v:?}")));
        }
        let mesh = Self { vertices, faces, multiplicity };
        for (i, f) in mesh.faces.iter().enumerate() {
            if f.iter().any(|&k| k >= mesh.vertices.len()) {
                return Err(Error::Mesh(format!("face {i} references a missing vertex")));
            }
            if mesh.area(i) <= MIN_AREA {
                return Err(Error::Mesh(format!("face {i} is degenerate")));
            }
            let m = mesh.multiplicity[i];
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Mesh(format!("face {i} has multiplicity {m}")));
            }
        }
        Ok(mesh)
    }

    pub fn corners(&self, face: usize) -> [V3; 3] {
        self.faces[face].map(|k| self.vertices[k])
    }

    fn cross(&self, face: usize) -> V3 {
        let [a, b, c] = self.corners(face);
        (b - a).cross(&(c - a))
    }

    pub fn area(&self, face: usize) -> f64 {
        0.5 * self.cross(face).norm()
    }

    pub fn normal(&self, face: usize) -> V3 {
        self.cross(face).normalize()
    }

    pub fn centroid(&self, face: usize) -> V3 {
        let [a, b, c] = self.corners(face);
        (a + b + c) / 3.0
    }

    /// Weight `μ_V(ℝ³) = Σ θ · area`.
    pub fn mass(&self) -> f64 {
        (0..self.faces.len()).map(|i| self.multiplicity[i] * self.area(i)).sum()
    }

    pub fn bounding_box(&self) -> (V3, V3) {
        let mut lo = V3::repeat(f64::INFINITY);
        let mut hi = V3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn max_edge(&self) -> f64 {
        (0..self.faces.len())
            .flat_map(|i| {
                let [a, b, c] = self.corners(i);
                [(a - b).norm(), (b - c).norm(), (c - a).norm()]
            })
            .fold(0.0, f64::max)
    }

    /// Applies `x ↦ R x + t` to every vertex.
    pub fn transformed(&self, rot: &Rotation3<f64>, shift: &V3) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| rot * v + shift).collect(),
            faces: self.faces.clone(),
            multiplicity: self.multiplicity.clone(),
        }
    }

    /// Disjoint union of meshes.
    pub fn union(parts: &[DiscreteVarifold]) -> Self {
        let mut out = Self { vertices: vec![], faces: vec![], multiplicity: vec![] };
        for p in parts {
            let off = out.vertices.len();
            out.vertices.extend(&p.vertices);
            out.faces.extend(p.faces.iter().map(|f| f.map(|k| k + off)));
            out.multiplicity.extend(&p.multiplicity);
        }
        out
    }

    /// Connected components of faces sharing an edge; returns a component label per face.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.faces.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut first: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match first.get(&key) {
                    Some(&j) => {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                    None => {
                        first.insert(key, i);
                    }
                }
            }
        }
        let mut labels = vec![0; n];
        let mut ids: HashMap<usize, usize> = HashMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            let next = ids.len();
            labels[i] = *ids.entry(r).or_insert(next);
        }
        (ids.len(), labels)
    }

    pub fn read_off<R: BufRead>(reader: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("");
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        match it.next().as_deref() {
            Some("OFF") => {}
            other => return Err(Error::Parse(format!("expected OFF header, found {other:?}"))),
        }
        let mut next_num = |what: &str| -> Result<String> {
            it.next().ok_or_else(|| Error::Parse(format!("unexpected end of file reading {what}")))
        };
        let parse_usize = |s: String| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let parse_f64 = |s: String| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let nv = parse_usize(next_num("vertex count")?)?;
        let nf = parse_usize(next_num("face count")?)?;
        let _ne = next_num("edge count")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let x = parse_f64(next_num("vertex")?)?;
            let y = parse_f64(next_num("vertex")?)?;
            let z = parse_f64(next_num("vertex")?)?;
            vertices.push(V3::new(x, y, z));
        }
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            let k = parse_usize(next_num("face size")?)?;
            if k < 3 {
                return Err(Error::Parse(format!("face with {k} vertices")));
            }
            let idx = (0..k).map(|_| parse_usize(next_num("face index")?)).collect::<Result<Vec<_>>>()?;
            for j in 1..k - 1 {
                faces.push([idx[0], idx[j], idx[j + 1]]);
            }
        }
        Self::new(vertices, faces)
    }

    pub fn write_off<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertices.len(), self.faces.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
        }
        for f in &self.faces {
            writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        Ok(())
    }

    /// Reads a multiplicity sidecar with header `face,multiplicity`; faces not
    /// listed keep multiplicity 1.
    pub fn load_multiplicity<R: std::io::Read>(&mut self, reader: R) -> Result<()> {
        #[derive(serde::Deserialize)]
        struct Row {
            face: usize,
            multiplicity: f64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| Error::Parse(e.to_string()))?;
            if row.face >= self.faces.len() {
                return Err(Error::Parse(format!("face {} out of range", row.face)));
            }
            if !(row.multiplicity > 0.0 && row.multiplicity.is_finite()) {
                return Err(Error::Parse(format!("multiplicity {} must be positive", row.multiplicity)));
            }
            self.multiplicity[row.face] = row.multiplicity;
        }
        Ok(())
    }
}

/// Vertices on concentric rings of a disc of radius `radius`, ring `k` carrying
/// `6k` points, triangulated between neighbouring rings. `z = height(x, y)`.
pub fn disc_graph<F: Fn(f64, f64) -> f64>(radius: f64, h: f64, height: F) -> Result<DiscreteVarifold> {
    check_pitch(radius, h)?;
    let rings = (radius / h).ceil().max(1.0) as usize;
    let mut vertices = vec![V3::new(0.0, 0.0, height(0.0, 0.0))];
    let mut start = vec![0usize];
    for k in 1..=rings {
        start.push(vertices.len());
        let r = radius * k as f64 / rings as f64;
        for j in 0..6 * k {
            let a = 2.0 * PI * j as f64 / (6 * k) as f64;
            let (x, y) = (r * a.cos(), r * a.sin());
            vertices.push(V3::new(x, y, height(x, y)));
        }
    }
    let mut faces = Vec::new();
    for k in 1..=rings {
        let (na, nb) = (if k == 1 { 1 } else { 6 * (k - 1) }, 6 * k);
        stitch(&mut faces, start[k - 1], na, start[k], nb);
    }
    DiscreteVarifold::new(vertices, faces)
}

/// Triangulates the strip between an inner ring (`na` points from `a0`) and
/// an outer ring (`nb` points from `b0`), both starting at angle 0.
fn stitch(faces: &mut Vec<[usize; 3]>, a0: usize, na: usize, b0: usize, nb: usize) {
    if na == 1 {
        for j in 0..nb {
            faces.push([a0, b0 + j, b0 + (j + 1) % nb]);
        }
        return;
    }
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let next_a = (i + 1) as f64 / na as f64;
        let next_b = (j + 1) as f64 / nb as f64;
        if j < nb && (i == na || next_b <= next_a) {
            faces.push([a0 + i % na, b0 + j, b0 + (j + 1) % nb]);
            j += 1;
        } else {
            faces.push([a0 + i, b0 + j % nb, a0 + (i + 1) % na]);
            i += 1;
        }
    }
}

fn check_pitch(size: f64, h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite() && size > 0.0) {
        return Err(crate::error::invalid("mesh pitch and size must be positive"));
    }
    if size / h > 1e4 {
        return Err(crate::error::invalid("mesh pitch too small for the domain"));
    }
    Ok(())
}

/// Flat disc of radius `radius` in the plane `z = 0`.
pub fn plane(radius: f64, h: f64) -> Result<DiscreteVarifold> {
    disc_graph(radius, h, |_, _| 0.0)
}

/// Gaussian bump `z = amp · exp(−(x² + y²)/width²)` over a disc.
pub fn bump(radius: f64, h: f64, amp: f64, width: f64) -> Result<DiscreteVarifold> {
    disc_graph(radius, h, move |x, y| amp * (-(x * x + y * y) / (width * width)).exp())
}

/// Sphere of radius `radius` from a geodesic subdivision of the icosahedron
/// with edge length at most about `h`.
pub fn sphere(radius: f64, h: f64) -> Result<DiscreteVarifold> {
    check_pitch(radius, h)?;
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base: Vec<V3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| V3::new(x, y, z).normalize())
    .collect();
    let tris: [[usize; 3]; 20] = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let edge = (base[0] - base[11]).norm() * radius;
    let n = (edge / h).ceil().max(1.0) as usize;
    let mut vertices: Vec<V3> = Vec::new();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut id = |p: V3, vertices: &mut Vec<V3>| -> usize {
        let q = p.normalize() * radius;
        let key = [q.x, q.y, q.z].map(|c| (c * 1e9).round() as i64);
        *index.entry(key).or_insert_with(|| {
            vertices.push(q);
            vertices.len() - 1
        })
    };
    let mut faces = Vec::new();
    for [a, b, c] in tris {
        let (pa, pb, pc) = (base[a], base[b], base[c]);
        let grid = |i: usize, j: usize| pa + (pb - pa) * (i as f64 / n as f64) + (pc - pa) * (j as f64 / n as f64);
        let mut ids = vec![vec![0usize; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n - i {
                ids[i][j] = id(grid(i, j), &mut vertices);
            }
        }
        for i in 0..n {
            for j in 0..n - i {
                faces.push([ids[i][j], ids[i + 1][j], ids[i][j + 1]]);
                if i + j + 1 < n {
                    faces.push([ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]]);
                }
            }
        }
    }
    DiscreteVarifold::new(vertices, faces)
}

/// One nappe of the polyhedral cone `θ = θ₀` (polar angle from `+z`, or from
/// `−z` when `lower`), apex at the origin, out to distance `rho_max`. Every face
/// lies in a plane through the apex.
fn nappe(theta0: f64, rho_max: f64, h: f64, lower: bool, vertices: &mut Vec<V3>, faces: &mut Vec<[usize; 3]>, apex: usize) {
    let (s, c) = theta0.sin_cos();
    let c = if lower { -c } else { c };
    let sectors = ((2.0 * PI * s * rho_max / h).ceil() as usize).max(12);
    let rings = ((rho_max / h).ceil() as usize).max(1);
    let base = vertices.len();
    for k in 1..=rings {
        let rho = rho_max * k as f64 / rings as f64;
        for j in 0..sectors {
            let a = 2.0 * PI * j as f64 / sectors as f64;
            vertices.push(rho * V3::new(s * a.cos(), s * a.sin(), c));
        }
    }
    let at = |k: usize, j: usize| base + (k - 1) * sectors + j % sectors;
    for j in 0..sectors {
        let tri = [apex, at(1, j), at(1, j + 1)];
        faces.push(if lower { [tri[0], tri[2], tri[1]] } else { tri });
        for k in 1..rings {
            let q1 = [at(k, j), at(k + 1, j), at(k + 1, j + 1)];
            let q2 = [at(k, j), at(k + 1, j + 1), at(k, j + 1)];
            for q in [q1, q2] {
                faces.push(if lower { [q[0], q[2], q[1]] } else { q });
            }
        }
    }
}

pub fn cone(theta0: f64, rho_max: f64, h: f64) -> Result<DiscreteVarifold> {
    check_cone(theta0, rho_max, h)?;
    let mut vertices = vec![V3::zeros()];
    let mut faces = Vec::new();
    nappe(theta0, rho_max, h, false, &mut vertices, &mut faces, 0);
    DiscreteVarifold::new(vertices, faces)
}

/// Both nappes `θ = θ₀` and `θ = π − θ₀`, sharing the apex.
pub fn double_cone(theta0: f64, rho_max: f64, h: f64) -> Result<DiscreteVarifold> {
    check_cone(theta0, rho_max, h)?;
    let mut vertices = vec![V3::zeros()];
    let mut faces = Vec::new();
    nappe(theta0, rho_max, h, false, &mut vertices, &mut faces, 0);
    nappe(theta0, rho_max, h, true, &mut vertices, &mut faces, 0);
    DiscreteVarifold::new(vertices, faces)
}

fn check_cone(theta0: f64, rho_max: f64, h: f64) -> Result<()> {
    check_pitch(rho_max, h)?;
    if !(theta0 > 0.0 && theta0 <= 0.5 * PI) {
        return Err(crate::error::invalid("cone angle must lie in (0, π/2]"));
    }
    Ok(())
}

/// `sheets` disjoint graphs `z = c_i + slope · x` over the unit disc, with
/// offsets `c_i` spread over `[−0.5, 0.5]`.
pub fn multigraph(sheets: usize, slope: f64, h: f64) -> Result<DiscreteVarifold> {
    if sheets == 0 {
        return Err(crate::error::invalid("at least one sheet"));
    }
    let parts = (0..sheets)
        .map(|i| {
            let c = if sheets == 1 { 0.0 } else { -0.5 + i as f64 / (sheets - 1) as f64 };
            disc_graph(1.0, h, move |x, y| c + slope * x + 0.05 * (x * y))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteVarifold::union(&parts))
}
