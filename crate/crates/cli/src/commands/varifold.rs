use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Subcommand;
use fblab_core::varifold::flatness::flatness;
use fblab_core::varifold::mesh::{cone, double_cone, plane, sphere};
use fblab_core::varifold::monotonicity::{allard_lambda, density_classify_with, monotonicity_profile};
use fblab_core::varifold::{mean_curvature_measure, DensityClassification, DiscreteVarifold, MonotonicityProfile, V3};
use serde::Serialize;
use serde_json::json;

use crate::out::{json_line, write_atomic, write_json};
use crate::Failure;

#[derive(Subcommand)]
pub enum VarifoldCmd {
    /// Monotonicity profile and curvature density at a point.
    Analyze {
        #[command(flatten)]
        mesh: MeshInput,
        #[arg(long, value_parser = super::triple, allow_hyphen_values = true)]
        xi: [f64; 3],
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        /// Allard constant; measured from the curvature measure when omitted.
        #[arg(long)]
        lambda: Option<f64>,
        /// Outer radius `R`; the largest radius when omitted.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        eps_star: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Best plane and Hausdorff flatness in a ball.
    Flat {
        #[command(flatten)]
        mesh: MeshInput,
        #[arg(long, value_parser = super::triple, allow_hyphen_values = true)]
        xi: [f64; 3],
        #[arg(long)]
        r: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic meshes: plane, sphere, cone:θ₀, doublecone:θ₀.
    Gen {
        kind: MeshKind,
        #[arg(long)]
        h: f64,
        /// Disc or sphere radius, or cone height along the generator.
        #[arg(long, default_value_t = 1.0)]
        size: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
pub struct MeshInput {
    /// ASCII OFF mesh.
    #[arg(long)]
    mesh: PathBuf,
    /// Sidecar CSV `face,multiplicity`.
    #[arg(long)]
    multiplicity: Option<PathBuf>,
}

impl MeshInput {
    fn load(&self) -> Result<DiscreteVarifold, Failure> {
        let open = |p: &Path| File::open(p).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())));
        let mut v = DiscreteVarifold::read_off(BufReader::new(open(&self.mesh)?))?;
        if let Some(m) = &self.multiplicity {
            v.load_multiplicity(open(m)?)?;
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug)]
pub enum MeshKind {
    Plane,
    Sphere,
    Cone(f64),
    DoubleCone(f64),
}

impl FromStr for MeshKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let angle = |v: &str| v.parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
        match s.split_once(':') {
            None if s == "plane" => Ok(Self::Plane),
            None if s == "sphere" => Ok(Self::Sphere),
            Some(("cone", v)) => Ok(Self::Cone(angle(v)?)),
            Some(("doublecone", v)) => Ok(Self::DoubleCone(angle(v)?)),
            _ => Err(format!("unknown mesh kind {s:?}")),
        }
    }
}

#[derive(Serialize)]
struct Analysis {
    xi: [f64; 3],
    alpha: f64,
    lambda: f64,
    lambda_measured: bool,
    r: f64,
    mass: f64,
    curvature_mass: f64,
    weighted_nondecreasing: bool,
    profile: MonotonicityProfile,
    density: DensityClassification,
}

pub fn run(c: VarifoldCmd) -> Result<String, Failure> {
    match c {
        VarifoldCmd::Analyze { mesh, xi, alpha, radii, lambda, r, eps_star, out } => {
            let v = mesh.load()?;
            let xi = V3::from(xi);
            let r = r.unwrap_or_else(|| radii.iter().copied().fold(0.0, f64::max));
            let h = mean_curvature_measure(&v)?;
            let (lambda, lambda_measured) = match lambda {
                Some(l) => (l, false),
                None => (allard_lambda(&v, &h, &xi, alpha, r, &radii)?, true),
            };
            let profile = monotonicity_profile(&v, &xi, alpha, lambda, r, &radii)?;
            let density = density_classify_with(&v, &h, &xi, alpha, eps_star, &radii)?;
            let a = Analysis {
                xi: [xi.x, xi.y, xi.z],
                alpha,
                lambda,
                lambda_measured,
                r,
                mass: v.mass(),
                curvature_mass: h.total_mass,
                weighted_nondecreasing: profile.weighted.windows(2).all(|w| w[1] >= w[0]),
                profile,
                density,
            };
            write_json(&out, &a)?;
            json_line(&json!({
                "command": "varifold analyze",
                "lambda": a.lambda,
                "weighted_nondecreasing": a.weighted_nondecreasing,
                "in_e": a.density.in_e,
            }))
        }
        VarifoldCmd::Flat { mesh, xi, r, out } => {
            let v = mesh.load()?;
            let rep = flatness(&v, &V3::from(xi), r)?;
            if let Some(out) = out {
                write_json(&out, &rep)?;
            }
            json_line(&rep)
        }
        VarifoldCmd::Gen { kind, h, size, out } => {
            let v = match kind {
                MeshKind::Plane => plane(size, h)?,
                MeshKind::Sphere => sphere(size, h)?,
                MeshKind::Cone(t) => cone(t, size, h)?,
                MeshKind::DoubleCone(t) => double_cone(t, size, h)?,
            };
            let mut bytes = Vec::new();
            v.write_off(&mut bytes)?;
            write_atomic(&out, &bytes)?;
            json_line(&json!({
                "command": "varifold gen",
                "vertices": v.vertices.len(),
                "faces": v.faces.len(),
                "mass": v.mass(),
            }))
        }
    }
}
