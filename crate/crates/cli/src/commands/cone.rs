use std::path::PathBuf;

use clap::{Args, Subcommand};
use fblab_core::cone::build_double_cone;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::out::{csv_bytes, json_line, num, write_atomic, write_json};
use crate::Failure;

#[derive(Args)]
pub struct ConeArgs {
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Gradient modulus on the free boundary.
    #[arg(long, global = true, default_value_t = 1.0)]
    grad: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    sub: Option<ConeSub>,
}

#[derive(Subcommand)]
enum ConeSub {
    /// Random points in a ball with u and its gradient: x,y,z,u,ux,uy,uz.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct ConeSummary {
    p: f64,
    theta0: f64,
    scale: f64,
    band_area: f64,
    kappa_total: f64,
    lambda_star: f64,
}

pub fn run(a: ConeArgs) -> Result<String, Failure> {
    let p = a.p.ok_or_else(|| Failure::Invalid("--p is required".into()))?;
    let sol = build_double_cone(p, a.grad)?;
    match a.sub {
        None => {
            let g = sol.geometry();
            let s = ConeSummary {
                p,
                theta0: sol.theta0,
                scale: sol.scale,
                band_area: g.band_area,
                kappa_total: g.total_sphere_curvature,
                lambda_star: sol.lambda_star_unit()?,
            };
            if let Some(out) = &a.out {
                write_json(out, &s)?;
            }
            json_line(&s)
        }
        Some(ConeSub::Sample { n, radius, seed, out }) => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Failure::Invalid("radius must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::with_capacity(n);
            while rows.len() < n {
                let x = [0; 3].map(|_| radius * rng.random_range(-1.0..1.0));
                let r2 = x.iter().map(|v| v * v).sum::<f64>();
                if r2 > radius * radius || r2 == 0.0 {
                    continue;
                }
                let g = sol.eval_grad(x)?;
                rows.push(vec![num(x[0]), num(x[1]), num(x[2]), num(sol.u(x)), num(g[0]), num(g[1]), num(g[2])]);
            }
            write_atomic(&out, &csv_bytes(&["x", "y", "z", "u", "ux", "uy", "uz"], rows)?)?;
            json_line(&json!({"command": "cone sample", "p": p, "rows": n, "theta0": sol.theta0}))
        }
    }
}
