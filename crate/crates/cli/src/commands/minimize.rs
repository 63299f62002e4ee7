use std::path::PathBuf;

use clap::Args;
use fblab_core::energy::ModelRegistry;
use fblab_core::solver2d::{bernoulli_residual, extract_fb, minimize, Minimize2dConfig};
use serde::Serialize;

use crate::out::{csv_bytes, json_line, num, write_atomic, write_json};
use crate::Failure;

#[derive(Args)]
pub struct MinimizeArgs {
    /// JSON `{nx, ny, model, lambda_mode, dirichlet, schedule}`.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving u.csv, fb.csv and summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Free boundary level in units of `h`.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
}

#[derive(Serialize)]
struct Summary {
    energy_hard: f64,
    fb_length: f64,
    bernoulli_max: Option<f64>,
    bernoulli_mean: Option<f64>,
}

pub fn run(a: MinimizeArgs) -> Result<String, Failure> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::Invalid(format!("{}: {e}", a.config.display())))?;
    let cfg: Minimize2dConfig = serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("config: {e}")))?;
    if !(a.threshold >= 0.0 && a.threshold.is_finite()) {
        return Err(Failure::Invalid("threshold must be nonnegative".into()));
    }
    let state = cfg.build(&ModelRegistry::default())?;
    let (s, rep) = minimize(state, &cfg.schedule)?;
    let fb = extract_fb(&s, a.threshold);
    let res = if fb.is_empty() { None } else { Some(bernoulli_residual(&s, &fb)?) };
    let summary = Summary {
        energy_hard: rep.energy_hard,
        fb_length: fb.length(),
        bernoulli_max: res.map(|r| r.max),
        bernoulli_mean: res.map(|r| r.mean),
    };
    std::fs::create_dir_all(&a.out)?;
    let grid = (0..=s.ny).map(|j| (0..=s.nx).map(|i| num(s.value(i, j))).collect());
    write_atomic(&a.out.join("u.csv"), &csv_bytes(&[], grid)?)?;
    let fb_rows = fb
        .lines
        .iter()
        .enumerate()
        .flat_map(|(k, l)| l.iter().map(move |p| vec![num(p.x), num(p.y), num(p.grad), k.to_string()]));
    write_atomic(&a.out.join("fb.csv"), &csv_bytes(&["x", "y", "grad_mod", "line"], fb_rows)?)?;
    write_json(&a.out.join("summary.json"), &summary)?;
    json_line(&summary)
}
