use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use clap::Args;
use fblab_core::profile::{integrate, locate_zero, ProfileOptions, ProfileState};
use serde_json::json;

use crate::out::{csv_bytes, json_line, num, write_atomic};
use crate::Failure;

#[derive(Args)]
pub struct ProfileArgs {
    #[arg(long)]
    p: f64,
    /// Initial `f,fdot` at `--theta-start`.
    #[arg(long, default_value = "1,0", value_parser = super::pair, allow_hyphen_values = true)]
    ic: (f64, f64),
    #[arg(long, default_value_t = FRAC_PI_2)]
    theta_start: f64,
    /// End angle; integrate to the first zero of `f` when omitted.
    #[arg(long)]
    theta_end: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Emit this many equally spaced dense samples instead of the integrator nodes.
    #[arg(long)]
    dense: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: ProfileArgs) -> Result<String, Failure> {
    let ic = ProfileState::new(a.theta_start, a.ic.0, a.ic.1);
    let opts = ProfileOptions::with_tol(a.tol);
    let sol = match a.theta_end {
        Some(t) => integrate(a.p, ic, t, opts)?,
        None => locate_zero(a.p, ic, opts)?,
    };
    let rows: Vec<(f64, f64, f64, f64)> = match a.dense {
        Some(0) => return Err(Failure::Invalid("--dense must be positive".into())),
        Some(n) => sol.dense_samples(n),
        None => sol.samples().iter().zip(sol.node_residuals()).map(|(s, r)| (s.theta, s.f, s.fdot, r)).collect(),
    };
    let max_residual = rows.iter().map(|r| r.3.abs()).fold(0.0, f64::max);
    let bytes = csv_bytes(
        &["theta", "f", "fdot", "residual"],
        rows.iter().map(|r| vec![num(r.0), num(r.1), num(r.2), num(r.3)]),
    )?;
    write_atomic(&a.out, &bytes)?;
    json_line(&json!({
        "command": "profile",
        "p": a.p,
        "rows": rows.len(),
        "max_residual": max_residual,
        "theta0": sol.theta0,
        "fdot_at_theta0": sol.fdot_at_theta0,
    }))
}
