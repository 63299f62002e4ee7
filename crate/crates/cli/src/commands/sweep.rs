use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use clap::Args;
use fblab_core::cone::build_double_cone;
use fblab_core::energy::{lambda_star, EnergyModel};
use fblab_core::profile::{find_theta0, ProfileState};
use fblab_core::stability::{
    bernstein_flatness_criterion, bernstein_ratio, log_test_2d, second_variation_cone, RadialTestFunction,
};
use serde::Deserialize;
use serde_json::json;

use crate::out::{csv_bytes, json_line, num, write_atomic};
use crate::Failure;

const MAX_CELLS: usize = 10_000;

#[derive(Args)]
pub struct SweepArgs {
    /// JSON `{command, grid: {name: [values]}, fixed: {name: value}}`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Target {
    StabilityCriterion,
    StabilityCone,
    Theta0,
    LambdaStar,
    Log2d,
    BernsteinRatio,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    command: Target,
    #[serde(default)]
    grid: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    fixed: BTreeMap<String, f64>,
}

type Params = BTreeMap<String, f64>;

impl Target {
    /// Parameter names with defaults (`None` for required or optional-without-default).
    fn params(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            Target::StabilityCriterion => &[("p", None)],
            Target::StabilityCone => &[("p", None), ("delta", None), ("eps", None), ("tol", Some(1e-10))],
            Target::Theta0 => &[("p", None), ("f", Some(1.0)), ("fdot", Some(0.0)), ("tol", Some(1e-10))],
            Target::LambdaStar => &[("p", None), ("lambda", Some(1.0))],
            Target::Log2d => &[("N", None), ("chat", Some(1.0))],
            Target::BernsteinRatio => &[("eps", None), ("tol", Some(1e-10))],
        }
    }

    fn outputs(self) -> &'static [&'static str] {
        match self {
            Target::StabilityCriterion => &["lhs", "rhs", "ratio", "admissible", "c_hat"],
            Target::StabilityCone => &["bulk", "boundary", "I", "delta_scaled", "c_hat"],
            Target::Theta0 => &["theta0", "fdot_at_theta0"],
            Target::LambdaStar => &["lambda_star"],
            Target::Log2d => &["value"],
            Target::BernsteinRatio => &["ratio"],
        }
    }

    fn eval(self, q: &Params) -> Result<Vec<String>, String> {
        let get = |k: &str| {
            q.get(k).copied().or_else(|| self.params().iter().find(|(n, _)| *n == k).and_then(|(_, d)| *d))
        };
        let need = |k: &str| get(k).ok_or_else(|| format!("missing parameter {k}"));
        let e = |e: fblab_core::Error| e.to_string();
        Ok(match self {
            Target::StabilityCriterion => {
                let p = need("p")?;
                let sol = build_double_cone(p, 1.0).map_err(e)?;
                let k = bernstein_flatness_criterion(&sol, &EnergyModel::power_normalized(p).map_err(e)?);
                vec![num(k.lhs), num(k.rhs), num(k.ratio), k.admissible.to_string(), num(k.c_hat)]
            }
            Target::StabilityCone => {
                let psi = match (get("delta"), get("eps")) {
                    (Some(delta), None) => RadialTestFunction::InverseTruncated { delta },
                    (None, Some(eps)) => RadialTestFunction::Bernstein { eps },
                    _ => return Err("exactly one of delta and eps".into()),
                };
                let sol = build_double_cone(need("p")?, 1.0).map_err(e)?;
                let r = second_variation_cone(&sol, &psi, need("tol")?).map_err(e)?;
                vec![num(r.bulk), num(r.boundary), num(r.i), r.delta_scaled.map(num).unwrap_or_default(), num(r.c_hat)]
            }
            Target::Theta0 => {
                let ic = ProfileState::new(FRAC_PI_2, need("f")?, need("fdot")?);
                let (t, d) = find_theta0(need("p")?, ic, need("tol")?).map_err(e)?;
                vec![num(t), num(d)]
            }
            Target::LambdaStar => {
                let m = EnergyModel::power(need("p")?, need("lambda")?).map_err(e)?;
                vec![num(lambda_star(&m).map_err(e)?.lambda_star)]
            }
            Target::Log2d => vec![num(log_test_2d(need("N")?, need("chat")?).map_err(e)?)],
            Target::BernsteinRatio => vec![num(bernstein_ratio(need("eps")?, need("tol")?).map_err(e)?)],
        })
    }
}

#[cfg(feature = "parallel")]
fn evaluate(target: Target, cells: &[Params]) -> Vec<Result<Vec<String>, String>> {
    use rayon::prelude::*;
    cells.par_iter().map(|c| target.eval(c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate(target: Target, cells: &[Params]) -> Vec<Result<Vec<String>, String>> {
    cells.iter().map(|c| target.eval(c)).collect()
}

/// Cartesian product with the last axis varying fastest; no axes gives no cells.
fn cells(grid: &BTreeMap<String, Vec<f64>>, fixed: &Params) -> Vec<Params> {
    if grid.is_empty() {
        return Vec::new();
    }
    let mut out = vec![fixed.clone()];
    for (name, values) in grid {
        out = out
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.insert(name.clone(), *v);
                    c
                })
            })
            .collect();
    }
    out
}

pub fn run(a: SweepArgs) -> Result<String, Failure> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::Invalid(format!("{}: {e}", a.config.display())))?;
    let cfg: SweepConfig = serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("sweep config: {e}")))?;
    let known = cfg.command.params();
    for name in cfg.grid.keys().chain(cfg.fixed.keys()) {
        if !known.iter().any(|(n, _)| n == name) {
            return Err(Failure::Invalid(format!("unknown parameter {name:?} for {:?}", cfg.command)));
        }
        if cfg.grid.contains_key(name) && cfg.fixed.contains_key(name) {
            return Err(Failure::Invalid(format!("parameter {name:?} is both swept and fixed")));
        }
    }
    let count = cfg.grid.values().try_fold(1usize, |acc, v| acc.checked_mul(v.len())).unwrap_or(usize::MAX);
    if count > MAX_CELLS {
        return Err(Failure::Invalid(format!("grid has {count} cells, at most {MAX_CELLS} allowed")));
    }
    let cells = cells(&cfg.grid, &cfg.fixed);
    let inputs: Vec<&str> = cfg.grid.keys().chain(cfg.fixed.keys()).map(String::as_str).collect();
    let outputs = cfg.command.outputs();
    let header: Vec<&str> = inputs.iter().copied().chain(outputs.iter().copied()).chain(["error"]).collect();
    let results = evaluate(cfg.command, &cells);
    let failures = results.iter().filter(|r| r.is_err()).count();
    let rows = cells.iter().zip(results).map(|(c, r)| {
        let mut row: Vec<String> = inputs.iter().map(|k| num(c[*k])).collect();
        match r {
            Ok(v) => row.extend(v.into_iter().chain([String::new()])),
            Err(m) => row.extend(outputs.iter().map(|_| String::new()).chain([m])),
        }
        row
    });
    write_atomic(&a.out, &csv_bytes(&header, rows)?)?;
    json_line(&json!({"command": "sweep", "rows": cells.len(), "failures": failures}))
}
