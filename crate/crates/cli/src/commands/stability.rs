use std::path::PathBuf;
use std::str::FromStr;

use clap::Subcommand;
use fblab_core::cone::build_double_cone;
use fblab_core::energy::EnergyModel;
use fblab_core::stability::{bernstein_flatness_criterion, log_test_2d, second_variation_cone, RadialTestFunction};
use serde::Serialize;

use crate::out::{json_line, write_json};
use crate::Failure;

#[derive(Subcommand)]
pub enum StabilityCmd {
    /// Second variation of the double cone against a radial test function.
    Cone {
        #[arg(long)]
        p: f64,
        /// `inv:δ` (truncated fundamental solution) or `bernstein:ε`.
        #[arg(long)]
        test: TestSpec,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curvature against area on the sphere for the double cone.
    Criterion {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `Ĉ ∫|∇ψ|²` for the logarithmic cutoff in the plane.
    Log2d {
        #[arg(long = "N")]
        n: f64,
        #[arg(long, default_value_t = 1.0)]
        chat: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct TestSpec(pub RadialTestFunction);

impl FromStr for TestSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, v) = s.split_once(':').ok_or("expected inv:δ or bernstein:ε")?;
        let v: f64 = v.parse().map_err(|e| format!("{v:?}: {e}"))?;
        match kind {
            "inv" => Ok(Self(RadialTestFunction::InverseTruncated { delta: v })),
            "bernstein" => Ok(Self(RadialTestFunction::Bernstein { eps: v })),
            _ => Err(format!("unknown test function {kind:?}")),
        }
    }
}

#[derive(Serialize)]
struct Criterion {
    p: f64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    admissible: bool,
    c_hat: f64,
}

#[derive(Serialize)]
struct Log2d {
    #[serde(rename = "N")]
    n: f64,
    c_hat: f64,
    value: f64,
}

fn emit<T: Serialize>(out: Option<PathBuf>, v: &T) -> Result<String, Failure> {
    if let Some(out) = out {
        write_json(&out, v)?;
    }
    json_line(v)
}

pub fn run(c: StabilityCmd) -> Result<String, Failure> {
    match c {
        StabilityCmd::Cone { p, test, tol, out } => {
            let sol = build_double_cone(p, 1.0)?;
            let report = second_variation_cone(&sol, &test.0, tol)?;
            emit(out, &report)
        }
        StabilityCmd::Criterion { p, out } => {
            let model = EnergyModel::power_normalized(p)?;
            let sol = build_double_cone(p, 1.0)?;
            let k = bernstein_flatness_criterion(&sol, &model);
            emit(out, &Criterion { p, lhs: k.lhs, rhs: k.rhs, ratio: k.ratio, admissible: k.admissible, c_hat: k.c_hat })
        }
        StabilityCmd::Log2d { n, chat, out } => {
            if !(chat > 0.0 && chat.is_finite()) {
                return Err(Failure::Invalid("chat must be positive".into()));
            }
            let value = log_test_2d(n, chat)?;
            emit(out, &Log2d { n, c_hat: chat, value })
        }
    }
}
