use std::fs::File;
use std::io::{BufWriter, Write};

use clap::{Parser, ValueEnum};
use fgscan_core::penfit::{fit_path, PathOptions, PenaltyKind};
use fgscan_core::{Dataset, Error};
use serde_json::{json, Value};

use crate::cmd_fit::EngineArg;
use crate::report::{self, PhaseClock};
use crate::{parse_lambda_grid, CmdResult};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyArg {
    Lasso,
    Ridge,
    Scad,
    Mcp,
}

impl From<PenaltyArg> for PenaltyKind {
    fn from(value: PenaltyArg) -> PenaltyKind {
        match value {
            PenaltyArg::Lasso => PenaltyKind::Lasso,
            PenaltyArg::Ridge => PenaltyKind::Ridge,
            PenaltyArg::Scad => PenaltyKind::Scad,
            PenaltyArg::Mcp => PenaltyKind::Mcp,
        }
    }
}

#[derive(Parser, Debug)]
pub struct Args {
    /// Input dataset CSV
    #[arg(long, env = "FGSCAN_DATA")]
    data: String,
    #[arg(long, env = "FGSCAN_PENALTY", value_enum)]
    penalty: PenaltyArg,
    /// Descending log grid as count:min:max
    #[arg(long, env = "FGSCAN_LAMBDA_GRID", default_value = "25:0.001:0.1")]
    lambda_grid: String,
    /// Concavity for scad/mcp (defaults 3.7 / 3.0)
    #[arg(long, env = "FGSCAN_GAMMA")]
    gamma: Option<f64>,
    /// Z-score covariates internally, back-transforming coefficients
    #[arg(long, env = "FGSCAN_STANDARDIZE")]
    standardize: bool,
    #[arg(long, env = "FGSCAN_TOL", default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, env = "FGSCAN_MAX_ITER", default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, env = "FGSCAN_ENGINE", value_enum, default_value_t = EngineArg::Scan)]
    engine: EngineArg,
    #[arg(long, env = "FGSCAN_FORCE")]
    force: bool,
    /// Path CSV output (lambda, coef_1..coef_p, df, bic)
    #[arg(long, env = "FGSCAN_OUT")]
    out: Option<String>,
}

pub fn run(args: &Args, jobs: usize) -> CmdResult {
    let mut clock = PhaseClock::start();
    let ds = Dataset::load_csv(&args.data)?;
    clock.lap("load");

    let grid = parse_lambda_grid(&args.lambda_grid)?;
    let opts = PathOptions {
        tolerance: args.tol,
        max_iter: args.max_iter,
        engine: args.engine.into(),
        naive_cap: if args.force {
            usize::MAX
        } else {
            PathOptions::default().naive_cap
        },
        standardize: args.standardize,
    };
    let path = fit_path(&ds, args.penalty.into(), args.gamma, &grid, &opts)?;
    clock.lap("fit");

    if let Some(out) = &args.out {
        let file = File::create(out).map_err(|e| Error::io(out, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(out.clone(), e);
        let mut header = String::from("lambda");
        for j in 1..=ds.p() {
            header.push_str(&format!(",coef_{j}"));
        }
        header.push_str(",df,bic");
        writeln!(w, "{header}").map_err(io_err)?;
        for (i, lambda) in path.lambdas.iter().enumerate() {
            write!(w, "{lambda}").map_err(io_err)?;
            for c in &path.coefficients[i] {
                write!(w, ",{c}").map_err(io_err)?;
            }
            writeln!(w, ",{},{}", path.df[i], path.bic[i]).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        clock.lap("write");
    }

    let per_lambda: Vec<Value> = (0..path.lambdas.len())
        .map(|i| {
            json!({
                "lambda": path.lambdas[i],
                "df": path.df[i],
                "bic": path.bic[i],
                "loglik": path.loglik[i],
                "iterations": path.iterations[i],
                "converged": path.converged[i],
            })
        })
        .collect();
    let sel = path.selected;

    report::emit(
        "penfit",
        jobs,
        json!({}),
        report::input_digest(&args.data, &ds),
        json!({
            "penalty": format!("{}", path.kind),
            "gamma": if path.gamma.is_nan() { Value::Null } else { json!(path.gamma) },
            "standardize": args.standardize,
            "engine": format!("{:?}", args.engine).to_lowercase(),
            "grid_points": path.lambdas.len(),
            "path_csv": args.out,
            "selected": {
                "index": sel,
                "lambda": path.lambdas[sel],
                "df": path.df[sel],
                "bic": path.bic[sel],
                "loglik": path.loglik[sel],
                "coefficients": path.coefficients[sel],
            },
            "per_lambda": per_lambda,
        }),
        clock.finish(),
    );
    Ok(())
}
