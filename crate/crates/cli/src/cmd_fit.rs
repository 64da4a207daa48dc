use clap::{Parser, ValueEnum};
use fgscan_core::boot::{fit_with_covariance, BootstrapControl};
use fgscan_core::fit::{fit_unpenalized, summarize, Engine, FitOptions};
use fgscan_core::Dataset;
use serde_json::{json, Value};

use crate::report::{self, PhaseClock};
use crate::CmdResult;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EngineArg {
    Scan,
    Naive,
}

impl From<EngineArg> for Engine {
    fn from(value: EngineArg) -> Engine {
        match value {
            EngineArg::Scan => Engine::Scan,
            EngineArg::Naive => Engine::Naive,
        }
    }
}

#[derive(Parser, Debug)]
pub struct Args {
    /// Input dataset CSV (ftime,fstatus,z1..zp)
    #[arg(long, env = "FGSCAN_DATA")]
    data: String,
    /// Estimate the bootstrap covariance and report se/z/p and intervals
    #[arg(long, env = "FGSCAN_VARIANCE")]
    variance: bool,
    /// Bootstrap replicates
    #[arg(short = 'B', long = "B", env = "FGSCAN_B", default_value_t = 100)]
    replicates: usize,
    /// Bootstrap master seed
    #[arg(long, env = "FGSCAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Two-sided interval level
    #[arg(long, env = "FGSCAN_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    /// Convergence tolerance on the largest coefficient move per sweep
    #[arg(long, env = "FGSCAN_TOL", default_value_t = 1e-6)]
    tol: f64,
    /// Maximum sweeps
    #[arg(long, env = "FGSCAN_MAX_ITER", default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, env = "FGSCAN_ENGINE", value_enum, default_value_t = EngineArg::Scan)]
    engine: EngineArg,
    /// Allow the naive engine beyond its size cap
    #[arg(long, env = "FGSCAN_FORCE")]
    force: bool,
}

pub fn fit_options(tol: f64, max_iter: usize, engine: EngineArg, force: bool) -> FitOptions {
    FitOptions {
        tolerance: tol,
        max_iter,
        engine: engine.into(),
        naive_cap: if force {
            usize::MAX
        } else {
            FitOptions::default().naive_cap
        },
        ..FitOptions::default()
    }
}

pub fn run(args: &Args, jobs: usize) -> CmdResult {
    let mut clock = PhaseClock::start();
    let ds = Dataset::load_csv(&args.data)?;
    clock.lap("load");

    let opts = fit_options(args.tol, args.max_iter, args.engine, args.force);
    let (fit, boot_info) = if args.variance {
        let control = BootstrapControl {
            replicates: args.replicates,
            seed: args.seed,
            sample_fraction: 1.0,
        };
        let fit = fit_with_covariance(&ds, &opts, &control)?;
        let info = json!({ "replicates": args.replicates });
        (fit, info)
    } else {
        (fit_unpenalized(&ds, &opts)?, Value::Null)
    };
    clock.lap("fit");

    let coefficients: Vec<Value> = if args.variance {
        let table = summarize(&fit, args.alpha)?;
        table
            .rows
            .iter()
            .map(|r| {
                json!({
                    "label": r.label,
                    "coef": r.coef,
                    "exp_coef": r.exp_coef,
                    "se": r.se,
                    "z": r.z,
                    "p_value": r.p_value,
                    "ci_lower": r.ci_lower,
                    "ci_upper": r.ci_upper,
                })
            })
            .collect()
    } else {
        fit.coefficients
            .iter()
            .zip(&fit.covariate_labels)
            .map(|(c, label)| {
                json!({
                    "label": label,
                    "coef": c,
                    "exp_coef": c.exp(),
                    "se": Value::Null,
                    "z": Value::Null,
                    "p_value": Value::Null,
                    "ci_lower": Value::Null,
                    "ci_upper": Value::Null,
                })
            })
            .collect()
    };

    report::emit(
        "fit",
        jobs,
        json!({ "seed": args.seed }),
        report::input_digest(&args.data, &ds),
        json!({
            "engine": format!("{:?}", args.engine).to_lowercase(),
            "alpha": args.alpha,
            "variance": args.variance,
            "bootstrap": boot_info,
            "converged": fit.converged,
            "iterations": fit.iterations,
            "loglik": fit.loglik,
            "null_loglik": fit.null_loglik,
            "coefficients": coefficients,
        }),
        clock.finish(),
    );
    Ok(())
}
