use clap::Parser;
use fgscan_core::sim::{simulate, DesignMatrix, SimConfig};
use fgscan_core::Error;
use serde_json::json;

use crate::report::{self, PhaseClock};
use crate::{parse_vector, CmdResult};

#[derive(Parser, Debug)]
pub struct Args {
    /// Sample size
    #[arg(long, env = "FGSCAN_N")]
    n: usize,
    /// Primary-cause coefficients: comma list or @file
    #[arg(long, env = "FGSCAN_BETA1")]
    beta1: String,
    /// Competing-cause coefficients; negated beta1 when omitted
    #[arg(long, env = "FGSCAN_BETA2")]
    beta2: Option<String>,
    /// Primary-cause mixture mass at z = 0
    #[arg(long, env = "FGSCAN_PI")]
    pi: f64,
    /// Censoring lower bound
    #[arg(long, env = "FGSCAN_UMIN")]
    umin: f64,
    /// Censoring upper bound
    #[arg(long, env = "FGSCAN_UMAX")]
    umax: f64,
    /// Master seed
    #[arg(long, env = "FGSCAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Covariate autocorrelation rho^|i-j|; 0 = independent columns
    #[arg(long, env = "FGSCAN_RHO", default_value_t = 0.0)]
    rho: f64,
    /// Output CSV path
    #[arg(long, env = "FGSCAN_OUT")]
    out: String,
}

pub fn run(args: &Args, jobs: usize) -> CmdResult {
    let mut clock = PhaseClock::start();
    let beta1 = parse_vector(&args.beta1)?;
    let beta2 = match &args.beta2 {
        Some(text) => parse_vector(text)?,
        None => beta1.iter().map(|b| -b).collect(),
    };
    let p = beta1.len();
    if beta2.len() != p {
        return Err(Error::InvalidArgument(format!(
            "beta2 has {} entries, beta1 has {p}",
            beta2.len()
        )));
    }
    let design = if args.rho == 0.0 {
        DesignMatrix::StandardNormal { p }
    } else {
        DesignMatrix::Ar1Normal { p, rho: args.rho }
    };
    let cfg = SimConfig {
        n: args.n,
        beta1,
        beta2,
        design,
        u_min: args.umin,
        u_max: args.umax,
        pi: args.pi,
        seed: args.seed,
    };
    let (ds, gen_report) = simulate(&cfg)?;
    clock.lap("simulate");
    ds.write_csv(&args.out)?;
    clock.lap("write");

    report::emit(
        "simulate",
        jobs,
        json!({ "seed": args.seed }),
        serde_json::Value::Null,
        json!({
            "out": args.out,
            "n": gen_report.n,
            "p": gen_report.p,
            "pi": gen_report.pi,
            "u_min": gen_report.u_min,
            "u_max": gen_report.u_max,
            "rho": args.rho,
            "status_counts": {
                "censored": gen_report.status_counts[0],
                "cause1": gen_report.status_counts[1],
                "cause2": gen_report.status_counts[2],
            },
            "clamped_draws": gen_report.clamped_draws,
        }),
        clock.finish(),
    );
    Ok(())
}
