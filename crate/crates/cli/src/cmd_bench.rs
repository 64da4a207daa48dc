use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use fgscan_core::fit::{fit_unpenalized, Engine, FitOptions};
use fgscan_core::sim::{simulate, DesignMatrix, SimConfig};
use fgscan_core::Error;
use serde_json::{json, Value};

use crate::report::{self, PhaseClock};
use crate::CmdResult;

const BETA_STAR: [f64; 10] = [0.40, -0.40, 0.0, -0.50, 0.0, 0.60, 0.75, 0.0, 0.0, -0.80];

/// Sizes above this need --force for the quadratic engine.
const NAIVE_SIZE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchEngine {
    Scan,
    Naive,
    Both,
}

#[derive(Parser, Debug)]
pub struct Args {
    /// Comma-separated sample sizes
    #[arg(long, env = "FGSCAN_SIZES", default_value = "1000,2000,4000,8000")]
    sizes: String,
    /// Covariate dimension (reference effects cycled to length p)
    #[arg(long, env = "FGSCAN_P", default_value_t = 10)]
    p: usize,
    #[arg(long, env = "FGSCAN_ENGINE", value_enum, default_value_t = BenchEngine::Both)]
    engine: BenchEngine,
    /// Timed fits per size
    #[arg(long, env = "FGSCAN_REPLICATES", default_value_t = 1)]
    replicates: usize,
    #[arg(long, env = "FGSCAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Fixed sweep budget per fit; 0 runs each fit to convergence
    #[arg(long, env = "FGSCAN_SWEEPS", default_value_t = 5)]
    sweeps: usize,
    /// Run the naive engine above its size cap
    #[arg(long, env = "FGSCAN_FORCE")]
    force: bool,
    /// Timing CSV output (n, engine, replicate, seconds)
    #[arg(long, env = "FGSCAN_OUT")]
    out: Option<String>,
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, Error> {
    let mut sizes = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        sizes.push(token.parse::<usize>().map_err(|_| {
            Error::InvalidArgument(format!("bad size '{token}'"))
        })?);
    }
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no sizes given".to_string()));
    }
    Ok(sizes)
}

fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let k = points.len() as f64;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for &(n, t) in points {
        let (x, y) = ((n as f64).ln(), t.ln());
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
    }
    (k * sxy - sx * sy) / (k * sxx - sx * sx)
}

pub fn run(args: &Args, jobs: usize) -> CmdResult {
    let sizes = parse_sizes(&args.sizes)?;
    let run_naive = matches!(args.engine, BenchEngine::Naive | BenchEngine::Both);
    let run_scan = matches!(args.engine, BenchEngine::Scan | BenchEngine::Both);
    if run_naive && !args.force {
        if let Some(&n) = sizes.iter().find(|&&n| n > NAIVE_SIZE_CAP) {
            return Err(Error::InvalidArgument(format!(
                "naive engine refused at n = {n} (cap {NAIVE_SIZE_CAP}); pass --force to override"
            )));
        }
    }

    let beta1: Vec<f64> = (0..args.p).map(|j| BETA_STAR[j % 10]).collect();
    let opts_for = |engine: Engine| FitOptions {
        tolerance: if args.sweeps > 0 { 0.0 } else { 1e-6 },
        max_iter: if args.sweeps > 0 { args.sweeps } else { 1000 },
        engine,
        naive_cap: usize::MAX,
        ..FitOptions::default()
    };

    let mut clock = PhaseClock::start();
    let mut rows: Vec<Value> = Vec::new();
    let mut agreement: Vec<Value> = Vec::new();
    let mut scan_means: Vec<(usize, f64)> = Vec::new();
    let mut naive_means: Vec<(usize, f64)> = Vec::new();

    for (si, &n) in sizes.iter().enumerate() {
        let mut scan_total = 0.0;
        let mut naive_total = 0.0;
        for rep in 0..args.replicates {
            let cfg = SimConfig {
                n,
                beta1: beta1.clone(),
                beta2: beta1.iter().map(|b| -b).collect(),
                design: DesignMatrix::Ar1Normal { p: args.p, rho: 0.5 },
                u_min: 0.0,
                u_max: 1.0,
                pi: 0.5,
                seed: args
                    .seed
                    .wrapping_add(1_000_003u64.wrapping_mul(si as u64) + rep as u64),
            };
            let (ds, _) = simulate(&cfg)?;

            let mut scan_coefs = None;
            if run_scan {
                let t0 = Instant::now();
                let fit = fit_unpenalized(&ds, &opts_for(Engine::Scan))?;
                let secs = t0.elapsed().as_secs_f64();
                scan_total += secs;
                rows.push(json!({"n": n, "engine": "scan", "replicate": rep, "seconds": secs}));
                scan_coefs = Some(fit.coefficients);
            }
            if run_naive {
                let t0 = Instant::now();
                let fit = fit_unpenalized(&ds, &opts_for(Engine::Naive))?;
                let secs = t0.elapsed().as_secs_f64();
                naive_total += secs;
                rows.push(json!({"n": n, "engine": "naive", "replicate": rep, "seconds": secs}));
                if let Some(scan_coefs) = scan_coefs {
                    let diff = scan_coefs
                        .iter()
                        .zip(&fit.coefficients)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    agreement.push(json!({"n": n, "replicate": rep, "max_coef_diff": diff}));
                }
            }
        }
        if run_scan {
            scan_means.push((n, scan_total / args.replicates as f64));
        }
        if run_naive {
            naive_means.push((n, naive_total / args.replicates as f64));
        }
    }
    clock.lap("bench");

    if let Some(out) = &args.out {
        let file = File::create(out).map_err(|e| Error::io(out, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(out.clone(), e);
        writeln!(w, "n,engine,replicate,seconds").map_err(io_err)?;
        for row in &rows {
            writeln!(
                w,
                "{},{},{},{}",
                row["n"], row["engine"].as_str().unwrap(), row["replicate"], row["seconds"]
            )
            .map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        clock.lap("write");
    }

    let slopes = json!({
        "scan": if scan_means.len() > 1 { json!(log_log_slope(&scan_means)) } else { Value::Null },
        "naive": if naive_means.len() > 1 { json!(log_log_slope(&naive_means)) } else { Value::Null },
    });

    report::emit(
        "bench",
        jobs,
        json!({ "seed": args.seed }),
        Value::Null,
        json!({
            "sizes": sizes,
            "p": args.p,
            "engine": format!("{:?}", args.engine).to_lowercase(),
            "replicates": args.replicates,
            "sweeps": args.sweeps,
            "timings": rows,
            "agreement": agreement,
            "log_log_slopes": slopes,
            "csv": args.out,
        }),
        clock.finish(),
    );
    Ok(())
}
