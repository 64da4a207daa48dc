use std::fs::File;
use std::io::{BufWriter, Write};

use clap::Parser;
use fgscan_core::boot::BootstrapControl;
use fgscan_core::cif::{cif_band, cif_pointwise_interval, CifEstimate};
use fgscan_core::{Dataset, Error};
use serde_json::json;

use crate::cmd_fit::{fit_options, EngineArg};
use crate::report::{self, PhaseClock};
use crate::{parse_vector, CmdResult};

#[derive(Parser, Debug)]
pub struct Args {
    /// Input dataset CSV
    #[arg(long, env = "FGSCAN_DATA")]
    data: String,
    /// Covariate profile to predict at (comma list or @file)
    #[arg(long, env = "FGSCAN_Z0")]
    z0: String,
    /// Bootstrap replicates
    #[arg(short = 'B', long = "B", env = "FGSCAN_B", default_value_t = 100)]
    replicates: usize,
    #[arg(long, env = "FGSCAN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "FGSCAN_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    /// Window lower bound (must be positive)
    #[arg(long, env = "FGSCAN_TL")]
    tl: f64,
    /// Window upper bound (at most the largest primary-event time)
    #[arg(long, env = "FGSCAN_TU")]
    tu: f64,
    /// Also compute the supremum confidence band
    #[arg(long, env = "FGSCAN_BAND")]
    band: bool,
    #[arg(long, env = "FGSCAN_TOL", default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, env = "FGSCAN_MAX_ITER", default_value_t = 1000)]
    max_iter: usize,
    /// Curves CSV output path
    #[arg(long, env = "FGSCAN_OUT")]
    out: Option<String>,
    /// Minimal SVG plot of the curves
    #[arg(long, env = "FGSCAN_SVG")]
    svg: Option<String>,
}

fn write_curves_csv(path: &str, est: &CifEstimate) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    writeln!(w, "time,estimate,lower,upper,band_lower,band_upper").map_err(io_err)?;
    for i in 0..est.times.len() {
        let opt = |v: Option<&Vec<f64>>| v.map(|c| c[i].to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            est.times[i],
            est.values[i],
            opt(est.lower.as_ref()),
            opt(est.upper.as_ref()),
            opt(est.band_lower.as_ref()),
            opt(est.band_upper.as_ref()),
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn run(args: &Args, jobs: usize) -> CmdResult {
    if !(args.tl < args.tu) {
        return Err(Error::InvalidArgument(format!(
            "need --tl < --tu, got [{}, {}]",
            args.tl, args.tu
        )));
    }
    let mut clock = PhaseClock::start();
    let ds = Dataset::load_csv(&args.data)?;
    clock.lap("load");

    let z0 = parse_vector(&args.z0)?;
    let control = BootstrapControl {
        replicates: args.replicates,
        seed: args.seed,
        sample_fraction: 1.0,
    };
    let opts = fit_options(args.tol, args.max_iter, EngineArg::Scan, false);
    let est = if args.band {
        cif_band(&ds, &z0, &control, args.alpha, args.tl, args.tu, &opts)?
    } else {
        cif_pointwise_interval(&ds, &z0, &control, args.alpha, args.tl, args.tu, &opts)?
    };
    clock.lap("bootstrap");

    for warning in &est.warnings {
        eprintln!("fgscan: warning: {warning}");
    }
    if let Some(out) = &args.out {
        write_curves_csv(out, &est)?;
    }
    if let Some(svg_path) = &args.svg {
        crate::svg::write_cif_plot(svg_path, &est)?;
    }
    clock.lap("write");

    report::emit(
        "cif",
        jobs,
        json!({ "seed": args.seed }),
        report::input_digest(&args.data, &ds),
        json!({
            "z0": z0,
            "alpha": args.alpha,
            "t_lower": args.tl,
            "t_upper": args.tu,
            "band": args.band,
            "replicates": args.replicates,
            "critical_value": est.critical_value,
            "curve_csv": args.out,
            "svg": args.svg,
            "warnings": est.warnings,
            "curve": {
                "time": est.times,
                "estimate": est.values,
                "lower": est.lower,
                "upper": est.upper,
                "band_lower": est.band_lower,
                "band_upper": est.band_upper,
            },
        }),
        clock.finish(),
    );
    Ok(())
}
