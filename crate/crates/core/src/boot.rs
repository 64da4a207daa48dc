//! Bootstrap engine: resampling subjects with replacement, the empirical
//! covariance of replicate coefficients, and Wald-style intervals.
//!
//! Replicate `b` always draws from substream `b` of the master seed and
//! results are reduced by replicate index, so a covariance is bitwise
//! reproducible for a given `(seed, B, data)` no matter how many worker
//! threads run the replicates.

use rayon::prelude::*;

use crate::dataset::{Dataset, Status, Subject};
use crate::error::{Error, Result};
use crate::fit::{fit_unpenalized, FitOptions, FitResult};
use crate::numerics::normal_quantile;
use crate::rng::{substream, Stream};
use rand::Rng;

/// How the bootstrap runs: replicate count, master seed, resample size as
/// a fraction of n.
#[derive(Debug, Clone, Copy)]
pub struct BootstrapControl {
    pub replicates: usize,
    pub seed: u64,
    pub sample_fraction: f64,
}

impl Default for BootstrapControl {
    fn default() -> Self {
        BootstrapControl {
            replicates: 100,
            seed: 0,
            sample_fraction: 1.0,
        }
    }
}

impl BootstrapControl {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 bootstrap replicates, got {}",
                self.replicates
            )));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample_fraction must be in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        Ok(())
    }

    fn resample_size(&self, n: usize) -> usize {
        ((n as f64 * self.sample_fraction).round() as usize).max(1)
    }
}

/// Empirical covariance of the replicate coefficient vectors.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    /// p x p row-major, symmetric with nonnegative diagonal.
    pub matrix: Vec<f64>,
    /// Archive of the replicate coefficient vectors actually used.
    pub replicate_coefs: Vec<Vec<f64>>,
    /// Replicates dropped for lacking primary events.
    pub skipped: usize,
    pub p: usize,
}

const RESAMPLE_ATTEMPTS: usize = 10;

/// Draw subjects with replacement and canonicalize. A draw without primary
/// events is retried up to ten times on the same stream before giving up.
pub fn resample(ds: &Dataset, rng: &mut Stream) -> Result<Dataset> {
    resample_with_size(ds, ds.n(), rng)
}

pub(crate) fn resample_with_size(ds: &Dataset, m: usize, rng: &mut Stream) -> Result<Dataset> {
    let n = ds.n();
    for _ in 0..RESAMPLE_ATTEMPTS {
        let mut subjects = Vec::with_capacity(m);
        let mut saw_cause1 = false;
        for _ in 0..m {
            let k = rng.random_range(0..n);
            saw_cause1 |= ds.status()[k] == Status::Cause1;
            subjects.push(Subject {
                time: ds.times()[k],
                status: ds.status()[k],
                covariates: ds.covariate_row(k),
            });
        }
        if saw_cause1 {
            return Dataset::canonicalize(subjects);
        }
    }
    Err(Error::DegenerateReplicate {
        attempts: RESAMPLE_ATTEMPTS,
    })
}

/// Fit every bootstrap replicate and form the covariance of the replicate
/// coefficients (denominator: used replicates minus one). Replicates are
/// warm-started at `warm_start` (normally the original fit's estimate).
pub(crate) fn bootstrap_covariance_from(
    ds: &Dataset,
    control: &BootstrapControl,
    fit_opts: &FitOptions,
    warm_start: &[f64],
) -> Result<CovarianceEstimate> {
    control.validate()?;
    let m = control.resample_size(ds.n());
    let replicate_opts = FitOptions {
        init: Some(warm_start.to_vec()),
        ..fit_opts.clone()
    };

    let outcomes: Vec<Result<Option<Vec<f64>>>> = (0..control.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(control.seed, b as u64);
            match resample_with_size(ds, m, &mut rng) {
                Ok(rep) => Ok(Some(fit_unpenalized(&rep, &replicate_opts)?.coefficients)),
                Err(Error::DegenerateReplicate { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut used = Vec::with_capacity(control.replicates);
    let mut skipped = 0usize;
    for outcome in outcomes {
        match outcome? {
            Some(coefs) => used.push(coefs),
            None => skipped += 1,
        }
    }
    if skipped * 5 > control.replicates {
        return Err(Error::TooManySkipped {
            skipped,
            total: control.replicates,
        });
    }

    let p = ds.p();
    let b_used = used.len();
    let mut mean = vec![0.0; p];
    for coefs in &used {
        for j in 0..p {
            mean[j] += coefs[j];
        }
    }
    for mj in &mut mean {
        *mj /= b_used as f64;
    }
    let mut matrix = vec![0.0; p * p];
    for coefs in &used {
        for j in 0..p {
            let dj = coefs[j] - mean[j];
            for k in j..p {
                matrix[j * p + k] += dj * (coefs[k] - mean[k]);
            }
        }
    }
    let denom = (b_used - 1) as f64;
    for j in 0..p {
        for k in j..p {
            matrix[j * p + k] /= denom;
            matrix[k * p + j] = matrix[j * p + k];
        }
    }

    Ok(CovarianceEstimate {
        matrix,
        replicate_coefs: used,
        skipped,
        p,
    })
}

/// Bootstrap covariance for a dataset: fits the original sample first to
/// warm-start the replicates.
pub fn bootstrap_covariance(
    ds: &Dataset,
    control: &BootstrapControl,
    fit_opts: &FitOptions,
) -> Result<CovarianceEstimate> {
    let origin = fit_unpenalized(ds, fit_opts)?;
    bootstrap_covariance_from(ds, control, fit_opts, &origin.coefficients)
}

/// Fit plus bootstrap covariance in one call.
pub fn fit_with_covariance(
    ds: &Dataset,
    fit_opts: &FitOptions,
    control: &BootstrapControl,
) -> Result<FitResult> {
    let mut fit = fit_unpenalized(ds, fit_opts)?;
    let cov = bootstrap_covariance_from(ds, control, fit_opts, &fit.coefficients)?;
    fit.covariance = Some(cov.matrix.clone());
    Ok(fit)
}

/// Per-coefficient normal intervals `beta_j +/- z_{1-alpha/2} * sigma_j`.
pub fn wald_intervals(coefs: &[f64], cov: &[f64], alpha: f64) -> Result<Vec<(f64, f64)>> {
    let p = coefs.len();
    if cov.len() != p * p {
        return Err(Error::InvalidArgument(format!(
            "covariance must be {p}x{p}, got {} entries",
            cov.len()
        )));
    }
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1], got {alpha}"
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0);
    let mut intervals = Vec::with_capacity(p);
    for j in 0..p {
        let var = cov[j * p + j];
        if var < 0.0 {
            return Err(Error::InvalidData(format!(
                "negative variance entry for coefficient {}",
                j + 1
            )));
        }
        let half = z * var.sqrt();
        intervals.push((coefs[j] - half, coefs[j] + half));
    }
    Ok(intervals)
}
