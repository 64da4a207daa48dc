//! Cumulative incidence prediction: Breslow-type baseline subdistribution
//! hazard, the predicted CIF for a covariate profile, and bootstrap
//! pointwise intervals and supremum confidence bands on the
//! log(-log) scale.

use rayon::prelude::*;

use crate::boot::BootstrapControl;
use crate::dataset::{Dataset, Status};
use crate::error::{Error, Result};
use crate::fit::{fit_unpenalized, FitOptions};
use crate::ipcw::{censoring_km, precompute_weights, WeightSet};
use crate::numerics::{nearest_rank, normal_quantile, KahanSum};
use crate::rng::substream;
use crate::scan::{denominators, LinearPredictorState};

/// Floor for the supremum statistic's denominator; grid points with a
/// smaller transformed-scale spread are excluded from the supremum.
const SIGMA_FLOOR: f64 = 1e-12;

/// Replicate CIF values are pulled into this open range before the
/// log(-log) transform so early-jump replicates stay finite.
const CIF_CLAMP: f64 = 1e-15;

/// Step estimate of the cumulative baseline subdistribution hazard:
/// jumps at primary-event times, right-continuous.
#[derive(Debug, Clone)]
pub struct BaselineHazard {
    times: Vec<f64>,
    increments: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BaselineHazard {
    /// Ascending distinct primary-event times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// H(t), right-continuous.
    pub fn cumulative_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }
}

/// Breslow-type baseline: at each primary-event time the increment is
/// `1 / (n * S0(beta, X_i))`, with the denominator shared with the scans,
/// so the whole curve costs O(n).
pub fn breslow_baseline(ds: &Dataset, w: &WeightSet, beta: &[f64]) -> Result<BaselineHazard> {
    let mut state = LinearPredictorState::new(ds, beta)?;
    let denom = denominators(ds, w, &mut state)?;

    let mut times = Vec::new();
    let mut increments = Vec::new();
    // canonical order is descending: walk it backwards for ascending time,
    // merging increments at tied event times
    for i in (0..ds.n()).rev() {
        if ds.status()[i] != Status::Cause1 {
            continue;
        }
        let t = ds.times()[i];
        let inc = 1.0 / denom[i];
        match times.last() {
            Some(&last) if last == t => {
                *increments.last_mut().unwrap() += inc;
            }
            _ => {
                times.push(t);
                increments.push(inc);
            }
        }
    }

    let mut cumulative = Vec::with_capacity(increments.len());
    let mut running = KahanSum::new();
    for &inc in &increments {
        running.add(inc);
        cumulative.push(running.value());
    }

    Ok(BaselineHazard {
        times,
        increments,
        cumulative,
    })
}

/// A predicted CIF curve with optional pointwise intervals and supremum
/// band on `[t_lower, t_upper]`.
#[derive(Debug, Clone)]
pub struct CifEstimate {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub band_lower: Option<Vec<f64>>,
    pub band_upper: Option<Vec<f64>>,
    /// Bootstrap critical value for the band.
    pub critical_value: Option<f64>,
    /// Transformed-scale standard deviation per grid point.
    pub sigma: Option<Vec<f64>>,
    pub t_range: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl CifEstimate {
    /// F(t), right-continuous, zero before the first jump.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }
}

/// The log(-log) transform used for interval and band construction;
/// strictly decreasing on (0, 1).
pub fn cloglog(x: f64) -> f64 {
    (-(x.ln())).ln()
}

/// Inverse of `cloglog`; maps the whole real line into (0, 1).
pub fn inv_cloglog(y: f64) -> f64 {
    (-(y.exp())).exp()
}

/// Predicted CIF for covariate profile `z0`:
/// `F(t; z0) = 1 - exp(-exp(z0' beta) * H(t))`.
pub fn predict_cif(baseline: &BaselineHazard, beta: &[f64], z0: &[f64]) -> Result<CifEstimate> {
    if z0.len() != beta.len() {
        return Err(Error::InvalidArgument(format!(
            "profile length {} does not match p = {}",
            z0.len(),
            beta.len()
        )));
    }
    let eta0: f64 = z0.iter().zip(beta).map(|(a, b)| a * b).sum();
    let risk = eta0.exp();
    if !risk.is_finite() {
        return Err(Error::EtaOverflow {
            max_abs_eta: eta0.abs(),
            bound: crate::scan::ETA_BOUND,
        });
    }
    let values: Vec<f64> = baseline
        .cumulative()
        .iter()
        .map(|&h| (1.0 - (-risk * h).exp()).min(1.0 - CIF_CLAMP))
        .collect();
    Ok(CifEstimate {
        times: baseline.times().to_vec(),
        values,
        lower: None,
        upper: None,
        band_lower: None,
        band_upper: None,
        critical_value: None,
        sigma: None,
        t_range: None,
        warnings: Vec::new(),
    })
}

/// Pointwise (1 - alpha) intervals via bootstrap on the transformed scale.
#[allow(clippy::too_many_arguments)]
pub fn cif_pointwise_interval(
    ds: &Dataset,
    z0: &[f64],
    control: &BootstrapControl,
    alpha: f64,
    t_lower: f64,
    t_upper: f64,
    fit_opts: &FitOptions,
) -> Result<CifEstimate> {
    cif_bootstrap(ds, z0, control, alpha, t_lower, t_upper, fit_opts, false)
}

/// Pointwise intervals plus the symmetric supremum confidence band, whose
/// critical value is the bootstrap percentile of the largest standardized
/// transformed-scale deviation over the grid.
#[allow(clippy::too_many_arguments)]
pub fn cif_band(
    ds: &Dataset,
    z0: &[f64],
    control: &BootstrapControl,
    alpha: f64,
    t_lower: f64,
    t_upper: f64,
    fit_opts: &FitOptions,
) -> Result<CifEstimate> {
    cif_bootstrap(ds, z0, control, alpha, t_lower, t_upper, fit_opts, true)
}

#[allow(clippy::too_many_arguments)]
fn cif_bootstrap(
    ds: &Dataset,
    z0: &[f64],
    control: &BootstrapControl,
    alpha: f64,
    t_lower: f64,
    t_upper: f64,
    fit_opts: &FitOptions,
    with_band: bool,
) -> Result<CifEstimate> {
    control.validate()?;
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }

    let origin = fit_unpenalized(ds, fit_opts)?;
    let g = censoring_km(ds);
    let w = precompute_weights(ds, &g)?;
    let baseline = breslow_baseline(ds, &w, &origin.coefficients)?;
    let point = predict_cif(&baseline, &origin.coefficients, z0)?;

    let max_event_time = *baseline.times().last().ok_or_else(|| {
        Error::InvalidData("no primary-event times for the baseline".to_string())
    })?;
    if !(0.0 < t_lower && t_lower < t_upper && t_upper <= max_event_time) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < t_lower < t_upper <= {max_event_time} (largest primary-event time); \
             got [{t_lower}, {t_upper}]"
        )));
    }

    // evaluation grid: the original sample's primary-event times in range
    let mut warnings = Vec::new();
    let mut grid = Vec::new();
    let mut point_vals = Vec::new();
    for (i, &t) in point.times.iter().enumerate() {
        if t < t_lower || t > t_upper {
            continue;
        }
        let f = point.values[i];
        if f <= 0.0 || f >= 1.0 {
            warnings.push(format!(
                "grid point t = {t} dropped: point estimate {f} outside (0, 1)"
            ));
            continue;
        }
        grid.push(t);
        point_vals.push(f);
    }
    if grid.is_empty() {
        return Err(Error::InvalidData(format!(
            "no usable grid points in [{t_lower}, {t_upper}]"
        )));
    }

    // replicate curves evaluated on the original grid by step lookup
    let replicate_opts = FitOptions {
        init: Some(origin.coefficients.clone()),
        ..fit_opts.clone()
    };
    let outcomes: Vec<Result<Option<Vec<f64>>>> = (0..control.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(control.seed, b as u64);
            let m = ((ds.n() as f64 * control.sample_fraction).round() as usize).max(1);
            let rep = match crate::boot::resample_with_size(ds, m, &mut rng) {
                Ok(rep) => rep,
                Err(Error::DegenerateReplicate { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let fit = fit_unpenalized(&rep, &replicate_opts)?;
            let g_rep = censoring_km(&rep);
            let w_rep = precompute_weights(&rep, &g_rep)?;
            let base_rep = breslow_baseline(&rep, &w_rep, &fit.coefficients)?;
            let curve = predict_cif(&base_rep, &fit.coefficients, z0)?;
            Ok(Some(
                grid.iter()
                    .map(|&t| {
                        cloglog(curve.value_at(t).clamp(CIF_CLAMP, 1.0 - CIF_CLAMP))
                    })
                    .collect(),
            ))
        })
        .collect();

    let mut transformed: Vec<Vec<f64>> = Vec::with_capacity(control.replicates);
    let mut skipped = 0usize;
    for outcome in outcomes {
        match outcome? {
            Some(row) => transformed.push(row),
            None => skipped += 1,
        }
    }
    if skipped * 5 > control.replicates {
        return Err(Error::TooManySkipped {
            skipped,
            total: control.replicates,
        });
    }
    if skipped > 0 {
        warnings.push(format!(
            "{skipped} of {} bootstrap replicates skipped (no primary events)",
            control.replicates
        ));
    }
    let b_used = transformed.len() as f64;

    // variance of the transformed replicate curves, denominator B
    let n_grid = grid.len();
    let mut mean_m = vec![0.0; n_grid];
    for row in &transformed {
        for (m, &v) in mean_m.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean_m {
        *m /= b_used;
    }
    let mut sigma = vec![0.0; n_grid];
    for row in &transformed {
        for (s, (&v, &m)) in sigma.iter_mut().zip(row.iter().zip(&mean_m)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut sigma {
        *s = (*s / b_used).sqrt();
    }

    let point_m: Vec<f64> = point_vals.iter().map(|&f| cloglog(f)).collect();

    // pointwise interval: the transform is decreasing, so +z maps to lower
    let z = normal_quantile(1.0 - alpha / 2.0);
    let lower: Vec<f64> = point_m
        .iter()
        .zip(&sigma)
        .map(|(&m, &s)| inv_cloglog(m + z * s))
        .collect();
    let upper: Vec<f64> = point_m
        .iter()
        .zip(&sigma)
        .map(|(&m, &s)| inv_cloglog(m - z * s))
        .collect();

    let (band_lower, band_upper, critical_value) = if with_band {
        let mut sup_stats: Vec<f64> = transformed
            .iter()
            .map(|row| {
                let mut sup = 0.0f64;
                for ((&v, &m), &s) in row.iter().zip(&point_m).zip(&sigma) {
                    if s >= SIGMA_FLOOR {
                        sup = sup.max((v - m).abs() / s);
                    }
                }
                sup
            })
            .collect();
        sup_stats.sort_by(f64::total_cmp);
        if sup_stats.is_empty() {
            return Err(Error::InvalidData(
                "no bootstrap statistics available for the band percentile".to_string(),
            ));
        }
        let c = nearest_rank(&sup_stats, 1.0 - alpha);
        let bl: Vec<f64> = point_m
            .iter()
            .zip(&sigma)
            .map(|(&m, &s)| inv_cloglog(m + c * s))
            .collect();
        let bu: Vec<f64> = point_m
            .iter()
            .zip(&sigma)
            .map(|(&m, &s)| inv_cloglog(m - c * s))
            .collect();
        (Some(bl), Some(bu), Some(c))
    } else {
        (None, None, None)
    };

    Ok(CifEstimate {
        times: grid,
        values: point_vals,
        lower: Some(lower),
        upper: Some(upper),
        band_lower,
        band_upper,
        critical_value,
        sigma: Some(sigma),
        t_range: Some((t_lower, t_upper)),
        warnings,
    })
}
