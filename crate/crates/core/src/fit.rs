//! Maximum pseudo-likelihood estimation by cyclic coordinate-wise Newton
//! ascent, with step-halving against the (possibly penalized) objective.
//! The same sweep engine backs the unpenalized fit and the penalized path;
//! an `Engine` switch selects the linear-time scans or the quadratic
//! reference evaluation for benchmarking.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ipcw::{censoring_km, precompute_weights, WeightSet};
use crate::numerics::{normal_quantile, two_sided_p};
use crate::penfit::PenaltySpec;
use crate::scan::{
    naive_coordinate, naive_loglik, scan_coordinate, scan_loglik, LinearPredictorState,
};

/// Which evaluation path the optimizer uses for scores and likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Scan,
    /// O(n^2) reference engine; refused above `FitOptions::naive_cap`.
    Naive,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Convergence threshold on the largest coefficient move in a sweep.
    pub tolerance: f64,
    /// Maximum number of sweeps.
    pub max_iter: usize,
    /// Starting coefficients; zero when absent.
    pub init: Option<Vec<f64>>,
    pub engine: Engine,
    /// Size guard for the naive engine.
    pub naive_cap: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-6,
            max_iter: 1000,
            init: None,
            engine: Engine::Scan,
            naive_cap: crate::scan::BRUTE_FORCE_DEFAULT_CAP,
        }
    }
}

/// Result of an unpenalized fit. `covariance` stays empty until the
/// bootstrap fills it.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub loglik: f64,
    pub null_loglik: f64,
    /// Sweeps performed (one iteration = one full cycle over coordinates).
    pub iterations: usize,
    pub converged: bool,
    /// p x p row-major bootstrap covariance, when estimated.
    pub covariance: Option<Vec<f64>>,
    /// Covariate names in input column order (`z1`..`zp`).
    pub covariate_labels: Vec<String>,
    /// Log-pseudo-likelihood after each sweep; non-decreasing by
    /// construction of the step-halving.
    pub sweep_logliks: Vec<f64>,
}

pub(crate) struct CdOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub loglik: f64,
    pub sweep_logliks: Vec<f64>,
    pub sweep_objectives: Vec<f64>,
}

const CURVATURE_FLOOR: f64 = 1e-12;
const SCORE_FLOOR: f64 = 1e-10;
const MAX_HALVINGS: usize = 30;

fn engine_loglik(
    engine: Engine,
    ds: &Dataset,
    w: &WeightSet,
    state: &mut LinearPredictorState,
) -> Result<f64> {
    match engine {
        Engine::Scan => scan_loglik(ds, w, state),
        Engine::Naive => naive_loglik(ds, w, state),
    }
}

fn engine_coordinate(
    engine: Engine,
    ds: &Dataset,
    w: &WeightSet,
    state: &mut LinearPredictorState,
    j: usize,
) -> Result<(f64, f64)> {
    match engine {
        Engine::Scan => scan_coordinate(ds, w, state, j),
        Engine::Naive => naive_coordinate(ds, w, state, j),
    }
}

/// One coordinate visit: Newton or proximal proposal, then halving until
/// the objective `-loglik/n + penalty` does not increase. Returns the
/// magnitude of the accepted move (zero when the coordinate is left alone).
#[allow(clippy::too_many_arguments)]
fn visit_coordinate(
    ds: &Dataset,
    w: &WeightSet,
    state: &mut LinearPredictorState,
    beta: &mut [f64],
    j: usize,
    penalty: Option<&PenaltySpec>,
    engine: Engine,
    objective: &mut f64,
    penalty_total: &mut f64,
) -> Result<f64> {
    let n = ds.n() as f64;
    let (g, h) = engine_coordinate(engine, ds, w, state, j)?;
    let g_s = g / n;
    let h_s = h / n;

    if h_s <= CURVATURE_FLOOR {
        if g_s.abs() <= SCORE_FLOOR {
            return Ok(0.0);
        }
        if let Some(pen) = penalty {
            // a flat coordinate pinned inside the penalty's dead zone is
            // stationary; only an informative score makes it degenerate
            if beta[j] == 0.0 && pen.zero_is_stationary(g_s) {
                return Ok(0.0);
            }
        }
        return Err(Error::DegenerateColumn {
            name: format!("z{}", j + 1),
        });
    }

    let u = h_s * beta[j] + g_s;
    let proposed = match penalty {
        Some(pen) => pen.proximal_update(u, h_s)?,
        None => u / h_s,
    };
    let full_delta = proposed - beta[j];
    if full_delta == 0.0 {
        return Ok(0.0);
    }

    let pen_old = penalty.map_or(0.0, |pen| pen.value(beta[j]));
    let mut delta = full_delta;

    // shorten the step until it applies without predictor overflow
    let mut in_state = false;
    for _ in 0..=MAX_HALVINGS {
        match state.update_eta(ds, j, delta) {
            Ok(()) => {
                in_state = true;
                break;
            }
            Err(Error::EtaOverflow { .. }) => {
                delta /= 2.0;
                if delta.abs() < f64::MIN_POSITIVE {
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    if !in_state {
        return Ok(0.0);
    }

    // the state carries beta_j + delta; halve in place until the objective
    // stops increasing, or give the coordinate up for this sweep
    for _ in 0..=MAX_HALVINGS {
        let trial_beta = beta[j] + delta;
        let trial_ll = engine_loglik(engine, ds, w, state)?;
        let pen_new = penalty.map_or(0.0, |pen| pen.value(trial_beta));
        let trial_obj = -trial_ll / n + *penalty_total - pen_old + pen_new;
        if trial_obj <= *objective + 1e-12 * (1.0 + objective.abs()) {
            beta[j] = trial_beta;
            *objective = trial_obj;
            *penalty_total += pen_new - pen_old;
            return Ok(delta.abs());
        }
        state.update_eta(ds, j, -delta / 2.0)?;
        delta /= 2.0;
        if delta.abs() < f64::MIN_POSITIVE {
            break;
        }
    }
    state.update_eta(ds, j, -delta)?;
    Ok(0.0)
}

/// Cyclic coordinate descent over all coordinates, with active-set cycling
/// between full sweeps when the penalty produces exact zeros. Convergence
/// is declared only on a full sweep.
pub(crate) fn cyclic_descent(
    ds: &Dataset,
    w: &WeightSet,
    state: &mut LinearPredictorState,
    beta: &mut [f64],
    penalty: Option<&PenaltySpec>,
    engine: Engine,
    tolerance: f64,
    max_iter: usize,
) -> Result<CdOutcome> {
    let n = ds.n() as f64;
    let p = ds.p();
    let use_active = penalty.is_some_and(|pen| pen.sparsifying());

    let mut penalty_total = penalty.map_or(0.0, |pen| {
        beta.iter().map(|&b| pen.value(b)).sum::<f64>()
    });
    let mut loglik = engine_loglik(engine, ds, w, state)?;
    let mut objective = -loglik / n + penalty_total;

    let mut sweep_logliks = Vec::new();
    let mut sweep_objectives = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let run_sweep = |coords: &[usize],
                         state: &mut LinearPredictorState,
                         beta: &mut [f64],
                         objective: &mut f64,
                         penalty_total: &mut f64,
                         loglik: &mut f64,
                         sweep_logliks: &mut Vec<f64>,
                         sweep_objectives: &mut Vec<f64>|
     -> Result<f64> {
        let mut max_delta = 0.0f64;
        for &j in coords {
            let moved = visit_coordinate(
                ds, w, state, beta, j, penalty, engine, objective, penalty_total,
            )?;
            max_delta = max_delta.max(moved);
        }
        // rebuild the predictor from the coefficients to shed the drift of
        // the incremental updates, then resync the tracked objective
        state.set_beta(ds, beta)?;
        *loglik = engine_loglik(engine, ds, w, state)?;
        *objective = -*loglik / n + *penalty_total;
        sweep_logliks.push(*loglik);
        sweep_objectives.push(*objective);
        Ok(max_delta)
    };

    let all: Vec<usize> = (0..p).collect();
    while iterations < max_iter {
        let max_delta = run_sweep(
            &all,
            state,
            beta,
            &mut objective,
            &mut penalty_total,
            &mut loglik,
            &mut sweep_logliks,
            &mut sweep_objectives,
        )?;
        iterations += 1;
        if max_delta < tolerance {
            converged = true;
            break;
        }
        if use_active {
            let mut inner = 0;
            while inner < 9 && iterations < max_iter {
                let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
                if active.is_empty() {
                    break;
                }
                let md = run_sweep(
                    &active,
                    state,
                    beta,
                    &mut objective,
                    &mut penalty_total,
                    &mut loglik,
                    &mut sweep_logliks,
                    &mut sweep_objectives,
                )?;
                iterations += 1;
                inner += 1;
                if md < tolerance {
                    break;
                }
            }
        }
    }

    Ok(CdOutcome {
        iterations,
        converged,
        loglik,
        sweep_logliks,
        sweep_objectives,
    })
}

pub(crate) fn check_naive_cap(ds: &Dataset, opts: &FitOptions) -> Result<()> {
    if opts.engine == Engine::Naive && ds.n() > opts.naive_cap {
        return Err(Error::InvalidArgument(format!(
            "naive engine refused for n = {} (cap {}); raise the cap to force",
            ds.n(),
            opts.naive_cap
        )));
    }
    Ok(())
}

/// Fit the unpenalized model by cyclic coordinate Newton ascent.
pub fn fit_unpenalized(ds: &Dataset, opts: &FitOptions) -> Result<FitResult> {
    if ds.p() == 0 {
        return Err(Error::InvalidData("no covariate columns".to_string()));
    }
    if ds.n_cause1() == 0 {
        return Err(Error::InvalidData(
            "no primary events (status = 1) in the sample".to_string(),
        ));
    }
    check_naive_cap(ds, opts)?;

    let g = censoring_km(ds);
    let w = precompute_weights(ds, &g)?;

    let mut beta = vec![0.0; ds.p()];
    let mut state = LinearPredictorState::new(ds, &beta)?;
    let null_loglik = scan_loglik(ds, &w, &mut state)?;

    if let Some(init) = &opts.init {
        if init.len() != ds.p() {
            return Err(Error::InvalidArgument(format!(
                "init length {} does not match p = {}",
                init.len(),
                ds.p()
            )));
        }
        beta.copy_from_slice(init);
        state.set_beta(ds, &beta)?;
    }

    let outcome = cyclic_descent(
        ds,
        &w,
        &mut state,
        &mut beta,
        None,
        opts.engine,
        opts.tolerance,
        opts.max_iter,
    )?;

    Ok(FitResult {
        coefficients: beta,
        loglik: outcome.loglik,
        null_loglik,
        iterations: outcome.iterations,
        converged: outcome.converged,
        covariance: None,
        covariate_labels: (1..=ds.p()).map(|j| format!("z{j}")).collect(),
        sweep_logliks: outcome.sweep_logliks,
    })
}

/// Log-pseudo-likelihood of the null model (all coefficients zero).
pub fn null_loglik(ds: &Dataset) -> Result<f64> {
    let g = censoring_km(ds);
    let w = precompute_weights(ds, &g)?;
    let mut state = LinearPredictorState::new(ds, &vec![0.0; ds.p()])?;
    scan_loglik(ds, &w, &mut state)
}

/// One row of the coefficient summary.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub label: String,
    pub coef: f64,
    pub exp_coef: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone)]
pub struct SummaryTable {
    pub alpha: f64,
    pub rows: Vec<SummaryRow>,
}

/// Wald-style summary from a fit carrying a bootstrap covariance.
pub fn summarize(fit: &FitResult, alpha: f64) -> Result<SummaryTable> {
    let cov = fit.covariance.as_ref().ok_or_else(|| {
        Error::InvalidArgument(
            "summary with standard errors requires a bootstrap covariance".to_string(),
        )
    })?;
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1], got {alpha}"
        )));
    }
    let p = fit.coefficients.len();
    let z_crit = normal_quantile(1.0 - alpha / 2.0);
    let mut rows = Vec::with_capacity(p);
    for j in 0..p {
        let var = cov[j * p + j];
        if var < 0.0 {
            return Err(Error::InvalidData(format!(
                "negative variance for coefficient {}",
                j + 1
            )));
        }
        let se = var.sqrt();
        let coef = fit.coefficients[j];
        let z = if se > 0.0 {
            coef / se
        } else if coef == 0.0 {
            0.0
        } else {
            f64::INFINITY * coef.signum()
        };
        rows.push(SummaryRow {
            label: fit.covariate_labels[j].clone(),
            coef,
            exp_coef: coef.exp(),
            se,
            z,
            p_value: if z.is_finite() { two_sided_p(z) } else { 0.0 },
            ci_lower: coef - z_crit * se,
            ci_upper: coef + z_crit * se,
        });
    }
    Ok(SummaryTable { alpha, rows })
}
