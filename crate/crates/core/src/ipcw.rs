//! Inverse probability of censoring weighting: the product-limit estimate
//! of the censoring survival G(t) = Pr(C >= t) and the per-subject factors
//! that keep the pairwise risk-set weights separable for the scans.

use crate::dataset::{Dataset, Status};
use crate::error::{Error, Result};

/// Right-continuous step estimate of the censoring survival, with the
/// left-limit product convention: G(t) multiplies the factors of all
/// censoring times strictly below `t`, so `G(X_i)` estimates Pr(C >= X_i).
#[derive(Debug, Clone)]
pub struct CensoringSurvival {
    /// Ascending distinct censoring times.
    jump_times: Vec<f64>,
    /// Survival value on the interval starting just past each jump time.
    values: Vec<f64>,
}

impl CensoringSurvival {
    /// Evaluate G(t).
    pub fn evaluate(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&c| c < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Product-limit estimate of the censoring survival: censorings are the
/// events, observed failures of either cause leave the risk set. At a
/// shared time, failures are removed from the risk set before the
/// censorings are counted (censoring happens after events at ties).
pub fn censoring_km(ds: &Dataset) -> CensoringSurvival {
    let n = ds.n();
    let times = ds.times();
    let status = ds.status();
    let groups = ds.group_starts();

    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0f64;
    let mut at_risk = n;

    // canonical order is descending; walk groups in ascending time
    for g in (0..groups.len() - 1).rev() {
        let (start, end) = (groups[g], groups[g + 1]);
        let mut d_event = 0usize;
        let mut d_cens = 0usize;
        for i in start..end {
            match status[i] {
                Status::Censored => d_cens += 1,
                _ => d_event += 1,
            }
        }
        if d_cens > 0 {
            let risk = at_risk - d_event;
            // single division keeps simple factors exact (e.g. 2/3)
            surv *= (risk - d_cens) as f64 / risk as f64;
            jump_times.push(times[start]);
            values.push(surv);
        }
        at_risk -= end - start;
    }

    CensoringSurvival { jump_times, values }
}

/// Per-subject weight factors in canonical order: `g_at_x[i] = G(X_i)` for
/// everyone, and `inv_g_at_x[k] = 1 / G(X_k)` for competing-event subjects
/// (NaN elsewhere; it never enters a sum). The pairwise weight for an event
/// `i` and a competing-event `k` observed earlier is the product
/// `g_at_x[i] * inv_g_at_x[k]`, so no n-by-n matrix is ever formed.
#[derive(Debug, Clone)]
pub struct WeightSet {
    g_at_x: Vec<f64>,
    inv_g_at_x: Vec<f64>,
}

impl WeightSet {
    pub fn g_at_x(&self) -> &[f64] {
        &self.g_at_x
    }

    pub fn inv_g_at_x(&self) -> &[f64] {
        &self.inv_g_at_x
    }
}

/// Precompute the separable weight factors from a censoring survival fitted
/// on the same dataset.
pub fn precompute_weights(ds: &Dataset, g: &CensoringSurvival) -> Result<WeightSet> {
    let n = ds.n();
    let times = ds.times();
    let status = ds.status();
    let groups = ds.group_starts();

    let mut g_at_x = vec![0.0; n];
    let mut inv_g_at_x = vec![f64::NAN; n];

    // Walk ascending so G at each group is the running product over
    // strictly earlier censoring times; mirrors `censoring_km`.
    let mut surv = 1.0f64;
    let mut at_risk = n;
    for gi in (0..groups.len() - 1).rev() {
        let (start, end) = (groups[gi], groups[gi + 1]);
        for i in start..end {
            g_at_x[i] = surv;
        }
        let mut d_event = 0usize;
        let mut d_cens = 0usize;
        for i in start..end {
            match status[i] {
                Status::Censored => d_cens += 1,
                _ => d_event += 1,
            }
        }
        if d_cens > 0 {
            let risk = at_risk - d_event;
            surv *= (risk - d_cens) as f64 / risk as f64;
        }
        at_risk -= end - start;
    }

    for i in 0..n {
        if status[i] == Status::Cause2 {
            if g_at_x[i] <= 0.0 {
                return Err(Error::CensoringPositivity { time: times[i] });
            }
            inv_g_at_x[i] = 1.0 / g_at_x[i];
        }
    }

    // g was fitted on ds; keep a consistency check against the step lookup
    debug_assert!(
        (0..n).all(|i| g_at_x[i] == g.evaluate(times[i])),
        "weight factors disagree with the censoring survival lookup"
    );

    Ok(WeightSet { g_at_x, inv_g_at_x })
}
