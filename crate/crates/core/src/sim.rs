//! Two-cause competing-risks data generator.
//!
//! Cause assignment and event times follow the mixture scheme: the primary
//! cause is drawn with `Pr(eps = 1 | z) = 1 - (1 - pi)^exp(z' beta1)`, a
//! primary event time comes from inverting its conditional distribution in
//! closed form, a competing event time is exponential with rate
//! `exp(z' beta2)`, and censoring is uniform on `(u_min, u_max)`.
//!
//! Each subject consumes three uniforms in a fixed order (cause, event
//! time, censoring time) from one ChaCha8 stream, so a seed pins the whole
//! sample.

use rand::Rng;
use serde::Serialize;

use crate::dataset::{Dataset, Status, Subject};
use crate::error::{Error, Result};
use crate::rng::{master_stream, open_unit, standard_normal, Stream};

/// Linear predictors are clamped to this magnitude inside the inversion
/// and the competing-event rate; beyond it the closed forms underflow.
pub const ETA_CLAMP: f64 = 30.0;

/// Covariate design: caller-supplied rows or generated normals.
#[derive(Debug, Clone)]
pub enum DesignMatrix {
    /// Row-major n x p values.
    Supplied { data: Vec<f64>, p: usize },
    /// Independent standard normal entries.
    StandardNormal { p: usize },
    /// Row-wise stationary normals with corr(z_i, z_j) = rho^|i-j|.
    Ar1Normal { p: usize, rho: f64 },
}

impl DesignMatrix {
    pub fn p(&self) -> usize {
        match self {
            DesignMatrix::Supplied { p, .. } => *p,
            DesignMatrix::StandardNormal { p } => *p,
            DesignMatrix::Ar1Normal { p, .. } => *p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub design: DesignMatrix,
    pub u_min: f64,
    pub u_max: f64,
    /// Primary-cause mixture mass at z = 0.
    pub pi: f64,
    pub seed: u64,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        let p = self.design.p();
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".to_string()));
        }
        if self.beta1.len() != p || self.beta2.len() != p {
            return Err(Error::InvalidArgument(format!(
                "beta lengths ({}, {}) must match design p = {p}",
                self.beta1.len(),
                self.beta2.len()
            )));
        }
        if self.beta1.iter().chain(&self.beta2).any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument(
                "beta entries must be finite".to_string(),
            ));
        }
        if !(self.u_min >= 0.0 && self.u_min < self.u_max && self.u_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= u_min < u_max, got [{}, {}]",
                self.u_min, self.u_max
            )));
        }
        if !(0.0 < self.pi && self.pi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pi must be in (0, 1), got {}",
                self.pi
            )));
        }
        if let DesignMatrix::Supplied { data, p } = &self.design {
            if data.len() != self.n * p {
                return Err(Error::InvalidArgument(format!(
                    "design matrix has {} entries, expected {}",
                    data.len(),
                    self.n * p
                )));
            }
            if data.iter().any(|z| !z.is_finite()) {
                return Err(Error::InvalidArgument(
                    "design matrix entries must be finite".to_string(),
                ));
            }
        }
        if let DesignMatrix::Ar1Normal { rho, .. } = self.design {
            if !(rho.abs() < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "ar1 correlation must satisfy |rho| < 1, got {rho}"
                )));
            }
        }
        Ok(())
    }
}

/// What the generator actually produced, for the run report.
#[derive(Debug, Clone, Serialize)]
pub struct GenerationReport {
    pub n: usize,
    pub p: usize,
    pub pi: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub seed: u64,
    /// Counts of censored / primary / competing observations.
    pub status_counts: [usize; 3],
    /// Draws whose linear predictor hit the clamp.
    pub clamped_draws: usize,
}

/// Invert the conditional primary-event distribution at probability `u`.
pub fn invert_cause1_cdf(u: f64, eta1: f64, pi: f64) -> Result<f64> {
    if !(0.0 < u && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "u must be in (0, 1), got {u}"
        )));
    }
    let e = eta1.clamp(-ETA_CLAMP, ETA_CLAMP).exp();
    let q = (1.0 - pi).powf(e);
    let inner = (1.0 - u * (1.0 - q)).powf(1.0 / e);
    let t = -(1.0 - (1.0 - inner) / pi).ln();
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidData(format!(
            "inversion underflow at u = {u}, eta1 = {eta1}, pi = {pi}"
        )));
    }
    Ok(t)
}

fn generate_design(cfg: &SimConfig, rng: &mut Stream) -> Vec<f64> {
    let p = cfg.design.p();
    match &cfg.design {
        DesignMatrix::Supplied { data, .. } => data.clone(),
        DesignMatrix::StandardNormal { .. } => {
            (0..cfg.n * p).map(|_| standard_normal(rng)).collect()
        }
        DesignMatrix::Ar1Normal { rho, .. } => {
            // stationary AR(1) recursion = Cholesky factor of the
            // rho^|i-j| correlation applied to the innovations
            let innov_scale = (1.0 - rho * rho).sqrt();
            let mut data = vec![0.0; cfg.n * p];
            for i in 0..cfg.n {
                let row = &mut data[i * p..(i + 1) * p];
                row[0] = standard_normal(rng);
                for j in 1..p {
                    row[j] = rho * row[j - 1] + innov_scale * standard_normal(rng);
                }
            }
            data
        }
    }
}

/// Generate a sample. The dataset keeps the generated subject order as its
/// input order; the report carries the realized status counts.
pub fn simulate(cfg: &SimConfig) -> Result<(Dataset, GenerationReport)> {
    cfg.validate()?;
    let p = cfg.design.p();
    let mut rng = master_stream(cfg.seed);
    let design = generate_design(cfg, &mut rng);

    let mut subjects = Vec::with_capacity(cfg.n);
    let mut status_counts = [0usize; 3];
    let mut clamped = 0usize;

    for i in 0..cfg.n {
        let row = &design[i * p..(i + 1) * p];
        let eta1: f64 = row.iter().zip(&cfg.beta1).map(|(z, b)| z * b).sum();
        let eta2: f64 = row.iter().zip(&cfg.beta2).map(|(z, b)| z * b).sum();
        if eta1.abs() > ETA_CLAMP || eta2.abs() > ETA_CLAMP {
            clamped += 1;
        }

        // draw order per subject: cause, event time, censoring time
        let u_cause: f64 = rng.random();
        let q = (1.0 - cfg.pi).powf(eta1.clamp(-ETA_CLAMP, ETA_CLAMP).exp());
        let cause = if u_cause < q {
            Status::Cause2
        } else {
            Status::Cause1
        };

        let u_time = open_unit(&mut rng);
        let event_time = match cause {
            Status::Cause1 => invert_cause1_cdf(u_time, eta1, cfg.pi)?,
            Status::Cause2 => {
                let rate = eta2.clamp(-ETA_CLAMP, ETA_CLAMP).exp();
                -(1.0 - u_time).ln() / rate
            }
            Status::Censored => unreachable!(),
        };

        let u_cens = open_unit(&mut rng);
        let censor_time = cfg.u_min + (cfg.u_max - cfg.u_min) * u_cens;

        let (time, status) = if event_time <= censor_time {
            (event_time, cause)
        } else {
            (censor_time, Status::Censored)
        };
        // both times are strictly positive; the minimum stays valid
        let time = if time > 0.0 { time } else { f64::MIN_POSITIVE };
        status_counts[status.code() as usize] += 1;
        subjects.push(Subject {
            time,
            status,
            covariates: row.to_vec(),
        });
    }

    let report = GenerationReport {
        n: cfg.n,
        p,
        pi: cfg.pi,
        u_min: cfg.u_min,
        u_max: cfg.u_max,
        seed: cfg.seed,
        status_counts,
        clamped_draws: clamped,
    };
    let ds = Dataset::canonicalize_lenient(subjects)?;
    Ok((ds, report))
}

/// Conditional CDF of a primary-event time given the covariates; the
/// forward direction of `invert_cause1_cdf`.
pub fn cause1_conditional_cdf(t: f64, eta1: f64, pi: f64) -> f64 {
    let e = eta1.clamp(-ETA_CLAMP, ETA_CLAMP).exp();
    let q = (1.0 - pi).powf(e);
    let num = 1.0 - (1.0 - pi * (1.0 - (-t).exp())).powf(e);
    num / (1.0 - q)
}
