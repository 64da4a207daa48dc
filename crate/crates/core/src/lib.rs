//! Fine-Gray subdistribution hazards regression for two-cause competing
//! risks, built around forward-backward scans that evaluate the
//! log-pseudo-likelihood and its derivatives in O(n) instead of O(n^2).
//!
//! The pipeline: [`dataset`] validates and canonically orders a sample,
//! [`ipcw`] estimates the censoring survival and weight factors, [`scan`]
//! evaluates likelihood quantities (with a quadratic oracle for checking),
//! [`fit`] and [`penfit`] run unpenalized and penalized coordinate
//! descent, [`boot`] supplies bootstrap covariance and intervals, [`cif`]
//! predicts cumulative incidence with intervals and bands, and [`sim`]
//! generates synthetic two-cause samples.

pub mod boot;
pub mod cif;
pub mod dataset;
pub mod error;
pub mod fit;
pub mod ipcw;
pub mod numerics;
pub mod penfit;
pub mod rng;
pub mod scan;
pub mod sim;

pub use dataset::{Dataset, Status, Subject};
pub use error::{Error, Result};
