//! Differentially private estimation for bounded means, regression
//! discontinuity designs and random-set identification.
//!
//! The crate covers DP mechanisms with their privacy accounting, closed-form
//! global sensitivities for kernel RDD estimators, asymptotic regime
//! classification, RDD diagnostics, identification tools built on random
//! sets, and a Monte Carlo harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data_model;
pub mod diagnostics;
pub mod error;
pub mod identification;
pub mod kernels;
pub mod mechanisms;
pub mod montecarlo;
pub mod numerics;
pub mod output;
pub mod rdd;
pub mod regimes;
pub mod sensitivity;

pub use data_model::{project, Dataset, Interval, ParamSpace, PrivacyParams, RngStream, SequenceSpec};
pub use error::{Error, Result};
pub use kernels::{KernelId, KernelSpec};
pub use mechanisms::MechanismReport;
pub use sensitivity::{SensitivityKind, SensitivityReport};
