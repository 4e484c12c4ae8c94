//! Finite mixture fitting by Expectation-Maximization.
//!
//! Supports mixtures of univariate Gaussians, multivariate Gaussians and
//! Poisson distributions. All density work happens in log space, so the
//! E-step stays finite even for observations many standard deviations away
//! from every component.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! threaded restarts live in the `mixfit` companion crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

extern crate alloc;

pub mod clustering;
pub mod dataset;
pub mod distributions;
pub mod em;
mod error;
pub mod init;
mod linalg;
pub mod math;
pub mod rng;

pub use clustering::{assign_labels, label_observation, LabelAssignment, LabelRule};
pub use dataset::{Dataset, FreqTable, Observation};
pub use distributions::{
    gaussian_log_pdf, mixture_log_pdf, mvn_log_pdf, poisson_log_pmf, Components, Family,
    Gaussian1DParams, MixtureModel, MvnParams, PoissonParams,
};
pub use em::{
    e_step, em_fit, em_step, fit_restart, log_likelihood, m_step_gaussian1d, m_step_mvn,
    m_step_poisson, mle_single, select_best, update_weights, DegeneratePolicy, Estimate, FitConfig,
    FitResult, ResponsibilityMatrix, RestartRun, TraceEntry, Warning,
};
pub use error::{Error, Result};
pub use init::{init_gaussian1d, init_model, init_mvn, init_poisson, InitRecipe};
