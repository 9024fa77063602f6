//! Monte Carlo power analysis for studies with correlated, mixed-scale
//! predictors.
//!
//! The pipeline has three generative/analytic building blocks:
//!
//! - a [`PredictorModel`](generators::PredictorModel) producing rows of
//!   correlated predictors (resampling, C-vine Gaussian copula, or a copula
//!   estimated from data),
//! - an [`OutcomeModel`](generators::OutcomeModel) producing outcomes from a
//!   mean function, a family and a noise level,
//! - an [`InferenceModel`](inference::InferenceModel) that fits each
//!   simulated dataset and reports named significance criteria.
//!
//! [`engine::sim_power`] and [`engine::sim_curve`] repeat the
//! generate-fit loop and [`engine::power_summary`] turns criterion values
//! into power estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corr_vine;
pub mod engine;
pub mod expr;
pub mod generators;
pub mod inference;
pub mod marginals;
pub mod snr;
pub mod table;
