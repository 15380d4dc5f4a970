//! Spatiotemporal event forecasting for self-exciting point processes.
//!
//! The crate estimates the trigger kernel g(t, r) of
//! `lambda(t, x) = sum_{t_i < t} g(t - t_i, |x - x_i|)` from an event
//! catalog and turns it into per-cell intensity forecasts. Three estimators
//! are provided and share one prediction and evaluation path:
//!
//! - a spectral (Green's-function) solver that measures the density's
//!   time-development operator and solves for g in transform space,
//! - a non-parametric EM fit of a histogram kernel with a uniform
//!   background,
//! - the parametric prospective-hotspot-maps weight, plus a KDE baseline.
//!
//! A cluster-construction simulator generates ground-truth catalogs for
//! recovery tests, and a rolling hit-rate/PAI backtest harness compares the
//! methods on equal footing.
//!
//! With the `parallel` feature (default) the data-parallel loops run on
//! rayon; results are bit-identical to the sequential build.

pub mod baselines;
pub mod ddgf;
pub mod em;
pub mod error;
mod exec;
pub mod evaluate;
pub mod gridding;
pub mod hawkes_sim;
pub mod ingest;
pub mod kernel;
pub mod methods;
pub mod predict;
pub mod spectral;

pub use error::{Error, Result};
