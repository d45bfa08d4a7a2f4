//! Pricing and calibration for equity options under multiplicative
//! microstructure noise.
//!
//! The library covers the full workflow:
//!
//! - [`marketdata`]: option-chain and return-series ingestion, cleaning,
//!   horizon splits, CSV round trips.
//! - [`analytic`]: closed-form noise-adjusted European call prices.
//! - [`tree`]: a drift-preserving binomial lattice with an explicit
//!   risk-neutral measure and strict no-arbitrage checks.
//! - [`volmodels`]: historical moment estimators and an ARMA(3)-GARCH(1,1)
//!   fit with Student-t innovations.
//! - [`simulation`]: noisy price paths, antithetic Monte Carlo pricing,
//!   and the accumulated sign-flip process used for distribution checks.
//! - [`calibration`]: per-quote implied noise and implied (drift, vol)
//!   extraction plus median-based noise parameter aggregation.
//! - [`surfaces`]: winsorization, kernel smoothing onto regular grids,
//!   and grid export/import with JSON sidecars.
//! - [`pipeline`]: the end-to-end run that ties everything together.
//!
//! Time is measured in trading days throughout; rates and volatilities
//! are per trading day unless a name says otherwise. Conversions live in
//! [`analytic::daily_rate`] and [`analytic::TRADING_DAYS_PER_YEAR`].

// Guards are written `!(x > 0.0)` on purpose: the negated form rejects
// NaN along with the out-of-range values, where `x <= 0.0` would let
// NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod calibration;
pub mod error;
pub mod marketdata;
pub mod numerics;
pub mod pipeline;
pub mod simulation;
pub mod surfaces;
pub mod tree;
pub mod volmodels;

pub use analytic::{bsm_noise_call, daily_rate, TRADING_DAYS_PER_YEAR};
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport};
