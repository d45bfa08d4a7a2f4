//! Closed-form European call pricing for an asset whose observed price
//! carries microstructure noise on top of its fundamental diffusion.
//!
//! The observed log price diffuses with total volatility sigma + epsilon,
//! where sigma is the fundamental (efficient price) volatility and epsilon
//! the noise component. epsilon may be negative as long as the total stays
//! positive. With a constant total volatility the call price keeps the
//! familiar lognormal form:
//!
//! ```text
//! C = S Phi(u+) - exp(-r tau) K Phi(u-)
//! u+ = [ln(S/K) + (r + (sigma+eps)^2 / 2) tau] / ((sigma+eps) sqrt(tau))
//! u- = u+ - (sigma+eps) sqrt(tau)
//! ```
//!
//! All rates and volatilities in this crate are quoted per trading day:
//! tau is a count of trading days, r a per-day rate, sigma and epsilon
//! per-square-root-day volatilities.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Trading-day count used to convert annualized rates to per-day rates.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Convert an annualized simple rate to the per-trading-day rate used by
/// every pricing routine in this crate.
pub fn daily_rate(annual_rate: f64) -> f64 {
    annual_rate / TRADING_DAYS_PER_YEAR
}

/// Standard normal CDF via the complementary error function, which stays
/// relatively accurate in both tails (no 1 - 1 cancellation for x << 0).
/// The libm port is accurate to a couple of ulps; the unit tests check it
/// against an adaptive quadrature oracle.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// European call on the observed (noise-carrying) price.
///
/// `tau_days` is the time to expiry in trading days, `rate_daily` the
/// per-day riskless rate, `sigma` the fundamental volatility and `epsilon`
/// the noise volatility, both per sqrt(day). Requires spot, strike, tau,
/// and the total volatility sigma + epsilon to be strictly positive.
///
/// The price depends on sigma and epsilon only through their sum, so
/// shifting volatility between the two components leaves it unchanged.
pub fn bsm_noise_call(
    spot: f64,
    strike: f64,
    tau_days: f64,
    rate_daily: f64,
    sigma: f64,
    epsilon: f64,
) -> Result<f64> {
    if !(spot > 0.0) {
        return Err(Error::Domain(format!("spot must be positive, got {spot}")));
    }
    if !(strike > 0.0) {
        return Err(Error::Domain(format!(
            "strike must be positive, got {strike}"
        )));
    }
    if !(tau_days > 0.0) {
        return Err(Error::Domain(format!(
            "time to expiry must be positive, got {tau_days}"
        )));
    }
    let total = sigma + epsilon;
    if !(total > 0.0) {
        return Err(Error::Domain(format!(
            "total volatility sigma + epsilon must be positive, got {total}"
        )));
    }
    let sq = total * tau_days.sqrt();
    let u_plus = ((spot / strike).ln() + (rate_daily + 0.5 * total * total) * tau_days) / sq;
    let u_minus = u_plus - sq;
    Ok(spot * norm_cdf(u_plus) - (-rate_daily * tau_days).exp() * strike * norm_cdf(u_minus))
}

/// Market price of risk for the noise-carrying asset: (mu - r) divided by
/// the total volatility sigma + epsilon.
pub fn market_price_of_risk(mu: f64, rate_daily: f64, sigma: f64, epsilon: f64) -> Result<f64> {
    let total = sigma + epsilon;
    if !(total > 0.0) {
        return Err(Error::Domain(format!(
            "total volatility sigma + epsilon must be positive, got {total}"
        )));
    }
    Ok((mu - rate_daily) / total)
}

/// Bundled inputs for the closed-form call, convenient for serialization
/// and for the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePricingInputs {
    pub spot: f64,
    pub strike: f64,
    pub tau_days: f64,
    pub rate_daily: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl NoisePricingInputs {
    pub fn price(&self) -> Result<f64> {
        bsm_noise_call(
            self.spot,
            self.strike,
            self.tau_days,
            self.rate_daily,
            self.sigma,
            self.epsilon,
        )
    }
}
