//! Monte Carlo simulation of the noisy price process, and of the signed
//! Brownian integral H that drives its noise term.
//!
//! Real-world paths discretize the observed-price dynamics directly,
//! keeping the path-dependent sign factor on the noise term:
//!
//! ```text
//! S_{k+1} = S_k (1 + mu dt + sigma dB_k + epsilon sgn(B_k) dB_k)
//! H_{k+1} = H_k + sgn(B_k) dB_k,   sgn(0) = 0,  B_0 = 0, H_0 = 0
//! ```
//!
//! Under the pricing measure the sign factor folds into the sign of the
//! noise scale (sgn(B) dB has the law of plain Brownian increments), so
//! a risk-neutral path is statistically a single diffusion at the total
//! volatility sigma + epsilon with drift equal to the risk-free rate:
//!
//! ```text
//! S_{k+1} = S_k (1 + r dt + (sigma + epsilon) dB_k)
//! ```
//!
//! That is the form valuation uses; it converges to the closed-form
//! price as steps and paths grow, which is exactly the oracle role this
//! module plays for the analytic pricer.
//!
//! The arithmetic Euler scheme cannot guarantee positivity: any step
//! landing at or below a floor of 1e-12 S0 is raised to the floor and
//! the path flagged, so estimates stay honest about clamping. Each path
//! derives its generator stream from (seed, path index), making parallel
//! and serial runs agree bit for bit.

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which drift and noise structure a simulated path carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMode {
    /// Observed dynamics: drift `mu`, explicit sgn(B) factor on the noise.
    RealWorld,
    /// Valuation dynamics: drift `mu` is interpreted as the risk-free
    /// rate and the noise folds into a total diffusion sigma + epsilon.
    RiskNeutral,
}

/// Everything needed to generate a path deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub spot0: f64,
    /// Per-day drift; the risk-free rate in risk-neutral mode.
    pub mu: f64,
    /// Per-sqrt-day volatility of the efficient component.
    pub sigma: f64,
    /// Per-sqrt-day noise scale; may be negative.
    pub epsilon: f64,
    pub horizon_days: f64,
    pub steps: u32,
    pub seed: u64,
    pub mode: PathMode,
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot0 > 0.0 && self.spot0.is_finite()) {
            return Err(Error::Domain(format!(
                "initial spot must be positive, got {}",
                self.spot0
            )));
        }
        if !(self.horizon_days > 0.0 && self.horizon_days.is_finite()) {
            return Err(Error::Domain(format!(
                "horizon must be positive, got {}",
                self.horizon_days
            )));
        }
        if self.steps == 0 {
            return Err(Error::Domain("step count must be at least 1".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Domain(format!(
                "sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        if !(self.mu.is_finite() && self.epsilon.is_finite()) {
            return Err(Error::Domain(
                "drift and noise scale must be finite".into(),
            ));
        }
        Ok(())
    }

    fn dt(&self) -> f64 {
        self.horizon_days / self.steps as f64
    }

    fn floor(&self) -> f64 {
        1e-12 * self.spot0
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One simulated path: spot levels at every step boundary (length
/// steps + 1) and whether the positivity floor was ever applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    pub spots: Vec<f64>,
    pub floored: bool,
}

/// Simulate one path on the generator stream `stream`.
pub fn simulate_path_stream(config: &PathConfig, stream: u64) -> Result<SimulatedPath> {
    config.validate()?;
    let dt = config.dt();
    let sqrt_dt = dt.sqrt();
    let floor = config.floor();
    let mut rng = stream_rng(config.seed, stream);

    let mut spots = Vec::with_capacity(config.steps as usize + 1);
    let mut s = config.spot0;
    spots.push(s);
    let mut b = 0.0;
    let mut floored = false;
    for _ in 0..config.steps {
        let z: f64 = rng.sample(StandardNormal);
        let db = sqrt_dt * z;
        let growth = match config.mode {
            PathMode::RealWorld => {
                1.0 + config.mu * dt + config.sigma * db + config.epsilon * sgn(b) * db
            }
            PathMode::RiskNeutral => 1.0 + config.mu * dt + (config.sigma + config.epsilon) * db,
        };
        s *= growth;
        if s <= floor {
            s = floor;
            floored = true;
        }
        b += db;
        spots.push(s);
    }
    Ok(SimulatedPath { spots, floored })
}

/// Simulate one path on the default stream.
pub fn simulate_path(config: &PathConfig) -> Result<SimulatedPath> {
    simulate_path_stream(config, 0)
}

/// Terminal values of many independent paths (path index = stream index),
/// computed in parallel with a deterministic result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalSample {
    pub values: Vec<f64>,
    pub floored_paths: u64,
}

pub fn simulate_terminals(config: &PathConfig, n_paths: u64) -> Result<TerminalSample> {
    config.validate()?;
    if n_paths == 0 {
        return Err(Error::Domain("path count must be at least 1".into()));
    }
    let dt = config.dt();
    let sqrt_dt = dt.sqrt();
    let floor = config.floor();
    let results: Vec<(f64, bool)> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = stream_rng(config.seed, path);
            let mut s = config.spot0;
            let mut b = 0.0;
            let mut floored = false;
            for _ in 0..config.steps {
                let z: f64 = rng.sample(StandardNormal);
                let db = sqrt_dt * z;
                let growth = match config.mode {
                    PathMode::RealWorld => {
                        1.0 + config.mu * dt
                            + config.sigma * db
                            + config.epsilon * sgn(b) * db
                    }
                    PathMode::RiskNeutral => {
                        1.0 + config.mu * dt + (config.sigma + config.epsilon) * db
                    }
                };
                s *= growth;
                if s <= floor {
                    s = floor;
                    floored = true;
                }
                b += db;
            }
            (s, floored)
        })
        .collect();
    Ok(TerminalSample {
        values: results.iter().map(|r| r.0).collect(),
        floored_paths: results.iter().filter(|r| r.1).count() as u64,
    })
}

/// The signed Brownian integral along one path: H_0 = 0 and
/// H_{k+1} = H_k + sgn(B_k) dB_k. Returns steps + 1 values.
pub fn simulate_h(horizon_days: f64, steps: u32, seed: u64) -> Result<Vec<f64>> {
    simulate_h_stream(horizon_days, steps, seed, 0)
}

pub fn simulate_h_stream(
    horizon_days: f64,
    steps: u32,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    if !(horizon_days > 0.0 && horizon_days.is_finite()) {
        return Err(Error::Domain(format!(
            "horizon must be positive, got {horizon_days}"
        )));
    }
    if steps == 0 {
        return Err(Error::Domain("step count must be at least 1".into()));
    }
    let dt = horizon_days / steps as f64;
    let sqrt_dt = dt.sqrt();
    let mut rng = stream_rng(seed, stream);
    let mut path = Vec::with_capacity(steps as usize + 1);
    let mut h = 0.0;
    let mut b = 0.0;
    path.push(h);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        let db = sqrt_dt * z;
        h += sgn(b) * db;
        b += db;
        path.push(h);
    }
    Ok(path)
}

/// Terminal H values over many paths, parallel and deterministic.
pub fn simulate_h_terminals(
    horizon_days: f64,
    steps: u32,
    seed: u64,
    n_paths: u64,
) -> Result<Vec<f64>> {
    if !(horizon_days > 0.0 && horizon_days.is_finite()) {
        return Err(Error::Domain(format!(
            "horizon must be positive, got {horizon_days}"
        )));
    }
    if steps == 0 {
        return Err(Error::Domain("step count must be at least 1".into()));
    }
    let dt = horizon_days / steps as f64;
    let sqrt_dt = dt.sqrt();
    Ok((0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = stream_rng(seed, path);
            let mut h = 0.0;
            let mut b = 0.0;
            for _ in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                let db = sqrt_dt * z;
                h += sgn(b) * db;
                b += db;
            }
            h
        })
        .collect())
}

/// A Monte Carlo call-price estimate with its statistical error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_err: f64,
    /// Paths actually simulated (2 per antithetic pair).
    pub n_paths: u64,
    pub floored_paths: u64,
}

/// Price a European call by antithetic-pair Monte Carlo on risk-neutral
/// paths. The drift and discounting both use `rate_daily`; `config.mu`
/// is ignored so the estimate cannot drift off its own measure. Pairs are
/// independent work items, each on its own generator stream, and the
/// final reduction is a fixed-order pairwise sum, so the result does not
/// depend on thread scheduling.
pub fn mc_call_price(
    config: &PathConfig,
    strike: f64,
    rate_daily: f64,
    n_paths: u64,
) -> Result<McEstimate> {
    config.validate()?;
    if config.mode != PathMode::RiskNeutral {
        return Err(Error::Domain(
            "valuation requires risk-neutral paths".into(),
        ));
    }
    if !(strike >= 0.0 && strike.is_finite()) {
        return Err(Error::Domain(format!(
            "strike must be non-negative, got {strike}"
        )));
    }
    if !rate_daily.is_finite() {
        return Err(Error::Domain(format!("rate must be finite, got {rate_daily}")));
    }
    let total_vol = config.sigma + config.epsilon;
    if !(total_vol > 0.0) {
        return Err(Error::Domain(format!(
            "total volatility sigma + epsilon must be positive, got {total_vol}"
        )));
    }
    if n_paths < 4 {
        return Err(Error::Domain(
            "need at least 4 paths (2 antithetic pairs)".into(),
        ));
    }

    let pairs = n_paths / 2;
    let dt = config.dt();
    let sqrt_dt = dt.sqrt();
    let grow = 1.0 + rate_daily * dt;
    let floor = config.floor();

    let results: Vec<(f64, u64)> = (0..pairs)
        .into_par_iter()
        .map(|pair| {
            let mut rng = stream_rng(config.seed, pair);
            let mut s_up = config.spot0;
            let mut s_dn = config.spot0;
            let mut floored = 0u64;
            let mut hit_up = false;
            let mut hit_dn = false;
            for _ in 0..config.steps {
                let z: f64 = rng.sample(StandardNormal);
                let shock = total_vol * sqrt_dt * z;
                s_up *= grow + shock;
                if s_up <= floor {
                    s_up = floor;
                    hit_up = true;
                }
                s_dn *= grow - shock;
                if s_dn <= floor {
                    s_dn = floor;
                    hit_dn = true;
                }
            }
            floored += hit_up as u64 + hit_dn as u64;
            let pair_mean = 0.5 * ((s_up - strike).max(0.0) + (s_dn - strike).max(0.0));
            (pair_mean, floored)
        })
        .collect();

    let pair_means: Vec<f64> = results.iter().map(|r| r.0).collect();
    let floored_paths: u64 = results.iter().map(|r| r.1).sum();
    let mean = pairwise_sum(&pair_means) / pairs as f64;
    let dev_sq: Vec<f64> = pair_means.iter().map(|m| (m - mean).powi(2)).collect();
    let var_of_mean = pairwise_sum(&dev_sq) / (pairs as f64 - 1.0) / pairs as f64;
    let discount = (-rate_daily * config.horizon_days).exp();
    Ok(McEstimate {
        price: discount * mean,
        std_err: discount * var_of_mean.sqrt(),
        n_paths: pairs * 2,
        floored_paths,
    })
}
