//! Drift-preserving recombining binomial lattice.
//!
//! The step returns are built from the physical drift mu, volatility
//! sigma, and up-move probability p (all per trading day):
//!
//! ```text
//! u = mu dt + sqrt((1 - p) / p) sigma sqrt(dt)
//! d = mu dt - sqrt(p / (1 - p)) sigma sqrt(dt)
//! ```
//!
//! so that one step matches the first two moments of the observed return:
//! p u + (1 - p) d = mu dt and the step variance is sigma^2 dt. Pricing
//! uses the risk-adjusted up-probability
//!
//! ```text
//! q = p - theta sqrt(p (1 - p) dt),    theta = (mu - r) / sigma
//! ```
//!
//! which exists in (0, 1) exactly when the lattice admits no arbitrage,
//! d < r dt < u strictly. Under q the one-step expected return is r dt for
//! any mu, so the discounted lattice spot is a martingale. At finite step
//! counts the price genuinely depends on mu and p; the dependence fades as
//! the step count grows and the price approaches the closed-form value
//! with volatility sigma.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One-step lattice geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Up-move simple return per step.
    pub up: f64,
    /// Down-move simple return per step.
    pub down: f64,
    /// Physical probability of the up move.
    pub p_up: f64,
    /// Step length in trading days.
    pub dt: f64,
}

/// Build the step returns for drift mu, volatility sigma, up-probability
/// p_up, and step length dt (days). Requires sigma > 0, 0 < p_up < 1,
/// dt > 0.
pub fn tree_params(mu: f64, sigma: f64, p_up: f64, dt: f64) -> Result<TreeParams> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(p_up > 0.0 && p_up < 1.0) {
        return Err(Error::Domain(format!(
            "p_up must lie strictly inside (0, 1), got {p_up}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    let vol_step = sigma * dt.sqrt();
    Ok(TreeParams {
        up: mu * dt + ((1.0 - p_up) / p_up).sqrt() * vol_step,
        down: mu * dt - (p_up / (1.0 - p_up)).sqrt() * vol_step,
        p_up,
        dt,
    })
}

/// Risk-adjusted up-probability for the lattice. Enforces the strict
/// no-arbitrage condition d < r dt < u; when it holds the returned q lies
/// strictly inside (0, 1).
pub fn risk_neutral_prob(params: &TreeParams, mu: f64, sigma: f64, rate_daily: f64) -> Result<f64> {
    let r_step = rate_daily * params.dt;
    if !(params.down < r_step && r_step < params.up) {
        return Err(Error::Domain(format!(
            "no-arbitrage violation: need d < r dt < u, got d = {}, r dt = {}, u = {}",
            params.down, r_step, params.up
        )));
    }
    let theta = (mu - rate_daily) / sigma;
    let q = params.p_up - theta * (params.p_up * (1.0 - params.p_up) * params.dt).sqrt();
    debug_assert!(q > 0.0 && q < 1.0);
    Ok(q)
}

/// European call price by backward induction on the recombining lattice.
///
/// `maturity_days` is split into `n_steps` equal steps. The lattice spot
/// after j up moves and k - j down moves is spot (1+u)^j (1+d)^(k-j); a
/// single length n+1 value buffer is updated in place, so memory stays
/// O(n) for any step count.
#[allow(clippy::too_many_arguments)]
pub fn price_european(
    spot: f64,
    strike: f64,
    mu: f64,
    sigma: f64,
    p_up: f64,
    rate_daily: f64,
    maturity_days: f64,
    n_steps: u32,
) -> Result<f64> {
    if !(spot > 0.0) {
        return Err(Error::Domain(format!("spot must be positive, got {spot}")));
    }
    if !(strike >= 0.0) {
        return Err(Error::Domain(format!(
            "strike must be non-negative, got {strike}"
        )));
    }
    if !(maturity_days > 0.0) {
        return Err(Error::Domain(format!(
            "maturity must be positive, got {maturity_days}"
        )));
    }
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    let dt = maturity_days / n_steps as f64;
    let params = tree_params(mu, sigma, p_up, dt)?;
    let q = risk_neutral_prob(&params, mu, sigma, rate_daily)?;

    let grow_up = 1.0 + params.up;
    let grow_down = 1.0 + params.down;
    if grow_down <= 0.0 {
        return Err(Error::Domain(format!(
            "down step return {} pushes lattice prices non-positive; use more steps",
            params.down
        )));
    }
    let discount = 1.0 / (1.0 + rate_daily * dt);
    if !(discount > 0.0 && discount.is_finite()) {
        return Err(Error::Domain(format!(
            "per-step discounting broke down for rate {rate_daily} and dt {dt}"
        )));
    }

    let n = n_steps as usize;
    // Terminal payoffs, node j in 0..=n holding j up moves.
    let ratio = grow_up / grow_down;
    let mut node_spot = spot * grow_down.powi(n_steps as i32);
    let mut values = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        values.push((node_spot - strike).max(0.0));
        node_spot *= ratio;
    }
    // Backward induction in the single buffer.
    for step in (1..=n).rev() {
        for j in 0..step {
            values[j] = discount * (q * values[j + 1] + (1.0 - q) * values[j]);
        }
    }
    Ok(values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::bsm_noise_call;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn symmetric_step_returns() {
        // mu = 0, sigma = 0.2, p = 0.5, dt = 1: u and d are symmetric.
        let p = tree_params(0.0, 0.2, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(p.up, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.down, -0.2, epsilon = 1e-15);
    }

    #[test]
    fn step_moments_match_drift_and_variance() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..300 {
            let mu = rng.gen_range(-0.01..0.01);
            let sigma = rng.gen_range(1e-3..0.1);
            let p = rng.gen_range(0.05..0.95);
            let dt = rng.gen_range(0.1..10.0);
            let tp = tree_params(mu, sigma, p, dt).unwrap();
            let mean = p * tp.up + (1.0 - p) * tp.down;
            let var = p * (tp.up - mean).powi(2) + (1.0 - p) * (tp.down - mean).powi(2);
            assert_abs_diff_eq!(mean, mu * dt, epsilon = 1e-12);
            assert_abs_diff_eq!(var, sigma * sigma * dt, epsilon = 1e-12 * var.max(1.0));
        }
    }

    #[test]
    fn risk_adjustment_shifts_the_up_probability() {
        // theta = (mu - r) / sigma = 0.1 with p = 0.5 and dt = 1 gives
        // q = 0.5 - 0.1 * 0.5 = 0.45.
        let tp = tree_params(0.02, 0.2, 0.5, 1.0).unwrap();
        let q = risk_neutral_prob(&tp, 0.02, 0.2, 0.0).unwrap();
        assert_abs_diff_eq!(q, 0.45, epsilon = 1e-15);
    }

    #[test]
    fn one_step_at_the_money_price() {
        // S = K = 100, u = 0.2, d = -0.2, q = 0.5, r = 0: C = 0.5 * 20.
        let c = price_european(100.0, 100.0, 0.0, 0.2, 0.5, 0.0, 1.0, 1).unwrap();
        assert_abs_diff_eq!(c, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_strike_recovers_spot_for_any_drift() {
        // With K = 0 the payoff is the spot itself; discounting must undo
        // the q-measure growth exactly, whatever mu is.
        for &mu in &[0.0001, 0.0004, -0.0002] {
            let c = price_european(100.0, 0.0, mu, 0.0112, 0.524, 0.0001, 252.0, 252).unwrap();
            assert_abs_diff_eq!(c, 100.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn no_arbitrage_violation_is_rejected() {
        // Large drift with tiny volatility pushes d above r dt.
        let err = price_european(100.0, 100.0, 0.5, 0.01, 0.5, 0.0, 1.0, 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("no-arbitrage"), "unexpected error: {msg}");
    }

    #[test]
    fn q_stays_inside_unit_interval_when_no_arbitrage_holds() {
        let mut rng = StdRng::seed_from_u64(9);
        let mut checked = 0;
        while checked < 2000 {
            let mu = rng.gen_range(-0.05..0.05);
            let sigma = rng.gen_range(1e-4..0.1);
            let p = rng.gen_range(0.01..0.99);
            let dt = rng.gen_range(0.01..10.0);
            let r = rng.gen_range(-0.001..0.001);
            let tp = tree_params(mu, sigma, p, dt).unwrap();
            let r_step = r * dt;
            if tp.down < r_step && r_step < tp.up {
                let q = risk_neutral_prob(&tp, mu, sigma, r).unwrap();
                assert!(q > 0.0 && q < 1.0, "q = {q}");
                checked += 1;
            }
        }
    }

    #[test]
    fn price_depends_on_drift_and_up_probability_at_small_step_counts() {
        // A coarse lattice keeps the physical parameters visible in the
        // price; the limit washes them out but n = 5 must not.
        let r = 0.0001;
        let base = price_european(100.0, 100.0, 0.002, 0.0112, 0.5, r, 30.0, 5).unwrap();
        let mu_bumped = price_european(100.0, 100.0, 0.003, 0.0112, 0.5, r, 30.0, 5).unwrap();
        let p_bumped = price_european(100.0, 100.0, 0.002, 0.0112, 0.55, r, 30.0, 5).unwrap();
        assert!((mu_bumped - base).abs() > 1e-6, "mu sensitivity vanished");
        assert!((p_bumped - base).abs() > 1e-6, "p sensitivity vanished");
    }

    #[test]
    fn converges_to_closed_form_at_the_money() {
        let r = 0.04 / 252.0;
        let sigma = 0.0112;
        let reference = bsm_noise_call(100.0, 100.0, 252.0, r, sigma, 0.0).unwrap();
        let lattice = price_european(100.0, 100.0, r, sigma, 0.5, r, 252.0, 2000).unwrap();
        let rel = (lattice - reference).abs() / reference;
        assert!(rel <= 1e-3, "relative gap {rel}");
        // The gap shrinks visibly with more steps.
        let coarse = price_european(100.0, 100.0, r, sigma, 0.5, r, 252.0, 50).unwrap();
        assert!((lattice - reference).abs() < (coarse - reference).abs());
    }

    #[test]
    fn deterministic_across_calls() {
        let a = price_european(100.0, 95.0, 0.0003, 0.0112, 0.524, 0.0001, 63.0, 777).unwrap();
        let b = price_european(100.0, 95.0, 0.0003, 0.0112, 0.524, 0.0001, 63.0, 777).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(tree_params(0.0, 0.0, 0.5, 1.0).is_err());
        assert!(tree_params(0.0, 0.2, 0.0, 1.0).is_err());
        assert!(tree_params(0.0, 0.2, 1.0, 1.0).is_err());
        assert!(tree_params(0.0, 0.2, 0.5, 0.0).is_err());
        assert!(price_european(100.0, -1.0, 0.0, 0.2, 0.5, 0.0, 1.0, 1).is_err());
        assert!(price_european(100.0, 100.0, 0.0, 0.2, 0.5, 0.0, 0.0, 1).is_err());
        assert!(price_european(100.0, 100.0, 0.0, 0.2, 0.5, 0.0, 1.0, 0).is_err());
        // Down factor at or below -1 would make lattice prices non-positive.
        assert!(price_european(100.0, 100.0, 0.0, 1.5, 0.5, 0.0, 1.0, 1).is_err());
    }

    /// Memory check: a million-step lattice runs in O(n) space. Heavy on
    /// time (quadratic work), so excluded from the default run:
    /// cargo test -p mmnoise --release -- --ignored price_million_steps
    #[test]
    #[ignore]
    fn price_million_steps_within_memory_budget() {
        let r = 0.04 / 252.0;
        let c = price_european(100.0, 100.0, r, 0.0112, 0.5, r, 252.0, 1_000_000).unwrap();
        let reference = bsm_noise_call(100.0, 100.0, 252.0, r, 0.0112, 0.0).unwrap();
        assert!((c - reference).abs() / reference <= 1e-4);
    }
}
