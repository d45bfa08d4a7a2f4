//! Aggregate calibration: implied drifts and volatilities from a chain
//! reduce to two noise parameters by medians, then to the efficient-price
//! parameters through exact identities.

use mmnoise::calibration::{assemble_params, calibrate_noise_params, implied_mu_sigma_surface};
use mmnoise::marketdata::{OptionChain, OptionQuote};
use mmnoise::tree::price_european;
use mmnoise::volmodels::HistoricalMoments;

fn main() -> mmnoise::Result<()> {
    // Observable moments of a return window.
    let moments = HistoricalMoments {
        mu_o: 0.0009,
        sigma_o: 0.0112,
        p_up: 0.53,
    };
    let (spot, rate) = (100.0, 0.04 / 252.0);
    let n_steps = 120;

    // A chain priced by the lattice exactly at the observable moments.
    let mut quotes = Vec::new();
    for expiry_days in [10u32, 30] {
        for strike in [98.0, 100.0, 102.0] {
            let c = price_european(
                spot,
                strike,
                moments.mu_o,
                moments.sigma_o,
                moments.p_up,
                rate,
                expiry_days as f64,
                n_steps,
            )?;
            quotes.push(OptionQuote {
                expiry_days,
                strike,
                last_price: c,
                bid: c * 0.99,
                ask: c * 1.01,
                volume: 25,
                open_interest: 400,
                moneyness: strike / spot,
            });
        }
    }
    let chain = OptionChain {
        spot,
        rate_daily: rate,
        quote_date: chrono::NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
        quotes,
    };

    let surface = implied_mu_sigma_surface(&chain, moments.p_up, n_steps, (moments.mu_o, moments.sigma_o))?;
    let noise = calibrate_noise_params(&surface.points, &moments)?;
    let params = assemble_params(&moments, &noise);

    // The market was generated at the observable moments, so the drift
    // ratio comes back at one and the volatility gap at zero.
    println!("w_er    {:.12}   (noise-free market: 1)", params.w_er);
    println!("sigma_n {:.3e}   (noise-free market: 0)", params.sigma_n);
    println!("mu      {:.12}", params.mu);
    println!("sigma   {:.12}", params.sigma);
    println!("mu_n    {:.3e}", params.mu_n);
    Ok(())
}
