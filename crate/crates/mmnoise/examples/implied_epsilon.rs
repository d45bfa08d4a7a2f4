//! Implied noise extraction: quotes priced with a known noise scale give
//! it back as the root of the closed form in the total volatility.

use mmnoise::calibration::{implied_eps_surface, ImpliedKind};
use mmnoise::marketdata::{OptionChain, OptionQuote};
use mmnoise::{bsm_noise_call, daily_rate};

fn main() -> mmnoise::Result<()> {
    let (spot, sigma, eps_true) = (100.0, 0.0112, 0.004);
    let rate = daily_rate(0.04);

    let mut quotes = Vec::new();
    for expiry_days in [7u32, 21, 42] {
        for strike in [97.0, 100.0, 103.0] {
            let c = bsm_noise_call(spot, strike, expiry_days as f64, rate, sigma, eps_true)?;
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

    let surface = implied_eps_surface(&chain, sigma)?;
    println!("{:>7} {:>8} {:>22} {:>10}", "expiry", "strike", "implied eps", "error");
    for p in &surface.points {
        let eps = p.value_eps.unwrap();
        println!(
            "{:>7} {:>8} {:>22.16} {:>10.2e}",
            p.expiry_days,
            p.strike,
            eps,
            (eps - eps_true).abs()
        );
    }
    let n_conv = surface.converged_values(ImpliedKind::Epsilon).len();
    println!("\n{} of {} quotes converged", n_conv, surface.points.len());
    Ok(())
}
