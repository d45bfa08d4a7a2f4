//! The binomial lattice keeps the real-world drift in its node geometry
//! and prices under an adjusted branch weight; as steps grow the price
//! converges to the closed form at the same volatility.

use mmnoise::tree::price_european;
use mmnoise::{bsm_noise_call, daily_rate};

fn main() -> mmnoise::Result<()> {
    let (spot, strike, tau) = (100.0, 100.0, 21.0);
    let rate = daily_rate(0.04);
    let (mu, sigma, p_up) = (0.002, 0.0112, 0.524);

    let reference = bsm_noise_call(spot, strike, tau, rate, sigma, 0.0)?;
    println!("closed form: {reference}");
    println!("{:>7} {:>12} {:>11}", "steps", "lattice", "abs diff");
    for n in [10, 50, 250, 1250, 6250] {
        let c = price_european(spot, strike, mu, sigma, p_up, rate, tau, n)?;
        println!("{n:>7} {c:>12.8} {:>11.2e}", (c - reference).abs());
    }

    // The price is insensitive to the drift: the adjustment absorbs it.
    let other = price_european(spot, strike, -0.003, sigma, p_up, rate, tau, 6250)?;
    let base = price_european(spot, strike, mu, sigma, p_up, rate, tau, 6250)?;
    println!("\ndrift -0.003 vs {mu}: |diff| = {:.2e}", (other - base).abs());
    Ok(())
}
