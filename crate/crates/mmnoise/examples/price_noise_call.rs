//! Closed-form call prices under multiplicative noise: the premium
//! depends on the efficient volatility and the noise scale only through
//! their sum, so a noisy market prices like a clean one at the total.

use mmnoise::{bsm_noise_call, daily_rate};

fn main() -> mmnoise::Result<()> {
    let spot = 100.0;
    let rate = daily_rate(0.04);
    let sigma = 0.0112;

    println!("one-month ATM call, spot {spot}, sigma {sigma} per sqrt-day");
    println!("{:>9} {:>12}", "epsilon", "price");
    for eps in [-0.004, 0.0, 0.004, 0.008] {
        let c = bsm_noise_call(spot, 100.0, 21.0, rate, sigma, eps)?;
        println!("{eps:>9} {c:>12.6}");
    }

    // Splitting the same total differently cannot change the price.
    let total = 0.0152;
    let a = bsm_noise_call(spot, 100.0, 21.0, rate, total, 0.0)?;
    let b = bsm_noise_call(spot, 100.0, 21.0, rate, 0.0112, total - 0.0112)?;
    println!("\nsame total {total}: {a} == {b}: {}", a == b);
    Ok(())
}
