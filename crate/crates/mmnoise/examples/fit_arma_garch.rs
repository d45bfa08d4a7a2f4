//! Conditional-volatility fit round trip: simulate returns from known
//! ARMA-GARCH coefficients with Student-t innovations, fit, and compare.

use mmnoise::marketdata::ReturnSeries;
use mmnoise::volmodels::{fit_arma_garch, simulate_arma_garch, GarchParams};

fn main() -> mmnoise::Result<()> {
    let truth = GarchParams {
        phi: [0.0002, 0.05, 0.0, 0.0],
        theta: [0.0; 3],
        a0: 2e-6,
        a1: 0.08,
        beta1: 0.90,
        nu: 8.0,
    };
    let returns = simulate_arma_garch(&truth, 8000, 1000, 7)?;
    let dates = (0..returns.len() as i64)
        .map(|k| chrono::NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + chrono::Days::new(k as u64))
        .collect();
    let series = ReturnSeries { dates, returns };

    let fit = fit_arma_garch(&series)?;
    println!(
        "{:<8} {:>12} {:>12} {:>10}",
        "coef", "estimate", "std_err", "p_value"
    );
    for c in &fit.coefficients {
        println!(
            "{:<8} {:>12.5} {:>12.5} {:>10.4}",
            c.name, c.estimate, c.std_err, c.p_value
        );
    }
    println!("\ntruth:     a1 {} beta1 {} nu {}", truth.a1, truth.beta1, truth.nu);
    println!(
        "estimate:  a1 {:.4} beta1 {:.4} nu {:.2}",
        fit.params.a1, fit.params.beta1, fit.params.nu
    );
    println!("loglik {:.2}, sigma forecast {:.5} per sqrt-day", fit.loglik, fit.sigma_forecast);
    Ok(())
}
