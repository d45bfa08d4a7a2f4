//! End-to-end run on a self-consistent synthetic market: returns fix the
//! observable moments, the chain is priced by the lattice exactly at
//! those moments, and the pipeline recovers a noise-free calibration.

use mmnoise::marketdata::{ReturnSeries, ReturnsKind};
use mmnoise::pipeline::{run_pipeline, PipelineConfig, VolMode};
use mmnoise::tree::price_european;
use mmnoise::volmodels::historical_moments;
use std::fmt::Write as _;

fn main() -> mmnoise::Result<()> {
    let dir = std::env::temp_dir().join("mmnoise_pipeline_example");
    std::fs::create_dir_all(&dir).map_err(|e| mmnoise::Error::io(&dir, e))?;
    let write = |name: &str, text: &str| -> mmnoise::Result<std::path::PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| mmnoise::Error::io(&path, e))?;
        Ok(path)
    };

    // A deterministic return window and its moments.
    let mut returns_csv = String::from("date,return\n");
    let start = chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    for i in 0..260u64 {
        let r = 0.0012 + 0.009 * ((i as f64) * 0.83).sin();
        let date = start + chrono::Days::new(i);
        writeln!(returns_csv, "{date},{r}").unwrap();
    }
    let returns_path = write("returns.csv", &returns_csv)?;
    let series = ReturnSeries::load(&returns_path, ReturnsKind::Returns)?;
    let moments = historical_moments(&series, 1.0)?;

    // A chain the lattice prices exactly at those moments.
    let (spot, annual_rate, n_steps) = (100.0, 0.04, 60);
    let rate = mmnoise::daily_rate(annual_rate);
    let mut chain_csv =
        String::from("expiry_days,strike,last_price,bid,ask,volume,open_interest\n");
    for expiry in [7u32, 42] {
        for strike in [98.0, 99.0, 100.0, 101.0, 102.0] {
            let c = price_european(
                spot,
                strike,
                moments.mu_o,
                moments.sigma_o,
                moments.p_up,
                rate,
                expiry as f64,
                n_steps,
            )?;
            writeln!(chain_csv, "{expiry},{strike},{c},{},{},50,500", c * 0.99, c * 1.01).unwrap();
        }
    }
    let chain_path = write("chain.csv", &chain_csv)?;

    let config = PipelineConfig {
        chain_path,
        returns_path,
        spot,
        annual_rate,
        quote_date: chrono::NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
        horizon_boundary_days: 21,
        vol_mode: VolMode::Historical,
        returns_kind: ReturnsKind::Returns,
        n_steps: Some(n_steps),
        bandwidth_t: None,
        bandwidth_m: None,
        winsorize_quantile: None,
        grid_points: Some(6),
        output_dir: dir.join("out"),
        seed: 1,
        workers: Some(2),
    };
    let report = run_pipeline(&config)?;

    println!("quotes: {} raw, {} clean", report.n_quotes_raw, report.n_quotes_clean);
    println!(
        "moments: mu_o {:.6} sigma_o {:.6} p_up {:.3}",
        report.moments.mu_o, report.moments.sigma_o, report.moments.p_up
    );
    for (name, split) in [("short", &report.short), ("long", &report.long)] {
        let noise = split.noise.as_ref().expect("calibration present");
        println!(
            "{name}: {} quotes, w_er {:.12}, sigma_n {:+.3e}",
            split.n_quotes, noise.w_er, noise.sigma_n
        );
    }
    println!("artifacts: {}", report.artifacts.len());
    println!("report: {}", config.output_dir.join("report.json").display());
    Ok(())
}
