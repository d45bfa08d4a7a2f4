//! End-to-end orchestration: one configuration in, a directory of
//! calibration artifacts and a JSON run report out.
//!
//! Stage order: ingest, clean, split by horizon, historical moments
//! (plus the conditional-volatility fit when selected), implied noise
//! scale per quote, implied (mu, sigma) per quote, aggregate noise
//! parameters, efficient-price parameters, winsorized and smoothed
//! grids. Any stage failure aborts with the stage name attached and
//! leaves a `pipeline.partial` marker in the output directory; the
//! marker is removed only on success.
//!
//! Reports are deterministic: identical config and seed produce
//! byte-identical JSON except for the `timings_ms` map.

use crate::calibration::{self, EfficientParams, ImpliedKind, NoiseParams};
use crate::error::{Error, Result};
use crate::marketdata::{OptionChain, ReturnSeries, ReturnsKind};
use crate::surfaces::{self, SurfacePoint};
use crate::volmodels::{self, HistoricalMoments};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

/// Which reference volatility the implied-noise extraction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolMode {
    /// Plain historical sigma from the return window.
    Historical,
    /// Conditional sigma forecast from the ARMA-GARCH fit.
    ArmaGarch,
}

fn default_returns_kind() -> ReturnsKind {
    ReturnsKind::Returns
}

/// Full configuration for one run. Optional fields fall back to
/// documented defaults so a minimal config stays short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub chain_path: PathBuf,
    pub returns_path: PathBuf,
    /// Spot price on the quote date.
    pub spot: f64,
    /// Annualized rate; converted to per-day internally.
    pub annual_rate: f64,
    pub quote_date: chrono::NaiveDate,
    /// Quotes with expiry at or below this go to the short-horizon set.
    pub horizon_boundary_days: u32,
    pub vol_mode: VolMode,
    #[serde(default = "default_returns_kind")]
    pub returns_kind: ReturnsKind,
    /// Lattice steps for per-quote (mu, sigma) extraction. Default 500.
    #[serde(default)]
    pub n_steps: Option<u32>,
    /// Kernel bandwidths; default is a tenth of each axis range.
    #[serde(default)]
    pub bandwidth_t: Option<f64>,
    #[serde(default)]
    pub bandwidth_m: Option<f64>,
    /// Upper-tail clip level before smoothing. Default 0.99.
    #[serde(default)]
    pub winsorize_quantile: Option<f64>,
    /// Grid resolution per axis. Default 25.
    #[serde(default)]
    pub grid_points: Option<usize>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for per-quote solves. Default: all logical cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl PipelineConfig {
    pub fn n_steps(&self) -> u32 {
        self.n_steps.unwrap_or(500)
    }

    pub fn winsorize_quantile(&self) -> f64 {
        self.winsorize_quantile.unwrap_or(0.99)
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points.unwrap_or(25)
    }

    fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0) {
            return Err(Error::Config(format!(
                "spot must be positive, got {}",
                self.spot
            )));
        }
        if !self.annual_rate.is_finite() {
            return Err(Error::Config("annual_rate must be finite".into()));
        }
        if let Some(n) = self.n_steps {
            if n == 0 {
                return Err(Error::Config("n_steps must be at least 1".into()));
            }
        }
        let q = self.winsorize_quantile();
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Config(format!(
                "winsorize_quantile must lie strictly inside (0, 1), got {q}"
            )));
        }
        if self.grid_points() == 0 {
            return Err(Error::Config("grid_points must be at least 1".into()));
        }
        for (name, bw) in [("bandwidth_t", self.bandwidth_t), ("bandwidth_m", self.bandwidth_m)] {
            if let Some(b) = bw {
                if !(b > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {b}")));
                }
            }
        }
        Ok(())
    }
}

/// Condensed view of a conditional-volatility fit for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSummary {
    pub converged: bool,
    pub loglik: f64,
    pub sigma_forecast: f64,
    pub a1: f64,
    pub beta1: f64,
    pub nu: f64,
    pub iterations: usize,
}

/// Calibration results for one horizon split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub n_quotes: usize,
    pub eps_converged: usize,
    pub ms_converged: usize,
    /// Quotes whose implied mu is locally unidentified (flat direction).
    pub flat_mu_count: usize,
    pub median_eps: Option<f64>,
    pub noise: Option<NoiseParams>,
    pub efficient: Option<EfficientParams>,
}

/// Everything a run produced. Every number here is computed by a module
/// operation; the report only collects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub n_quotes_raw: usize,
    pub n_quotes_clean: usize,
    pub moments: HistoricalMoments,
    /// Reference sigma the noise extraction used (per vol_mode).
    pub sigma_ref: f64,
    pub garch: Option<GarchSummary>,
    pub short: SplitReport,
    pub long: SplitReport,
    /// Files written under output_dir, relative names.
    pub artifacts: Vec<String>,
    pub timings_ms: BTreeMap<String, u64>,
}

pub const PARTIAL_MARKER: &str = "pipeline.partial";
pub const REPORT_FILE: &str = "report.json";

fn stage<T>(
    name: &'static str,
    timings: &mut BTreeMap<String, u64>,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| Error::Pipeline {
        stage: name,
        source: Box::new(e),
    })?;
    timings.insert(name.to_string(), start.elapsed().as_millis() as u64);
    Ok(out)
}

struct SplitOutcome {
    report: SplitReport,
    artifacts: Vec<String>,
}

fn process_split(
    label: &str,
    chain: &OptionChain,
    sigma_ref: f64,
    moments: &HistoricalMoments,
    config: &PipelineConfig,
) -> Result<SplitOutcome> {
    let mut artifacts = Vec::new();
    if chain.quotes.is_empty() {
        return Ok(SplitOutcome {
            report: SplitReport {
                n_quotes: 0,
                eps_converged: 0,
                ms_converged: 0,
                flat_mu_count: 0,
                median_eps: None,
                noise: None,
                efficient: None,
            },
            artifacts,
        });
    }

    let eps = calibration::implied_eps_surface(chain, sigma_ref)?;
    let ms = calibration::implied_mu_sigma_surface(
        chain,
        moments.p_up,
        config.n_steps(),
        (moments.mu_o, moments.sigma_o),
    )?;

    let out = &config.output_dir;
    for (surface, kind, name) in [
        (&eps, ImpliedKind::Epsilon, format!("implied_eps_{label}.csv")),
        (&ms, ImpliedKind::Mu, format!("implied_mu_{label}.csv")),
        (&ms, ImpliedKind::Sigma, format!("implied_sigma_{label}.csv")),
    ] {
        surface.write_csv(out.join(&name), kind)?;
        artifacts.push(name);
    }

    // Presentation grids: winsorize converged values, then smooth.
    for (surface, kind, name) in [
        (&eps, ImpliedKind::Epsilon, "eps"),
        (&ms, ImpliedKind::Mu, "mu"),
        (&ms, ImpliedKind::Sigma, "sigma"),
    ] {
        let converged: Vec<&calibration::ImpliedPoint> =
            surface.points.iter().filter(|p| p.converged).collect();
        let values: Vec<f64> = converged
            .iter()
            .filter_map(|p| match kind {
                ImpliedKind::Epsilon => p.value_eps,
                ImpliedKind::Mu => p.value_mu,
                ImpliedKind::Sigma => p.value_sigma,
            })
            .collect();
        if values.is_empty() {
            continue;
        }
        let clipped = surfaces::winsorize(&values, config.winsorize_quantile())?;
        let points: Vec<SurfacePoint> = converged
            .iter()
            .zip(&clipped)
            .map(|(p, &v)| SurfacePoint {
                t: p.expiry_days as f64,
                m: p.moneyness,
                value: v,
            })
            .collect();
        let (t_lo, t_hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.t), hi.max(p.t))
            });
        let (m_lo, m_hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.m), hi.max(p.m))
            });
        let grid = surfaces::smooth_surface(
            &points,
            &surfaces::linspace(t_lo, t_hi, config.grid_points()),
            &surfaces::linspace(m_lo, m_hi, config.grid_points()),
            config
                .bandwidth_t
                .unwrap_or_else(|| surfaces::default_bandwidth(t_hi - t_lo)),
            config
                .bandwidth_m
                .unwrap_or_else(|| surfaces::default_bandwidth(m_hi - m_lo)),
        )?;
        let file = format!("grid_{name}_{label}.csv");
        surfaces::export_grid(&grid, out.join(&file))?;
        artifacts.push(format!("grid_{name}_{label}.json"));
        artifacts.push(file);
    }

    let eps_values = eps.converged_values(ImpliedKind::Epsilon);
    let median_eps = crate::numerics::median_lower(&eps_values);
    let ms_converged = ms.points.iter().filter(|p| p.converged).count();
    let noise = if ms_converged > 0 {
        Some(calibration::calibrate_noise_params(&ms.points, moments)?)
    } else {
        None
    };
    let efficient = noise
        .as_ref()
        .map(|n| calibration::assemble_params(moments, n));

    artifacts.sort();
    Ok(SplitOutcome {
        report: SplitReport {
            n_quotes: chain.quotes.len(),
            eps_converged: eps_values.len(),
            ms_converged,
            flat_mu_count: ms.points.iter().filter(|p| p.flat_mu).count(),
            median_eps,
            noise,
            efficient,
        },
        artifacts,
    })
}

/// Run every stage and write all artifacts under `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate().map_err(|e| Error::Pipeline {
        stage: "config",
        source: Box::new(e),
    })?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::Pipeline {
            stage: "config",
            source: Box::new(Error::io(&config.output_dir, e)),
        })?;
    let marker = config.output_dir.join(PARTIAL_MARKER);
    std::fs::write(&marker, "run in progress\n").map_err(|e| Error::Pipeline {
        stage: "config",
        source: Box::new(Error::io(&marker, e)),
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Pipeline {
            stage: "config",
            source: Box::new(Error::Config(format!("cannot build worker pool: {e}"))),
        })?;

    let report = pool.install(|| run_stages(config))?;

    let json = render_report(&report);
    let report_path = config.output_dir.join(REPORT_FILE);
    std::fs::write(&report_path, json).map_err(|e| Error::Pipeline {
        stage: "report",
        source: Box::new(Error::io(&report_path, e)),
    })?;
    std::fs::remove_file(&marker).map_err(|e| Error::Pipeline {
        stage: "report",
        source: Box::new(Error::io(&marker, e)),
    })?;
    Ok(report)
}

/// The report's canonical JSON form (pretty, fixed field order).
pub fn render_report(report: &RunReport) -> String {
    let mut json = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    json.push('\n');
    json
}

fn run_stages(config: &PipelineConfig) -> Result<RunReport> {
    let mut timings = BTreeMap::new();
    let rate_daily = crate::analytic::daily_rate(config.annual_rate);

    let (chain, returns) = stage("ingest", &mut timings, || {
        let chain = OptionChain::load(
            &config.chain_path,
            config.spot,
            rate_daily,
            config.quote_date,
        )?;
        let returns = ReturnSeries::load(&config.returns_path, config.returns_kind)?;
        Ok((chain, returns))
    })?;
    let n_quotes_raw = chain.quotes.len();

    let clean = stage("clean", &mut timings, || {
        let clean = chain.cleaned();
        clean.write_csv(config.output_dir.join("chain_clean.csv"))?;
        Ok(clean)
    })?;

    let (short, long) = stage("split", &mut timings, || {
        Ok(clean.split_by_horizon(config.horizon_boundary_days))
    })?;

    let moments = stage("moments", &mut timings, || {
        volmodels::historical_moments(&returns, 1.0)
    })?;

    let (sigma_ref, garch) = stage("volatility", &mut timings, || match config.vol_mode {
        VolMode::Historical => Ok((moments.sigma_o, None)),
        VolMode::ArmaGarch => {
            let fit = volmodels::fit_arma_garch(&returns)?;
            let summary = GarchSummary {
                converged: fit.converged,
                loglik: fit.loglik,
                sigma_forecast: fit.sigma_forecast,
                a1: fit.params.a1,
                beta1: fit.params.beta1,
                nu: fit.params.nu,
                iterations: fit.iterations,
            };
            let path = config.output_dir.join("garch_fit.json");
            let json = serde_json::to_string_pretty(&fit)
                .expect("fit serialization cannot fail");
            std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
            Ok((fit.sigma_forecast, Some(summary)))
        }
    })?;

    let short_out = stage("calibrate-short", &mut timings, || {
        process_split("short", &short, sigma_ref, &moments, config)
    })?;
    let long_out = stage("calibrate-long", &mut timings, || {
        process_split("long", &long, sigma_ref, &moments, config)
    })?;

    let mut artifacts = vec!["chain_clean.csv".to_string()];
    if garch.is_some() {
        artifacts.push("garch_fit.json".to_string());
    }
    artifacts.extend(short_out.artifacts);
    artifacts.extend(long_out.artifacts);
    artifacts.push(REPORT_FILE.to_string());
    artifacts.sort();

    Ok(RunReport {
        config: config.clone(),
        n_quotes_raw,
        n_quotes_clean: clean.quotes.len(),
        moments,
        sigma_ref,
        garch,
        short: short_out.report,
        long: long_out.report,
        artifacts,
        timings_ms: timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::io::Write;
    use std::path::Path;

    /// Deterministic return series with positive drift and real spread.
    fn write_returns(dir: &Path) -> PathBuf {
        let path = dir.join("returns.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "date,return").unwrap();
        let start = chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        for i in 0..260i64 {
            let wiggle = 0.009 * ((i as f64 * 0.83).sin());
            writeln!(
                f,
                "{},{}",
                start + chrono::Duration::days(i),
                0.0012 + wiggle
            )
            .unwrap();
        }
        path
    }

    fn write_chain(
        dir: &Path,
        spot: f64,
        rate_daily: f64,
        moments: &HistoricalMoments,
        n_steps: u32,
    ) -> PathBuf {
        let path = dir.join("chain.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(
            f,
            "expiry_days,strike,last_price,bid,ask,volume,open_interest"
        )
        .unwrap();
        for expiry in [7u32, 42] {
            for i in 0..5 {
                let strike = 98.0 + i as f64;
                let price = tree::price_european(
                    spot,
                    strike,
                    moments.mu_o,
                    moments.sigma_o,
                    moments.p_up,
                    rate_daily,
                    expiry as f64,
                    n_steps,
                )
                .unwrap();
                writeln!(f, "{expiry},{strike},{price},{},{},10,10", price * 0.99, price * 1.01)
                    .unwrap();
            }
        }
        path
    }

    fn test_config(dir: &Path) -> PipelineConfig {
        let returns_path = write_returns(dir);
        let series = ReturnSeries::load(&returns_path, ReturnsKind::Returns).unwrap();
        let moments = volmodels::historical_moments(&series, 1.0).unwrap();
        let annual_rate = 0.04;
        let chain_path = write_chain(
            dir,
            100.0,
            crate::analytic::daily_rate(annual_rate),
            &moments,
            60,
        );
        PipelineConfig {
            chain_path,
            returns_path,
            spot: 100.0,
            annual_rate,
            quote_date: chrono::NaiveDate::from_ymd_opt(2025, 4, 21).unwrap(),
            horizon_boundary_days: 21,
            vol_mode: VolMode::Historical,
            returns_kind: ReturnsKind::Returns,
            n_steps: Some(60),
            bandwidth_t: None,
            bandwidth_m: None,
            winsorize_quantile: None,
            grid_points: Some(6),
            output_dir: dir.join("out"),
            seed: 0,
            workers: Some(2),
        }
    }

    #[test]
    fn self_consistent_market_round_trips_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let config = test_config(dir.path());
        let report = run_pipeline(&config).unwrap();

        assert_eq!(report.n_quotes_raw, 10);
        assert_eq!(report.n_quotes_clean, 10);
        assert_eq!(report.short.n_quotes, 5);
        assert_eq!(report.long.n_quotes, 5);
        assert_eq!(report.short.ms_converged, 5);

        // Prices were generated by the same lattice at exactly the
        // historical moments, so the search converges at its start and
        // the recovered parameters are the identity calibration.
        let noise = report.short.noise.unwrap();
        assert_relative_eq!(noise.w_er, 1.0, max_relative = 1e-12);
        assert_abs_diff_eq!(noise.sigma_n, 0.0, epsilon = 1e-12);
        let eff = report.short.efficient.unwrap();
        assert_relative_eq!(eff.mu, report.moments.mu_o, max_relative = 1e-12);
        assert_relative_eq!(eff.sigma, report.moments.sigma_o, max_relative = 1e-12);

        // All declared artifacts exist; the partial marker is gone.
        for name in &report.artifacts {
            assert!(
                config.output_dir.join(name).exists(),
                "missing artifact {name}"
            );
        }
        assert!(!config.output_dir.join(PARTIAL_MARKER).exists());

        // Re-running with the same config is byte-identical up to timings.
        let report_text = std::fs::read_to_string(config.output_dir.join(REPORT_FILE)).unwrap();
        let config2 = PipelineConfig {
            output_dir: dir.path().join("out2"),
            ..config.clone()
        };
        run_pipeline(&config2).unwrap();
        let report_text2 = std::fs::read_to_string(config2.output_dir.join(REPORT_FILE)).unwrap();
        let strip = |s: &str| -> serde_json::Value {
            let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
            v.as_object_mut().unwrap().remove("timings_ms");
            // The echoed config differs only in output_dir.
            v.as_object_mut().unwrap().remove("config");
            v
        };
        assert_eq!(strip(&report_text), strip(&report_text2));
    }

    #[test]
    fn missing_chain_aborts_at_ingest_and_leaves_the_marker() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config(dir.path());
        config.chain_path = dir.path().join("nope.csv");
        let err = run_pipeline(&config).unwrap_err();
        match &err {
            Error::Pipeline { stage, source } => {
                assert_eq!(*stage, "ingest");
                assert!(source.to_string().contains("nope.csv"));
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(err.exit_code(), 3);
        assert!(config.output_dir.join(PARTIAL_MARKER).exists());
    }

    #[test]
    fn config_validation_failures_exit_as_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config(dir.path());
        config.winsorize_quantile = Some(1.5);
        let err = run_pipeline(&config).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
