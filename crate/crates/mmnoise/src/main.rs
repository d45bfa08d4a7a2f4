//! Command line front end. Every subcommand is a thin wrapper over one
//! library operation: argument parsing and printing happen here, all
//! numerics live in the library.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 convergence failure.
//!
//! Units follow the library conventions: rates are taken annualized on
//! the command line and converted to per-trading-day internally, while
//! drifts and volatilities are per trading day (per square-root day for
//! volatilities) exactly as they appear in reports and surface files.

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use mmnoise::calibration::{self, ImpliedKind, ImpliedPoint, ImpliedSurface};
use mmnoise::error::{Error, Result};
use mmnoise::marketdata::{OptionChain, ReturnSeries, ReturnsKind};
use mmnoise::numerics::median_lower;
use mmnoise::pipeline::{self, PipelineConfig, VolMode};
use mmnoise::simulation::{self, PathConfig, PathMode};
use mmnoise::surfaces::{self, SurfacePoint};
use mmnoise::volmodels::{self, HistoricalMoments};
use mmnoise::{bsm_noise_call, daily_rate, tree};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "mmnoise",
    version,
    about = "Pricing and calibration for asset prices carrying multiplicative noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Epsilon,
    Mu,
    Sigma,
}

impl From<KindArg> for ImpliedKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Epsilon => ImpliedKind::Epsilon,
            KindArg::Mu => ImpliedKind::Mu,
            KindArg::Sigma => ImpliedKind::Sigma,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    RealWorld,
    RiskNeutral,
}

impl From<ModeArg> for PathMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::RealWorld => PathMode::RealWorld,
            ModeArg::RiskNeutral => PathMode::RiskNeutral,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReturnsKindArg {
    Returns,
    Prices,
}

impl From<ReturnsKindArg> for ReturnsKind {
    fn from(k: ReturnsKindArg) -> Self {
        match k {
            ReturnsKindArg::Returns => ReturnsKind::Returns,
            ReturnsKindArg::Prices => ReturnsKind::Prices,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VolModeArg {
    Historical,
    ArmaGarch,
}

impl From<VolModeArg> for VolMode {
    fn from(v: VolModeArg) -> Self {
        match v {
            VolModeArg::Historical => VolMode::Historical,
            VolModeArg::ArmaGarch => VolMode::ArmaGarch,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load an option chain CSV, validate and clean it, write it back out
    Ingest {
        /// Chain CSV (expiry_days,strike,last_price,bid,ask,volume,open_interest)
        #[arg(long)]
        chain: PathBuf,
        /// Spot price on the quote date
        #[arg(long)]
        spot: f64,
        /// Annualized risk-free rate
        #[arg(long)]
        annual_rate: f64,
        /// Observation date, YYYY-MM-DD
        #[arg(long)]
        quote_date: NaiveDate,
        /// Cleaned chain CSV to write
        #[arg(long)]
        out: PathBuf,
    },

    /// Price one European call with the closed-form noise-adjusted formula
    Price {
        #[arg(long)]
        spot: f64,
        #[arg(long)]
        strike: f64,
        /// Time to expiry in trading days
        #[arg(long)]
        tau_days: f64,
        /// Annualized risk-free rate
        #[arg(long)]
        annual_rate: f64,
        /// Efficient volatility per square-root day
        #[arg(long)]
        sigma: f64,
        /// Noise scale per square-root day; may be negative
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        epsilon: f64,
    },

    /// Price one European call on the drift-preserving binomial lattice
    TreePrice {
        #[arg(long)]
        spot: f64,
        #[arg(long)]
        strike: f64,
        /// Per-day drift of the observed price
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        /// Volatility per square-root day
        #[arg(long)]
        sigma: f64,
        /// Up-move probability of the lattice, strictly inside (0, 1)
        #[arg(long)]
        p_up: f64,
        /// Annualized risk-free rate
        #[arg(long)]
        annual_rate: f64,
        /// Time to expiry in trading days
        #[arg(long)]
        tau_days: f64,
        #[arg(long, default_value_t = 500)]
        n_steps: u32,
    },

    /// Simulate noisy price paths; one path writes its trajectory
    /// (step,spot), several write terminal values (path,terminal)
    Simulate {
        #[arg(long)]
        spot0: f64,
        /// Per-day drift (the risk-free rate in risk-neutral mode)
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        /// Efficient volatility per square-root day
        #[arg(long)]
        sigma: f64,
        /// Noise scale per square-root day; may be negative
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        epsilon: f64,
        /// Horizon in trading days
        #[arg(long)]
        horizon_days: f64,
        /// Time steps per path
        #[arg(long)]
        steps: u32,
        #[arg(long, default_value_t = 1)]
        paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::RealWorld)]
        mode: ModeArg,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
    },

    /// Fit the ARMA(3)-GARCH(1,1) model with Student-t innovations
    FitGarch {
        /// Returns CSV (date,return) or price CSV (date,price)
        #[arg(long)]
        returns: PathBuf,
        #[arg(long, value_enum, default_value_t = ReturnsKindArg::Returns)]
        kind: ReturnsKindArg,
        /// Write the full fit (coefficients, sigma path) as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Implied noise scale per quote at a fixed reference volatility;
    /// expects a cleaned chain (see ingest)
    ImpliedEps {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        spot: f64,
        /// Annualized risk-free rate
        #[arg(long)]
        annual_rate: f64,
        /// Observation date, YYYY-MM-DD
        #[arg(long)]
        quote_date: NaiveDate,
        /// Reference volatility per square-root day
        #[arg(long)]
        sigma: f64,
        /// Surface CSV to write
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for per-quote solves; default all logical cores
        #[arg(long)]
        workers: Option<usize>,
    },

    /// Implied (drift, volatility) per quote on the lattice; expects a
    /// cleaned chain (see ingest)
    ImpliedMusigma {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        spot: f64,
        /// Annualized risk-free rate
        #[arg(long)]
        annual_rate: f64,
        /// Observation date, YYYY-MM-DD
        #[arg(long)]
        quote_date: NaiveDate,
        /// Up-move probability of the lattice, strictly inside (0, 1)
        #[arg(long)]
        p_up: f64,
        #[arg(long, default_value_t = 500)]
        n_steps: u32,
        /// Search start for the per-day drift
        #[arg(long, allow_hyphen_values = true)]
        mu0: f64,
        /// Search start for the per-square-root-day volatility
        #[arg(long)]
        sigma0: f64,
        /// Drift surface CSV to write
        #[arg(long)]
        out_mu: PathBuf,
        /// Volatility surface CSV to write
        #[arg(long)]
        out_sigma: PathBuf,
        /// Worker threads for per-quote solves; default all logical cores
        #[arg(long)]
        workers: Option<usize>,
    },

    /// Aggregate implied surfaces into noise and efficient-price
    /// parameters (medians of the converged values)
    CalibrateNoise {
        /// Drift surface CSV (from implied-musigma --out-mu)
        #[arg(long)]
        mu_surface: PathBuf,
        /// Volatility surface CSV (from implied-musigma --out-sigma)
        #[arg(long)]
        sigma_surface: PathBuf,
        /// Observable per-day drift of the return window
        #[arg(long, allow_hyphen_values = true)]
        mu_o: f64,
        /// Observable volatility of the return window per square-root day
        #[arg(long)]
        sigma_o: f64,
        /// Write the parameters as JSON instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Winsorize a surface file and smooth it onto a regular grid
    Surface {
        /// Surface CSV (from implied-eps or implied-musigma)
        #[arg(long)]
        input: PathBuf,
        /// Which value the file carries
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Grid resolution per axis
        #[arg(long, default_value_t = 25)]
        grid_points: usize,
        /// Kernel bandwidth along expiry; default a tenth of the range
        #[arg(long)]
        bandwidth_t: Option<f64>,
        /// Kernel bandwidth along moneyness; default a tenth of the range
        #[arg(long)]
        bandwidth_m: Option<f64>,
        /// Upper-tail clip level before smoothing
        #[arg(long, default_value_t = 0.99)]
        winsorize_quantile: f64,
        /// Grid CSV to write; a JSON sidecar goes next to it
        #[arg(long)]
        out: PathBuf,
    },

    /// Run the full calibration pipeline from a JSON config file
    Pipeline {
        /// JSON config; flags below override its fields
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        chain: Option<PathBuf>,
        #[arg(long)]
        returns: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        vol_mode: Option<VolModeArg>,
        #[arg(long)]
        n_steps: Option<u32>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; default all logical cores
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// Run `f` on a dedicated pool of `workers` threads, or inline on the
/// default pool when no count is given.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(f),
    }
}

fn write_two_col_csv<I>(path: &Path, header: [&str; 2], rows: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let as_parse_err = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| as_parse_err(e.to_string()))?;
    let write_all = || -> csv::Result<()> {
        w.write_record(header)?;
        for (a, b) in rows {
            w.write_record([a, b])?;
        }
        w.flush().map_err(csv::Error::from)
    };
    write_all().map_err(|e| as_parse_err(e.to_string()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            chain,
            spot,
            annual_rate,
            quote_date,
            out,
        } => {
            let loaded = OptionChain::load(&chain, spot, daily_rate(annual_rate), quote_date)?;
            let clean = loaded.cleaned();
            clean.write_csv(&out)?;
            println!(
                "loaded {} quotes, kept {} after cleaning",
                loaded.quotes.len(),
                clean.quotes.len()
            );
            println!("wrote {}", out.display());
        }

        Command::Price {
            spot,
            strike,
            tau_days,
            annual_rate,
            sigma,
            epsilon,
        } => {
            let price =
                bsm_noise_call(spot, strike, tau_days, daily_rate(annual_rate), sigma, epsilon)?;
            println!("{price}");
        }

        Command::TreePrice {
            spot,
            strike,
            mu,
            sigma,
            p_up,
            annual_rate,
            tau_days,
            n_steps,
        } => {
            let price = tree::price_european(
                spot,
                strike,
                mu,
                sigma,
                p_up,
                daily_rate(annual_rate),
                tau_days,
                n_steps,
            )?;
            println!("{price}");
        }

        Command::Simulate {
            spot0,
            mu,
            sigma,
            epsilon,
            horizon_days,
            steps,
            paths,
            seed,
            mode,
            out,
        } => {
            let config = PathConfig {
                spot0,
                mu,
                sigma,
                epsilon,
                horizon_days,
                steps,
                seed,
                mode: mode.into(),
            };
            if paths == 1 {
                let path = simulation::simulate_path(&config)?;
                write_two_col_csv(
                    &out,
                    ["step", "spot"],
                    path.spots
                        .iter()
                        .enumerate()
                        .map(|(k, s)| (k.to_string(), s.to_string())),
                )?;
                println!("1 path, {} steps, floored: {}", steps, path.floored);
            } else {
                let sample = simulation::simulate_terminals(&config, paths)?;
                write_two_col_csv(
                    &out,
                    ["path", "terminal"],
                    sample
                        .values
                        .iter()
                        .enumerate()
                        .map(|(k, s)| (k.to_string(), s.to_string())),
                )?;
                let mean = mmnoise::numerics::pairwise_sum(&sample.values)
                    / sample.values.len() as f64;
                println!(
                    "{} paths, mean terminal {}, floored paths: {}",
                    paths, mean, sample.floored_paths
                );
            }
            println!("wrote {}", out.display());
        }

        Command::FitGarch { returns, kind, out } => {
            let series = ReturnSeries::load(&returns, kind.into())?;
            let fit = volmodels::fit_arma_garch(&series)?;
            println!(
                "{:<8} {:>14} {:>12} {:>10}",
                "coef", "estimate", "std_err", "p_value"
            );
            for c in &fit.coefficients {
                println!(
                    "{:<8} {:>14.6e} {:>12.3e} {:>10.4}",
                    c.name, c.estimate, c.std_err, c.p_value
                );
            }
            println!("loglik {}", fit.loglik);
            println!("sigma_forecast {}", fit.sigma_forecast);
            println!("converged {} after {} iterations", fit.converged, fit.iterations);
            if let Some(out) = out {
                let json = serde_json::to_string_pretty(&fit)
                    .expect("fit serialization cannot fail");
                std::fs::write(&out, json + "\n").map_err(|e| Error::io(&out, e))?;
                println!("wrote {}", out.display());
            }
        }

        Command::ImpliedEps {
            chain,
            spot,
            annual_rate,
            quote_date,
            sigma,
            out,
            workers,
        } => {
            let chain = OptionChain::load(&chain, spot, daily_rate(annual_rate), quote_date)?;
            let surface =
                with_workers(workers, || calibration::implied_eps_surface(&chain, sigma))?;
            surface.write_csv(&out, ImpliedKind::Epsilon)?;
            let values = surface.converged_values(ImpliedKind::Epsilon);
            println!("{} quotes, {} converged", surface.points.len(), values.len());
            if let Some(median) = median_lower(&values) {
                println!("median epsilon {median}");
            }
            println!("wrote {}", out.display());
        }

        Command::ImpliedMusigma {
            chain,
            spot,
            annual_rate,
            quote_date,
            p_up,
            n_steps,
            mu0,
            sigma0,
            out_mu,
            out_sigma,
            workers,
        } => {
            let chain = OptionChain::load(&chain, spot, daily_rate(annual_rate), quote_date)?;
            let surface = with_workers(workers, || {
                calibration::implied_mu_sigma_surface(&chain, p_up, n_steps, (mu0, sigma0))
            })?;
            surface.write_csv(&out_mu, ImpliedKind::Mu)?;
            surface.write_csv(&out_sigma, ImpliedKind::Sigma)?;
            let converged = surface.points.iter().filter(|p| p.converged).count();
            let flat = surface.points.iter().filter(|p| p.flat_mu).count();
            println!(
                "{} quotes, {} converged, {} with unidentified drift",
                surface.points.len(),
                converged,
                flat
            );
            println!("wrote {}", out_mu.display());
            println!("wrote {}", out_sigma.display());
        }

        Command::CalibrateNoise {
            mu_surface,
            sigma_surface,
            mu_o,
            sigma_o,
            out,
        } => {
            let mu_surf = ImpliedSurface::read_csv(&mu_surface, ImpliedKind::Mu)?;
            let sigma_surf = ImpliedSurface::read_csv(&sigma_surface, ImpliedKind::Sigma)?;
            let points = merge_surfaces(&mu_surf, &sigma_surf)?;
            // p_up is carried by the moments struct but plays no role in
            // the median aggregation or the parameter identities.
            let moments = HistoricalMoments {
                mu_o,
                sigma_o,
                p_up: 0.5,
            };
            let noise = calibration::calibrate_noise_params(&points, &moments)?;
            let params = calibration::assemble_params(&moments, &noise);
            let json =
                serde_json::to_string_pretty(&params).expect("parameter serialization cannot fail");
            match out {
                Some(out) => {
                    std::fs::write(&out, json + "\n").map_err(|e| Error::io(&out, e))?;
                    println!("wrote {}", out.display());
                }
                None => println!("{json}"),
            }
        }

        Command::Surface {
            input,
            kind,
            grid_points,
            bandwidth_t,
            bandwidth_m,
            winsorize_quantile,
            out,
        } => {
            let kind: ImpliedKind = kind.into();
            let surf = ImpliedSurface::read_csv(&input, kind)?;
            let kept: Vec<(f64, f64, f64)> = surf
                .points
                .iter()
                .filter(|p| p.converged)
                .filter_map(|p| {
                    let value = match kind {
                        ImpliedKind::Epsilon => p.value_eps,
                        ImpliedKind::Mu => p.value_mu,
                        ImpliedKind::Sigma => p.value_sigma,
                    };
                    value.map(|v| (p.expiry_days as f64, p.moneyness, v))
                })
                .collect();
            if kept.is_empty() {
                return Err(Error::InsufficientData {
                    msg: "no converged values to smooth".into(),
                    required: 1,
                    actual: 0,
                });
            }
            let values: Vec<f64> = kept.iter().map(|&(_, _, v)| v).collect();
            let clipped = surfaces::winsorize(&values, winsorize_quantile)?;
            let points: Vec<SurfacePoint> = kept
                .iter()
                .zip(&clipped)
                .map(|(&(t, m, _), &value)| SurfacePoint { t, m, value })
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
                &surfaces::linspace(t_lo, t_hi, grid_points),
                &surfaces::linspace(m_lo, m_hi, grid_points),
                bandwidth_t.unwrap_or_else(|| surfaces::default_bandwidth(t_hi - t_lo)),
                bandwidth_m.unwrap_or_else(|| surfaces::default_bandwidth(m_hi - m_lo)),
            )?;
            surfaces::export_grid(&grid, &out)?;
            let missing = grid.missing_mask().iter().filter(|&&gap| gap).count();
            println!(
                "{} x {} grid from {} points, {} empty cells",
                grid.t_axis.len(),
                grid.m_axis.len(),
                points.len(),
                missing
            );
            println!("wrote {}", out.display());
        }

        Command::Pipeline {
            config,
            chain,
            returns,
            output_dir,
            vol_mode,
            n_steps,
            grid_points,
            seed,
            workers,
        } => {
            let raw = std::fs::read_to_string(&config).map_err(|e| Error::io(&config, e))?;
            let mut cfg: PipelineConfig = serde_json::from_str(&raw).map_err(|e| {
                Error::Config(format!("{}: {e}", config.display()))
            })?;
            if let Some(p) = chain {
                cfg.chain_path = p;
            }
            if let Some(p) = returns {
                cfg.returns_path = p;
            }
            if let Some(p) = output_dir {
                cfg.output_dir = p;
            }
            if let Some(v) = vol_mode {
                cfg.vol_mode = v.into();
            }
            if let Some(n) = n_steps {
                cfg.n_steps = Some(n);
            }
            if let Some(g) = grid_points {
                cfg.grid_points = Some(g);
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = Some(w);
            }
            let report = pipeline::run_pipeline(&cfg)?;
            println!(
                "quotes: {} raw, {} clean",
                report.n_quotes_raw, report.n_quotes_clean
            );
            println!(
                "moments: mu_o {}, sigma_o {}, p_up {}",
                report.moments.mu_o, report.moments.sigma_o, report.moments.p_up
            );
            println!("reference sigma {}", report.sigma_ref);
            for (name, split) in [("short", &report.short), ("long", &report.long)] {
                match &split.noise {
                    Some(noise) => println!(
                        "{name}: {} quotes, w_er {}, sigma_n {}",
                        split.n_quotes, noise.w_er, noise.sigma_n
                    ),
                    None => println!(
                        "{name}: {} quotes, no converged calibration",
                        split.n_quotes
                    ),
                }
            }
            println!(
                "report: {}",
                cfg.output_dir.join(pipeline::REPORT_FILE).display()
            );
        }
    }
    Ok(())
}

/// Pair up the drift and volatility surface files row by row. The two
/// files come from one solve, so their quote keys must line up; a
/// merged point is converged only when both rows are.
fn merge_surfaces(mu: &ImpliedSurface, sigma: &ImpliedSurface) -> Result<Vec<ImpliedPoint>> {
    if mu.points.len() != sigma.points.len() {
        return Err(Error::DegenerateData(format!(
            "surface files disagree: {} drift rows vs {} volatility rows",
            mu.points.len(),
            sigma.points.len()
        )));
    }
    mu.points
        .iter()
        .zip(&sigma.points)
        .map(|(m, s)| {
            if m.expiry_days != s.expiry_days || m.strike != s.strike {
                return Err(Error::DegenerateData(format!(
                    "surface files disagree at (expiry_days={}, strike={}) vs \
                     (expiry_days={}, strike={})",
                    m.expiry_days, m.strike, s.expiry_days, s.strike
                )));
            }
            Ok(ImpliedPoint {
                value_sigma: s.value_sigma,
                converged: m.converged && s.converged,
                ..m.clone()
            })
        })
        .collect()
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
