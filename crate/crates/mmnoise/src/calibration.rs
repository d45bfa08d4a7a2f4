//! Implied-parameter extraction from option quotes.
//!
//! Three layers, from single quote to whole market:
//!
//! 1. `implied_epsilon`: the extra volatility beyond a reference sigma
//!    that reprices one quote under the closed form. The pricing map is
//!    strictly monotone in total volatility, so the squared-relative-
//!    error minimum is a bracketed root.
//! 2. `implied_mu_sigma`: the per-quote (mu, sigma) pair minimizing the
//!    squared relative lattice-pricing error. A single price cannot pin
//!    two parameters; the reported pair is the minimizer reached from
//!    the caller's initialization (normally the historical moments), and
//!    a flatness probe marks points whose mu is not locally identified.
//! 3. `calibrate_noise_params`: medians over a converged implied surface
//!    give the observable-to-efficient drift ratio w_er (the exact L1
//!    location solution of min_w E|mu_o w - mu_imp|) and the volatility
//!    gap sigma_n = median(sigma_imp) - sigma_o.
//!
//! `assemble_params` then forms the efficient-price parameters
//! mu = mu_o w_er, sigma = sigma_o + sigma_n, mu_n = mu_o (w_er - 1).

use crate::analytic::bsm_noise_call;
use crate::error::{Error, Result};
use crate::marketdata::{OptionChain, OptionQuote};
use crate::numerics::{
    axis_simplex, brent_root, median_lower, minimize_nelder_mead, NelderMeadOptions,
};
use crate::tree;
use crate::volmodels::HistoricalMoments;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One quote's implied values. Only the slots the producing operation
/// solves for are populated. `objective` is the squared relative pricing
/// error at the reported solution; `flat_mu` marks a mu that the data
/// leaves unidentified (the objective stays under tolerance on both
/// sides of the reported value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedPoint {
    pub expiry_days: u32,
    pub strike: f64,
    pub moneyness: f64,
    pub value_eps: Option<f64>,
    pub value_mu: Option<f64>,
    pub value_sigma: Option<f64>,
    pub converged: bool,
    pub objective: f64,
    pub flat_mu: bool,
}

/// Which implied value a single-column surface file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImpliedKind {
    Epsilon,
    Mu,
    Sigma,
}

impl ImpliedKind {
    fn get(self, p: &ImpliedPoint) -> Option<f64> {
        match self {
            ImpliedKind::Epsilon => p.value_eps,
            ImpliedKind::Mu => p.value_mu,
            ImpliedKind::Sigma => p.value_sigma,
        }
    }

    fn set(self, p: &mut ImpliedPoint, v: f64) {
        match self {
            ImpliedKind::Epsilon => p.value_eps = Some(v),
            ImpliedKind::Mu => p.value_mu = Some(v),
            ImpliedKind::Sigma => p.value_sigma = Some(v),
        }
    }
}

pub const SURFACE_HEADER: [&str; 6] = [
    "expiry_days",
    "strike",
    "moneyness",
    "value",
    "converged",
    "objective",
];

/// An implied surface: one point per quote, in chain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedSurface {
    pub points: Vec<ImpliedPoint>,
}

impl ImpliedSurface {
    /// Values of the chosen kind from converged points only.
    pub fn converged_values(&self, kind: ImpliedKind) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.converged)
            .filter_map(|p| kind.get(p))
            .collect()
    }

    /// Write one value column in the surface schema.
    pub fn write_csv(&self, path: impl AsRef<Path>, kind: ImpliedKind) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
        let mut write_all = || -> csv::Result<()> {
            w.write_record(SURFACE_HEADER)?;
            for p in &self.points {
                let value = kind
                    .get(p)
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                w.write_record([
                    p.expiry_days.to_string(),
                    p.strike.to_string(),
                    p.moneyness.to_string(),
                    value,
                    p.converged.to_string(),
                    p.objective.to_string(),
                ])?;
            }
            w.flush().map_err(csv::Error::from)
        };
        write_all().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })
    }

    /// Read a surface file back; the value column fills the `kind` slot.
    pub fn read_csv(path: impl AsRef<Path>, kind: ImpliedKind) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    Error::io(path, io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: e.to_string(),
            },
        })?;
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        if headers != SURFACE_HEADER {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!(
                    "expected header '{}', got '{}'",
                    SURFACE_HEADER.join(","),
                    headers.join(",")
                ),
            });
        }
        let mut points = Vec::new();
        for (i, row) in rdr
            .deserialize::<(u32, f64, f64, Option<f64>, bool, f64)>()
            .enumerate()
        {
            let (expiry_days, strike, moneyness, value, converged, objective) =
                row.map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: e.position().map(|p| p.line()).unwrap_or(i as u64 + 2),
                    msg: e.to_string(),
                })?;
            let mut p = ImpliedPoint {
                expiry_days,
                strike,
                moneyness,
                value_eps: None,
                value_mu: None,
                value_sigma: None,
                converged,
                objective,
                flat_mu: false,
            };
            if let Some(v) = value {
                kind.set(&mut p, v);
            }
            points.push(p);
        }
        Ok(ImpliedSurface { points })
    }
}

/// Total-volatility search bracket, per square-root day.
const VOL_BRACKET_LO: f64 = 1e-8;
const VOL_BRACKET_HI: f64 = 5.0;
const VOL_BRACKET_CAP: f64 = 64.0;

/// Implied noise scale for one quote: the root of
/// C(sigma + eps) = C_emp in total volatility, minus the reference sigma.
/// Quotes priced outside the no-arbitrage band get the in-bracket
/// boundary minimizer and `converged = false` instead of an error, so
/// surface assembly never stops on a bad quote.
pub fn implied_epsilon(
    spot: f64,
    rate_daily: f64,
    sigma: f64,
    quote: &OptionQuote,
) -> Result<ImpliedPoint> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "reference sigma must be positive, got {sigma}"
        )));
    }
    let c_emp = quote.last_price;
    let tau = quote.expiry_days as f64;
    let price = |total: f64| bsm_noise_call(spot, quote.strike, tau, rate_daily, 0.0, total);
    if !(c_emp > 0.0) || !(spot > 0.0) {
        return Err(Error::Domain(format!(
            "implied extraction needs a positive price and spot, got C = {c_emp}, S = {spot}"
        )));
    }

    let point = |total: f64, converged: bool| -> Result<ImpliedPoint> {
        let rel = (price(total)? - c_emp) / c_emp;
        Ok(ImpliedPoint {
            expiry_days: quote.expiry_days,
            strike: quote.strike,
            moneyness: quote.moneyness,
            value_eps: Some(total - sigma),
            value_mu: None,
            value_sigma: None,
            converged,
            objective: rel * rel,
            flat_mu: false,
        })
    };

    // Prices at or outside the no-arbitrage band have no root; the
    // monotone objective is then minimized at the nearer bracket edge.
    let lower_bound = (spot - (-rate_daily * tau).exp() * quote.strike).max(0.0);
    if c_emp <= lower_bound {
        return point(VOL_BRACKET_LO, false);
    }
    if c_emp >= spot {
        return point(VOL_BRACKET_HI, false);
    }

    let mut lo = VOL_BRACKET_LO;
    let mut hi = VOL_BRACKET_HI;
    let f = |v: f64| price(v).expect("bracket stays inside the pricer domain") - c_emp;
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    while f_lo.signum() == f_hi.signum() && hi < VOL_BRACKET_CAP {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = f(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        // Root not straddled even at the cap; report the better edge.
        let edge = if f_lo.abs() <= f_hi.abs() { lo } else { hi };
        return point(edge, false);
    }
    let root = brent_root(f, lo, hi, f_lo, f_hi, 0.0, 1e-10 * c_emp, 200);
    point(root.x, root.converged)
}

/// Implied noise scale for every quote in a chain, in chain order.
/// Per-quote solves are independent and run in parallel.
pub fn implied_eps_surface(chain: &OptionChain, sigma: f64) -> Result<ImpliedSurface> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "reference sigma must be positive, got {sigma}"
        )));
    }
    let points = chain
        .quotes
        .par_iter()
        .map(|q| implied_epsilon(chain.spot, chain.rate_daily, sigma, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImpliedSurface { points })
}

const MS_TOL: f64 = 1e-8;
/// Drift displacement the identifiability test asks the model to resolve.
const FLAT_PROBE: f64 = 1e-4;
const SIGMA_FLOOR: f64 = 1e-8;
/// Margin inside (0, 1) where the q-boundary penalty ramps up.
const Q_MARGIN: f64 = 1e-3;

/// First-order sensitivity of the relative pricing error to the drift,
/// evaluated from the smooth structure of the lattice rather than by
/// finite differences (the discrete tree's price carries oscillations of
/// relative size well above the convergence tolerance, which would drown
/// any numerical probe).
///
/// The lattice's one-step risk-neutral mean is pinned to r dt for every
/// mu, so the drift enters the price only through the risk-neutral step
/// variance q(1-q)(u-d)^2 with u - d independent of mu:
///
/// ```text
/// d Var_q / d mu = -(1 - 2q) sigma dt^{3/2} / sqrt(p(1-p))
/// ```
///
/// which vanishes identically at q = 1/2, the zero-premium point of a
/// symmetric lattice. The variance perturbation is mapped to a price
/// perturbation through the closed-form vega of the lognormal price with
/// the same total variance.
#[allow(clippy::too_many_arguments)]
fn drift_slope(
    spot: f64,
    rate_daily: f64,
    p_up: f64,
    n_steps: u32,
    c_emp: f64,
    quote: &OptionQuote,
    mu: f64,
    sigma: f64,
) -> f64 {
    let tau = quote.expiry_days as f64;
    let dt = tau / n_steps as f64;
    let theta = (mu - rate_daily) / sigma;
    let q = p_up - theta * (p_up * (1.0 - p_up) * dt).sqrt();
    if !(q > 0.0 && q < 1.0) {
        return f64::INFINITY;
    }
    let pq = p_up * (1.0 - p_up);
    let dvar_dmu = ((1.0 - 2.0 * q) * sigma * dt.powf(1.5) / pq.sqrt()).abs();
    let var_step = q * (1.0 - q) * sigma * sigma * dt / pq;
    let sigma_eff = (var_step / dt).sqrt();
    let sq = sigma_eff * tau.sqrt();
    let u_plus = ((spot / quote.strike).ln() + (rate_daily + 0.5 * sigma_eff * sigma_eff) * tau) / sq;
    let density = (-0.5 * u_plus * u_plus).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let vega = spot * density * tau.sqrt();
    // Total variance over the horizon is n_steps * var_step; chain rule
    // through sigma_eff = sqrt(total / tau).
    let dprice_dvar = vega * n_steps as f64 / (2.0 * sigma_eff * tau);
    dprice_dvar * dvar_dmu / c_emp
}

#[allow(clippy::too_many_arguments)]
fn mu_sigma_objective(
    spot: f64,
    rate_daily: f64,
    p_up: f64,
    n_steps: u32,
    c_emp: f64,
    quote: &OptionQuote,
    mu: f64,
    sigma: f64,
) -> f64 {
    if !(sigma > SIGMA_FLOOR) || !mu.is_finite() {
        let viol = SIGMA_FLOOR - sigma;
        return 1e6 * (1.0 + viol * viol);
    }
    let tau = quote.expiry_days as f64;
    let dt = tau / n_steps as f64;
    let q = match tree::tree_params(mu, sigma, p_up, dt)
        .and_then(|p| tree::risk_neutral_prob(&p, mu, sigma, rate_daily))
    {
        Ok(q) => q,
        Err(_) => {
            // Outside the arbitrage-free region; grow with the distance
            // of the would-be q from (0, 1) so the search is pushed back.
            let theta = (mu - rate_daily) / sigma;
            let q_raw = p_up - theta * (p_up * (1.0 - p_up) * dt).sqrt();
            let dist = if q_raw <= 0.0 { -q_raw } else { q_raw - 1.0 };
            return 1e6 * (1.0 + dist * dist);
        }
    };
    let price = match tree::price_european(
        spot,
        quote.strike,
        mu,
        sigma,
        p_up,
        rate_daily,
        tau,
        n_steps,
    ) {
        Ok(p) => p,
        Err(_) => return 1e6,
    };
    let rel = (price - c_emp) / c_emp;
    let mut obj = rel * rel;
    let margin = q.min(1.0 - q);
    if margin < Q_MARGIN {
        let t = (Q_MARGIN - margin) / Q_MARGIN;
        obj += 100.0 * t * t;
    }
    obj
}

/// Per-quote (mu, sigma) implied by the lattice price, via a
/// deterministic simplex search from `init` with the no-arbitrage
/// constraint enforced by penalty.
///
/// A single price pins at most one smooth combination of (mu, sigma),
/// so the reported pair is the minimizer reached from `init`, not a
/// global identification. `flat_mu` reports when even the local drift
/// information degenerates: it is set when the model's drift slope (see
/// `drift_slope`) cannot move the relative pricing error by the square
/// root of the convergence tolerance over a displacement of 1e-4, which
/// happens exactly when the risk-neutral branch weight sits at 1/2, the
/// zero-premium point of a symmetric lattice.
#[allow(clippy::too_many_arguments)]
pub fn implied_mu_sigma(
    spot: f64,
    rate_daily: f64,
    p_up: f64,
    n_steps: u32,
    init: (f64, f64),
    quote: &OptionQuote,
) -> Result<ImpliedPoint> {
    if !(p_up > 0.0 && p_up < 1.0) {
        return Err(Error::Domain(format!(
            "p_up must lie strictly inside (0, 1), got {p_up}"
        )));
    }
    if n_steps == 0 {
        return Err(Error::Domain("step count must be at least 1".into()));
    }
    let (mu0, sigma0) = init;
    if !(sigma0 > 0.0) || !mu0.is_finite() {
        return Err(Error::Domain(format!(
            "initialization must have positive sigma, got ({mu0}, {sigma0})"
        )));
    }
    let c_emp = quote.last_price;
    if !(c_emp > 0.0) {
        return Err(Error::Domain(format!(
            "implied extraction needs a positive quote price, got {c_emp}"
        )));
    }

    let obj = |x: &[f64]| {
        mu_sigma_objective(spot, rate_daily, p_up, n_steps, c_emp, quote, x[0], x[1])
    };
    // The drift simplex edge stays small and absolute, two decades under
    // the identifiability probe: wide drift steps only let the simplex
    // slide along the objective's flat direction, pulling the reported
    // mu away from the initialization for no gain in fit. Sigma scales
    // relatively since it is well identified.
    let deltas = [1e-2 * FLAT_PROBE, (0.10 * sigma0).max(1e-4)];
    let simplex = axis_simplex(&[mu0, sigma0], &deltas);
    // The search digs one threshold decade past convergence so sigma is
    // pinned tightly; digging further only lets the simplex wander along
    // the drift's flat direction without improving anything.
    let result = minimize_nelder_mead(obj, simplex, &NelderMeadOptions {
        f_target: 1e-2 * MS_TOL,
        x_tol: 1e-12,
        max_iter: 500,
    });
    let (mu_star, sigma_star) = (result.x[0], result.x[1]);
    let converged = result.fx <= MS_TOL;
    let flat_mu = converged
        && drift_slope(spot, rate_daily, p_up, n_steps, c_emp, quote, mu_star, sigma_star)
            * FLAT_PROBE
            <= MS_TOL.sqrt();
    Ok(ImpliedPoint {
        expiry_days: quote.expiry_days,
        strike: quote.strike,
        moneyness: quote.moneyness,
        value_eps: None,
        value_mu: Some(mu_star),
        value_sigma: Some(sigma_star),
        converged,
        objective: result.fx,
        flat_mu,
    })
}

/// Per-quote (mu, sigma) over a whole chain, in chain order, parallel.
pub fn implied_mu_sigma_surface(
    chain: &OptionChain,
    p_up: f64,
    n_steps: u32,
    init: (f64, f64),
) -> Result<ImpliedSurface> {
    let points = chain
        .quotes
        .par_iter()
        .map(|q| implied_mu_sigma(chain.spot, chain.rate_daily, p_up, n_steps, init, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImpliedSurface { points })
}

/// Aggregate noise parameters: the drift ratio and the volatility gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub w_er: f64,
    pub sigma_n: f64,
}

/// Efficient-price parameters assembled from the observable moments and
/// the calibrated noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficientParams {
    pub mu: f64,
    pub sigma: f64,
    pub mu_n: f64,
    pub mu_o: f64,
    pub sigma_o: f64,
    pub w_er: f64,
    pub sigma_n: f64,
}

/// Medians of the converged implied values give both noise parameters.
/// For a scalar L1 location problem min_w E|mu_o w - mu_imp| the exact
/// argmin is median(mu_imp) / mu_o, so no iterative search is needed.
/// Even-count medians use the lower-median convention throughout.
pub fn calibrate_noise_params(
    points: &[ImpliedPoint],
    moments: &HistoricalMoments,
) -> Result<NoiseParams> {
    if moments.mu_o == 0.0 {
        return Err(Error::DegenerateData(
            "observable drift is zero; the drift ratio w_er is undefined".into(),
        ));
    }
    let mu_values: Vec<f64> = points
        .iter()
        .filter(|p| p.converged)
        .filter_map(|p| p.value_mu)
        .collect();
    let sigma_values: Vec<f64> = points
        .iter()
        .filter(|p| p.converged)
        .filter_map(|p| p.value_sigma)
        .collect();
    let (Some(mu_med), Some(sigma_med)) = (median_lower(&mu_values), median_lower(&sigma_values))
    else {
        return Err(Error::InsufficientData {
            msg: "no converged implied (mu, sigma) points to calibrate from".into(),
            required: 1,
            actual: 0,
        });
    };
    let w_er = mu_med / moments.mu_o;
    if w_er == 0.0 {
        return Err(Error::DegenerateData(
            "implied drift median is zero; w_er = 0 contradicts observability of the noise ratio"
                .into(),
        ));
    }
    Ok(NoiseParams {
        w_er,
        sigma_n: sigma_med - moments.sigma_o,
    })
}

/// The exact parameter identities mu = mu_o w_er, sigma = sigma_o +
/// sigma_n, mu_n = mu_o (w_er - 1).
pub fn assemble_params(moments: &HistoricalMoments, noise: &NoiseParams) -> EfficientParams {
    EfficientParams {
        mu: moments.mu_o * noise.w_er,
        sigma: moments.sigma_o + noise.sigma_n,
        mu_n: moments.mu_o * (noise.w_er - 1.0),
        mu_o: moments.mu_o,
        sigma_o: moments.sigma_o,
        w_er: noise.w_er,
        sigma_n: noise.sigma_n,
    }
}
