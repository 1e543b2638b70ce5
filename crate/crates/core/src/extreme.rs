//! Long-term distribution assembly and the posterior predictive of the
//! extreme load level: per posterior draw, the short-term GEV parameters at
//! every predictive wind pair are pooled through Monte Carlo sampling into
//! the long-term load distribution, whose upper quantile is one draw of the
//! T-year load level.

use rayon::prelude::*;

use crate::basis::{design_row, AllowedTypes};
use crate::dist::{gev_sample, implied_t_years, GevParams};
use crate::fit::Likelihood;
use crate::rjs::{run_chain, ChainConfig, PosteriorDraw};
use crate::{child_seed, rng_from_seed, Error, Result, TenMinRecord};

const LT_DRAW_TAG: u64 = 0x4C54_4452; // per-draw quantile streams
const BAND_TAG: u64 = 0x424E_4452;

/// Posterior predictive summary of the extreme load level for one target
/// probability.
#[derive(Debug, Clone)]
pub struct QuantileResult {
    /// One extreme-load draw per retained posterior draw.
    pub draws: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    /// 2.5% / 97.5% central interval of the draws.
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Service time whose exceedance probability is `p_t`.
    pub t_years: f64,
    pub p_t: f64,
    /// Set when the Monte Carlo pool is too small to resolve `p_t`
    /// (pool size times `p_t` below one); the quantile then interpolates at
    /// the pool maximum.
    pub warn_extreme: bool,
}

/// Empirical quantile with linear interpolation between order statistics.
/// Rearranges `values`. Levels beyond the largest order statistic clamp to
/// the maximum.
pub fn empirical_quantile(values: &mut [f64], level: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty pool");
    assert!((0.0..=1.0).contains(&level), "level must be in [0, 1]");
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let h = level * (n - 1) as f64;
    let lo = (h.floor() as usize).min(n - 2);
    let frac = h - lo as f64;
    let (_, lo_val, right) =
        values.select_nth_unstable_by(lo, |a, b| a.partial_cmp(b).expect("finite pool"));
    let lo_val = *lo_val;
    if frac == 0.0 {
        return lo_val;
    }
    let hi_val = right.iter().cloned().fold(f64::INFINITY, f64::min);
    // interpolation between non-finite neighbors has no defined midpoint;
    // fall back to the nearer order statistic
    if !(hi_val - lo_val).is_finite() {
        return if frac >= 0.5 { hi_val } else { lo_val };
    }
    lo_val + frac * (hi_val - lo_val)
}

/// Short-term GEV parameters at every predictive wind pair under one
/// posterior draw: spline location, exp-spline scale, shared shape.
pub fn short_term_params(
    draw: &PosteriorDraw,
    wind_pairs: &[(f64, f64)],
) -> Result<Vec<GevParams>> {
    if draw.beta.len() != draw.phi_loc.k() || draw.theta.len() != draw.phi_scale.k() {
        return Err(Error::InvalidState(
            "draw coefficient lengths do not match its configurations".into(),
        ));
    }
    // overflow guards: coefficient draws from ridge-repaired fits (dead
    // basis columns) can reach scales no physical load admits; keep the
    // short-term parameters finite without touching ordinary draws
    let xi = draw.xi().clamp(-5.0, 5.0);
    wind_pairs
        .iter()
        .map(|&(v, s)| {
            let row_mu = design_row(&draw.phi_loc, v, s);
            let row_sg = design_row(&draw.phi_scale, v, s);
            let mu: f64 = draw.beta.iter().zip(&row_mu).map(|(a, b)| a * b).sum();
            let g: f64 = draw.theta.iter().zip(&row_sg).map(|(a, b)| a * b).sum();
            GevParams::new(mu, g.clamp(-50.0, 50.0).exp(), xi)
        })
        .collect()
}

/// Draw `n_l` loads from each short-term distribution, pool everything, and
/// return the empirical `(1 - p_t)`-quantile with the extreme-order-statistic
/// warning flag.
pub fn long_term_quantile<R: rand::Rng + ?Sized>(
    gev_table: &[GevParams],
    n_l: usize,
    p_t: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    if gev_table.is_empty() {
        return Err(Error::invalid_argument("empty short-term parameter table"));
    }
    if !(p_t > 0.0 && p_t < 1.0) {
        return Err(Error::invalid_argument(format!(
            "target probability must lie in (0, 1), got {p_t}"
        )));
    }
    let mut pool = Vec::with_capacity(gev_table.len() * n_l);
    for p in gev_table {
        for _ in 0..n_l {
            pool.push(gev_sample(p, rng));
        }
    }
    let warn = (pool.len() as f64) * p_t < 1.0;
    let q = empirical_quantile(&mut pool, 1.0 - p_t);
    Ok((q, warn))
}

/// Settings for the full spline estimate.
#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub chain: ChainConfig,
    pub allowed_loc: AllowedTypes,
    pub allowed_scale: AllowedTypes,
    /// Loads drawn per short-term distribution when pooling.
    pub n_l: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            chain: ChainConfig::default(),
            allowed_loc: AllowedTypes::ALL,
            allowed_scale: AllowedTypes::V_S,
            n_l: 100,
        }
    }
}

pub(crate) fn summarize_draws(draws: Vec<f64>, p_t: f64, warn: bool) -> Result<QuantileResult> {
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    // summaries work on a scratch copy; the stored draws keep the emission
    // order so entries pair up across target probabilities
    let mut scratch = draws.clone();
    let median = empirical_quantile(&mut scratch, 0.5);
    let ci_lower = empirical_quantile(&mut scratch, 0.025);
    let ci_upper = empirical_quantile(&mut scratch, 0.975);
    Ok(QuantileResult {
        draws,
        mean,
        median,
        ci_lower,
        ci_upper,
        t_years: implied_t_years(p_t)?,
        p_t,
        warn_extreme: warn,
    })
}

/// Run the reversible jump chain on the load data and turn each retained
/// posterior draw into one extreme-load draw per target probability. All
/// probabilities share the per-draw Monte Carlo pools, so quantiles at
/// smaller probabilities are computed from the same samples. An optional
/// sink receives the chain trace.
pub fn estimate_extreme_load(
    data: &[TenMinRecord],
    wind_pairs: &[(f64, f64)],
    config: &EstimateConfig,
    probs: &[f64],
    trace: Option<&mut dyn std::io::Write>,
) -> Result<Vec<QuantileResult>> {
    if probs.is_empty() {
        return Err(Error::invalid_argument("no target probabilities given"));
    }
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid_argument(format!(
                "target probability must lie in (0, 1), got {p}"
            )));
        }
    }
    if wind_pairs.is_empty() {
        return Err(Error::invalid_argument("no predictive wind pairs"));
    }
    let (draws, _diag) = run_chain(
        Likelihood::Gev,
        data,
        config.allowed_loc,
        config.allowed_scale,
        &config.chain,
        trace,
    )?;
    if draws.is_empty() {
        return Err(Error::invalid_argument(
            "chain produced no draws; set n_draws > 0",
        ));
    }

    // per-draw pools are independent given split seeds
    let per_draw: Vec<Result<Vec<(f64, bool)>>> = draws
        .par_iter()
        .enumerate()
        .map(|(i, draw)| {
            let mut rng = rng_from_seed(child_seed(config.chain.seed, LT_DRAW_TAG, i as u64));
            let table = short_term_params(draw, wind_pairs)?;
            let mut pool = Vec::with_capacity(table.len() * config.n_l);
            for p in &table {
                for _ in 0..config.n_l {
                    pool.push(gev_sample(p, &mut rng));
                }
            }
            let mut out = Vec::with_capacity(probs.len());
            for &p_t in probs {
                let warn = (pool.len() as f64) * p_t < 1.0;
                let q = empirical_quantile(&mut pool, 1.0 - p_t);
                out.push((q, warn));
            }
            Ok(out)
        })
        .collect();

    let mut per_prob: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.len()); probs.len()];
    let mut warn_any = vec![false; probs.len()];
    for row in per_draw {
        let row = row?;
        for (j, (q, w)) in row.into_iter().enumerate() {
            per_prob[j].push(q);
            warn_any[j] |= w;
        }
    }
    probs
        .iter()
        .zip(per_prob.into_iter().zip(warn_any))
        .map(|(&p_t, (draws, warn))| summarize_draws(draws, p_t, warn))
        .collect()
}

/// Conditioning axis for point-wise credible bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandAxis {
    V,
    S,
}

impl BandAxis {
    pub fn name(self) -> &'static str {
        match self {
            BandAxis::V => "v",
            BandAxis::S => "s",
        }
    }

    /// Slab half-width used in the reference analysis: 0.5 m/s on the
    /// average-speed axis, 0.05 m/s on the standard-deviation axis.
    pub fn default_halfwidth(self) -> f64 {
        match self {
            BandAxis::V => 0.5,
            BandAxis::S => 0.05,
        }
    }
}

/// One point-wise predictive band.
#[derive(Debug, Clone, Copy)]
pub struct CredibleBand {
    pub lower: f64,
    pub upper: f64,
    /// Observed covariate pairs inside the slab.
    pub n_obs: usize,
}

/// 95% point-wise band of the predictive load at covariates near `center`:
/// predictive draws are pooled over the observed pairs inside the slab and
/// over the posterior draws.
pub fn pointwise_credible_band(
    data: &[TenMinRecord],
    draws: &[PosteriorDraw],
    axis: BandAxis,
    center: f64,
    halfwidth: f64,
    n_pred_per_pair: usize,
    seed: u64,
) -> Result<CredibleBand> {
    if draws.is_empty() {
        return Err(Error::invalid_argument("no posterior draws"));
    }
    if halfwidth <= 0.0 {
        return Err(Error::invalid_argument("slab halfwidth must be positive"));
    }
    let slab: Vec<(f64, f64)> = data
        .iter()
        .filter(|r| {
            let x = match axis {
                BandAxis::V => r.v,
                BandAxis::S => r.s,
            };
            x > center - halfwidth && x < center + halfwidth
        })
        .map(|r| (r.v, r.s))
        .collect();
    if slab.is_empty() {
        return Err(Error::EmptySlab {
            axis: axis.name(),
            lo: center - halfwidth,
            hi: center + halfwidth,
        });
    }
    let mut rng = rng_from_seed(child_seed(seed, BAND_TAG, center.to_bits()));
    let mut pool = Vec::with_capacity(draws.len() * slab.len() * n_pred_per_pair);
    for draw in draws {
        let table = short_term_params(draw, &slab)?;
        for p in &table {
            for _ in 0..n_pred_per_pair {
                pool.push(gev_sample(p, &mut rng));
            }
        }
    }
    let lower = empirical_quantile(&mut pool, 0.025);
    let upper = empirical_quantile(&mut pool, 0.975);
    Ok(CredibleBand {
        lower,
        upper,
        n_obs: slab.len(),
    })
}
