//! Quantile scoring of the two short-term models: the generalized piecewise
//! linear loss, its mean over a test set, and the repeated 80/20
//! train-test protocol comparing the spline method against the binning
//! baseline.

use rayon::prelude::*;

use crate::basis::AllowedTypes;
use crate::binning::{fit_binned, BinGrid};
use crate::dist::{gev_quantile, gev_sample};
use crate::extreme::{empirical_quantile, short_term_params};
use crate::fit::Likelihood;
use crate::rjs::{run_chain, ChainConfig};
use crate::{child_seed, rng_from_seed, Error, Result, TenMinRecord};

const SPLIT_TAG: u64 = 0x5350_4C54;
const POOL_TAG: u64 = 0x5053_434F;

/// Generalized piecewise linear loss of the `tau`-quantile estimate
/// `l_hat` against the realized value `y`, with power parameter `b`.
/// `b = 1` is the piecewise linear (pinball) loss; `b = 0` is the log
/// branch.
pub fn gpl_score(l_hat: f64, y: f64, tau: f64, b: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid_argument(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    if !l_hat.is_finite() || !y.is_finite() || !b.is_finite() {
        return Err(Error::invalid_argument(
            "score arguments must be finite".to_string(),
        ));
    }
    if b <= 0.0 && (l_hat <= 0.0 || y <= 0.0) {
        return Err(Error::invalid_argument(format!(
            "power parameter {b} needs positive arguments, got l_hat={l_hat}, y={y}"
        )));
    }
    let indicator = if l_hat >= y { 1.0 } else { 0.0 };
    let value = if b == 0.0 {
        (indicator - tau) * (l_hat / y).ln()
    } else {
        (indicator - tau) * (l_hat.powf(b) - y.powf(b)) / b.abs()
    };
    Ok(value)
}

/// Arithmetic mean of per-point GPL scores over paired estimates and
/// observations.
pub fn mean_score(estimates: &[f64], observations: &[f64], tau: f64, b: f64) -> Result<f64> {
    if estimates.len() != observations.len() {
        return Err(Error::invalid_argument(format!(
            "length mismatch: {} estimates vs {} observations",
            estimates.len(),
            observations.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::invalid_argument("mean score of an empty set"));
    }
    let mut total = 0.0;
    for (&l, &y) in estimates.iter().zip(observations) {
        total += gpl_score(l, y, tau, b)?;
    }
    Ok(total / estimates.len() as f64)
}

/// Percentage reduction in mean score achieved by the spline method over
/// the binning baseline.
pub fn reduction_pct(binning: f64, spline: f64) -> f64 {
    if binning == 0.0 {
        0.0
    } else {
        100.0 * (binning - spline) / binning
    }
}

/// Settings for the repeated train-test comparison.
#[derive(Debug, Clone)]
pub struct ScoreConfig {
    pub tau_list: Vec<f64>,
    pub b_list: Vec<f64>,
    pub n_repeats: usize,
    /// Training fraction of each random split.
    pub split_frac: f64,
    pub seed: u64,
    /// Chain settings for the per-repeat spline fit; `n_draws` is the
    /// number of posterior draws pooled into each predictive quantile.
    pub chain: ChainConfig,
    pub allowed_loc: AllowedTypes,
    pub allowed_scale: AllowedTypes,
    /// Predictive loads drawn per posterior draw and test point.
    pub n_l: usize,
    pub grid_v: usize,
    pub grid_s: usize,
    /// Optional wind samples for the low-likelihood bin exclusion; test
    /// points routed to excluded bins are dropped from the comparison.
    pub exclusion_wind_samples: Option<Vec<(f64, f64)>>,
    pub exclusion_threshold: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            tau_list: vec![0.9, 0.99],
            b_list: vec![0.0, 1.0, 2.0],
            n_repeats: 10,
            split_frac: 0.8,
            seed: 0,
            chain: ChainConfig {
                n_draws: 50,
                ..ChainConfig::default()
            },
            allowed_loc: AllowedTypes::ALL,
            allowed_scale: AllowedTypes::V_S,
            n_l: 100,
            grid_v: 10,
            grid_s: 6,
            exclusion_wind_samples: None,
            exclusion_threshold: 0.5,
        }
    }
}

/// Mean scores of both methods for one `(tau, b)` cell.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub tau: f64,
    pub b: f64,
    pub binning_mean: f64,
    pub spline_mean: f64,
    pub reduction_pct: f64,
    /// Repeats that completed; failed fits are recorded and skipped.
    pub n_repeats: usize,
    pub n_failed: usize,
}

struct RepeatScores {
    /// `per_cell[(tau, b)] = (binning mean, spline mean)` in config order.
    cells: Vec<(f64, f64)>,
}

fn split_indices(n: usize, frac: f64, rng: &mut impl rand::Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    let n_train = ((n as f64) * frac).floor() as usize;
    let test = idx.split_off(n_train);
    (idx, test)
}

fn run_one_repeat(
    data: &[TenMinRecord],
    config: &ScoreConfig,
    grid_template: &BinGrid,
    rep: usize,
) -> Result<RepeatScores> {
    let mut rng = rng_from_seed(child_seed(config.seed, SPLIT_TAG, rep as u64));
    let (train_idx, test_idx) = split_indices(data.len(), config.split_frac, &mut rng);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::invalid_argument("split produced an empty partition"));
    }
    let train: Vec<TenMinRecord> = train_idx.iter().map(|&i| data[i]).collect();
    let test: Vec<TenMinRecord> = test_idx.iter().map(|&i| data[i]).collect();

    // binning fit on the training split, on the shared grid
    let binned = fit_binned(&train, grid_template)?;

    // spline fit on the training split
    let chain = ChainConfig {
        seed: child_seed(config.seed, 0x4348_4149, rep as u64),
        ..config.chain.clone()
    };
    let (draws, _) = run_chain(
        Likelihood::Gev,
        &train,
        config.allowed_loc,
        config.allowed_scale,
        &chain,
        None,
    )?;
    if draws.is_empty() {
        return Err(Error::invalid_argument(
            "scoring needs chain draws; set chain.n_draws > 0",
        ));
    }

    // drop test points routed to excluded bins from the comparison
    let kept: Vec<&TenMinRecord> = test
        .iter()
        .filter(|r| !grid_template.is_excluded(grid_template.bin_of(r.v, r.s)))
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid_argument(
            "every test point fell in an excluded bin",
        ));
    }

    // per test point: binning closed-form quantiles and a spline
    // predictive pool shared across tau values
    let mut pool_rng = rng_from_seed(child_seed(config.seed, POOL_TAG, rep as u64));
    let mut spline_q: Vec<Vec<f64>> = vec![Vec::with_capacity(kept.len()); config.tau_list.len()];
    let mut binning_q: Vec<Vec<f64>> = vec![Vec::with_capacity(kept.len()); config.tau_list.len()];
    let mut observed: Vec<f64> = Vec::with_capacity(kept.len());
    let mut pool = Vec::with_capacity(draws.len() * config.n_l);
    for r in &kept {
        observed.push(r.y);
        let gev_bin = binned.gev_at(r.v, r.s)?;
        pool.clear();
        for draw in &draws {
            let table = short_term_params(draw, &[(r.v, r.s)])?;
            for _ in 0..config.n_l {
                pool.push(gev_sample(&table[0], &mut pool_rng));
            }
        }
        for (ti, &tau) in config.tau_list.iter().enumerate() {
            binning_q[ti].push(gev_quantile(1.0 - tau, &gev_bin)?);
            spline_q[ti].push(empirical_quantile(&mut pool, tau));
        }
    }

    let mut cells = Vec::with_capacity(config.tau_list.len() * config.b_list.len());
    for (ti, &tau) in config.tau_list.iter().enumerate() {
        for &b in &config.b_list {
            let bin_mean = mean_score(&binning_q[ti], &observed, tau, b)?;
            let spl_mean = mean_score(&spline_q[ti], &observed, tau, b)?;
            cells.push((bin_mean, spl_mean));
        }
    }
    Ok(RepeatScores { cells })
}

/// Run the repeated train-test protocol and aggregate: the reported mean
/// score of each method is the average over repeats of the per-repeat test
/// means.
pub fn compare_methods(data: &[TenMinRecord], config: &ScoreConfig) -> Result<Vec<ScoreReport>> {
    if !(config.split_frac > 0.0 && config.split_frac < 1.0) {
        return Err(Error::invalid_argument("split fraction must lie in (0, 1)"));
    }
    if config.n_repeats == 0 || config.tau_list.is_empty() || config.b_list.is_empty() {
        return Err(Error::invalid_argument(
            "need at least one repeat, tau and b",
        ));
    }
    if data.len() < 20 {
        return Err(Error::invalid_argument(
            "too little data for a train/test comparison",
        ));
    }

    let mut grid = BinGrid::from_data(data, config.grid_v, config.grid_s)?;
    if let Some(samples) = &config.exclusion_wind_samples {
        grid.exclude_low_likelihood(samples, data.len(), config.exclusion_threshold);
    }

    let outcomes: Vec<Result<RepeatScores>> = (0..config.n_repeats)
        .into_par_iter()
        .map(|rep| run_one_repeat(data, config, &grid, rep))
        .collect();

    let n_cells = config.tau_list.len() * config.b_list.len();
    let mut sums = vec![(0.0f64, 0.0f64); n_cells];
    let mut ok = 0usize;
    let mut failed = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(rep) => {
                ok += 1;
                for (acc, cell) in sums.iter_mut().zip(rep.cells) {
                    acc.0 += cell.0;
                    acc.1 += cell.1;
                }
            }
            Err(_) => failed += 1,
        }
    }
    if ok == 0 {
        return Err(Error::numeric("every train/test repeat failed"));
    }

    let mut reports = Vec::with_capacity(n_cells);
    let mut cell = 0;
    for &tau in &config.tau_list {
        for &b in &config.b_list {
            let bin_mean = sums[cell].0 / ok as f64;
            let spl_mean = sums[cell].1 / ok as f64;
            reports.push(ScoreReport {
                tau,
                b,
                binning_mean: bin_mean,
                spline_mean: spl_mean,
                reduction_pct: reduction_pct(bin_mean, spl_mean),
                n_repeats: ok,
                n_failed: failed,
            });
            cell += 1;
        }
    }
    Ok(reports)
}
