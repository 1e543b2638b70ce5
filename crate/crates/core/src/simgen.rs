//! Synthetic load generator with a single wind-speed surrogate covariate
//! and block-maximum responses. The mean response rises logistically with
//! speed and drops past the rated-speed threshold at 17, mimicking a
//! pitch-regulated turbine; block maxima of the within-block draws play the
//! role of the 10-minute maximum loads. The companion reference-quantile
//! generator produces the observed extreme quantiles that the estimators
//! are judged against.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dist::{wind_sample, WindDistKind, WindDistParams};
use crate::extreme::empirical_quantile;
use crate::{child_seed, rng_from_seed, Error, Result, TenMinRecord};

const BLOCK_TAG: u64 = 0x53494D42;
const DATASET_TAG: u64 = 0x53494D44;

/// Block-mean threshold playing the role of the rated wind speed.
pub const RATED_SPEED: f64 = 17.0;

/// Floor applied to the response standard deviation where the log formula
/// turns nonpositive (within-block speeds at or below 1).
pub const SIGMA_FLOOR: f64 = 1e-4;

/// Generator settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_blocks: usize,
    pub block_size: usize,
    /// Distribution of the block-mean speeds.
    pub weibull: WindDistParams,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_blocks: 1000,
            block_size: 1000,
            weibull: WindDistParams::new(WindDistKind::W3, vec![2.0, 8.0, 3.0])
                .expect("default generator parameters"),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 || self.block_size == 0 {
            return Err(Error::invalid_argument("block counts must be positive"));
        }
        Ok(())
    }
}

/// Mean response at within-block speed `x_point` for a block with mean
/// speed `x_block_mean`: a logistic rise, shifted down past the rated
/// speed.
pub fn sim_mu(x_block_mean: f64, x_point: f64) -> f64 {
    let logistic = 1.5 / (1.0 + 48.0 * (-0.3 * x_point).exp());
    if x_block_mean >= RATED_SPEED {
        logistic + 0.5 - 0.0016 * (x_block_mean + x_block_mean * x_block_mean)
    } else {
        logistic
    }
}

/// Response standard deviation at within-block speed `x_point`, floored
/// where the log formula is nonpositive or undefined.
pub fn sim_sigma(x_point: f64) -> f64 {
    let raw = 0.1 * x_point.ln();
    if raw.is_nan() || raw < SIGMA_FLOOR {
        SIGMA_FLOOR
    } else {
        raw
    }
}

/// One block: the block-mean speed, the within-block speed standard
/// deviation, and the block-maximum response.
fn sim_block(config: &SimConfig, rng: &mut impl rand::Rng) -> TenMinRecord {
    let x_mean = wind_sample(&config.weibull, rng);
    let mut y_max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..config.block_size {
        let z: f64 = StandardNormal.sample(rng);
        let x = x_mean + z; // unit within-block variance
        sum += x;
        sum_sq += x * x;
        let e: f64 = StandardNormal.sample(rng);
        let y = sim_mu(x_mean, x) + sim_sigma(x) * e;
        if y > y_max {
            y_max = y;
        }
    }
    let n = config.block_size as f64;
    let s = if config.block_size >= 2 {
        ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0).sqrt()
    } else {
        0.0
    };
    TenMinRecord {
        v: x_mean,
        s,
        y: y_max,
    }
}

/// Training set of `(x_i, y_i)` pairs: block-mean speeds drawn from the
/// configured family, block maxima of the within-block responses. The `s`
/// column carries the within-block speed standard deviation so generated
/// data flows through the same ingest format as field data.
pub fn generate_training(config: &SimConfig) -> Result<Vec<TenMinRecord>> {
    config.validate()?;
    let records: Vec<TenMinRecord> = (0..config.n_blocks)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(child_seed(config.seed, BLOCK_TAG, i as u64));
            sim_block(config, &mut rng)
        })
        .collect();
    Ok(records)
}

/// Observed extreme quantiles: `n_datasets` independent datasets of
/// `dataset_size` block maxima each, reduced to their empirical
/// `(1 - p)`-quantiles per target probability. Row `d` holds dataset `d`'s
/// quantiles in the order of `probs`.
pub fn generate_reference_quantiles(
    config: &SimConfig,
    n_datasets: usize,
    dataset_size: usize,
    probs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    if n_datasets == 0 || dataset_size == 0 || probs.is_empty() {
        return Err(Error::invalid_argument(
            "need datasets, a dataset size and probabilities",
        ));
    }
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid_argument(format!(
                "probability must lie in (0, 1), got {p}"
            )));
        }
    }
    let rows: Vec<Vec<f64>> = (0..n_datasets)
        .into_par_iter()
        .map(|d| {
            let dataset_seed = child_seed(config.seed, DATASET_TAG, d as u64);
            let mut maxima: Vec<f64> = Vec::with_capacity(dataset_size);
            let mut rng = rng_from_seed(dataset_seed);
            for _ in 0..dataset_size {
                maxima.push(sim_block(config, &mut rng).y);
            }
            probs
                .iter()
                .map(|&p| empirical_quantile(&mut maxima, 1.0 - p))
                .collect()
        })
        .collect();
    Ok(rows)
}
