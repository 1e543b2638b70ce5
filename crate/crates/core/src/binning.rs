//! The industry binning baseline: a grid over the wind covariates, one
//! stationary GEV per cell with a shape shared across cells, inverse
//! squared-distance interpolation for empty cells, and the repeated
//! parameter-sampling procedure that yields confidence intervals for the
//! extreme load.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dist::{gev_sample, GevParams, LOG_DENSITY_FLOOR};
use crate::extreme::{empirical_quantile, summarize_draws, QuantileResult};
use crate::fit::{
    bfgs_minimize, covariance_sqrt, fit_mle, mvn_draw, observed_information, Likelihood,
};
use crate::rjs::PosteriorDraw;
use crate::{child_seed, rng_from_seed, Error, Result, TenMinRecord};

const REP_TAG: u64 = 0x4249_4E52;

/// Rectangular grid over `(v, s)` with optional excluded cells and the
/// standardization scales used for inter-bin distances.
#[derive(Debug, Clone)]
pub struct BinGrid {
    pub v_edges: Vec<f64>,
    pub s_edges: Vec<f64>,
    /// Flat indices (`iv * n_s + is`) excluded from fitting and comparison.
    pub excluded: Vec<usize>,
    /// Distance standardization scales (data standard deviations).
    pub v_scale: f64,
    pub s_scale: f64,
}

impl BinGrid {
    /// Build an `n_v x n_s` grid covering the observed data range.
    pub fn from_data(data: &[TenMinRecord], n_v: usize, n_s: usize) -> Result<BinGrid> {
        if data.is_empty() || n_v == 0 || n_s == 0 {
            return Err(Error::invalid_argument(
                "grid needs data and positive bin counts",
            ));
        }
        let edges = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            let (lo, hi) = if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            };
            // widen the top edge so the maximum routes into the last bin
            let hi = hi + 1e-9 * (1.0 + hi.abs());
            (0..=n)
                .map(|i| lo + (hi - lo) * i as f64 / n as f64)
                .collect()
        };
        let (v_min, v_max) = min_max(data.iter().map(|r| r.v));
        let (s_min, s_max) = min_max(data.iter().map(|r| r.s));
        Ok(BinGrid {
            v_edges: edges(v_min, v_max, n_v),
            s_edges: edges(s_min, s_max, n_s),
            excluded: Vec::new(),
            v_scale: std_dev(data.iter().map(|r| r.v)).max(1e-12),
            s_scale: std_dev(data.iter().map(|r| r.s)).max(1e-12),
        })
    }

    pub fn n_v(&self) -> usize {
        self.v_edges.len() - 1
    }

    pub fn n_s(&self) -> usize {
        self.s_edges.len() - 1
    }

    pub fn n_bins(&self) -> usize {
        self.n_v() * self.n_s()
    }

    pub fn is_excluded(&self, idx: usize) -> bool {
        self.excluded.contains(&idx)
    }

    pub fn validate(&self) -> Result<()> {
        for edges in [&self.v_edges, &self.s_edges] {
            if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid_argument(
                    "bin edges must be strictly increasing with at least one bin",
                ));
            }
        }
        if self.excluded.iter().any(|&i| i >= self.n_bins()) {
            return Err(Error::invalid_argument("excluded bin index out of range"));
        }
        Ok(())
    }

    fn axis_bin(edges: &[f64], x: f64) -> usize {
        // clamp out-of-range points to the nearest edge bin
        let n = edges.len() - 1;
        if x < edges[0] {
            return 0;
        }
        match edges.windows(2).position(|w| x >= w[0] && x < w[1]) {
            Some(i) => i,
            None => n - 1,
        }
    }

    /// Flat bin index of a covariate pair; every in-range pair maps to
    /// exactly one bin and out-of-range pairs clamp to the edge bins.
    pub fn bin_of(&self, v: f64, s: f64) -> usize {
        Self::axis_bin(&self.v_edges, v) * self.n_s() + Self::axis_bin(&self.s_edges, s)
    }

    /// Center of a bin in covariate units.
    pub fn center(&self, idx: usize) -> (f64, f64) {
        let iv = idx / self.n_s();
        let is = idx % self.n_s();
        (
            0.5 * (self.v_edges[iv] + self.v_edges[iv + 1]),
            0.5 * (self.s_edges[is] + self.s_edges[is + 1]),
        )
    }

    /// Range covered by a bin, for summary tables.
    pub fn ranges(&self, idx: usize) -> ((f64, f64), (f64, f64)) {
        let iv = idx / self.n_s();
        let is = idx % self.n_s();
        (
            (self.v_edges[iv], self.v_edges[iv + 1]),
            (self.s_edges[is], self.s_edges[is + 1]),
        )
    }

    /// Squared standardized distance between two bin centers.
    fn center_dist2(&self, a: usize, b: usize) -> f64 {
        let (va, sa) = self.center(a);
        let (vb, sb) = self.center(b);
        let dv = (va - vb) / self.v_scale;
        let ds = (sa - sb) / self.s_scale;
        dv * dv + ds * ds
    }

    /// Mark as excluded every bin whose expected record count under a wind
    /// model is below `threshold`. The expectation is the Monte Carlo bin
    /// frequency of the supplied wind samples scaled to `n_records`.
    pub fn exclude_low_likelihood(
        &mut self,
        wind_samples: &[(f64, f64)],
        n_records: usize,
        threshold: f64,
    ) {
        if wind_samples.is_empty() {
            return;
        }
        let mut counts = vec![0usize; self.n_bins()];
        for &(v, s) in wind_samples {
            counts[self.bin_of(v, s)] += 1;
        }
        let scale = n_records as f64 / wind_samples.len() as f64;
        self.excluded = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| (c as f64) * scale < threshold)
            .map(|(i, _)| i)
            .collect();
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Per-bin parameters of the fitted baseline.
#[derive(Debug, Clone)]
pub enum BinParams {
    /// MLE (or moment fallback) with the 2x2 covariance of `(mu, log sigma)`.
    Fitted {
        mu: f64,
        sigma: f64,
        cov: DMatrix<f64>,
        count: usize,
        moment_fallback: bool,
    },
    /// Inverse squared-distance average of the fitted bins.
    Interpolated {
        mu: f64,
        sigma: f64,
    },
    Excluded,
}

impl BinParams {
    pub fn mu_sigma(&self) -> Option<(f64, f64)> {
        match self {
            BinParams::Fitted { mu, sigma, .. } => Some((*mu, *sigma)),
            BinParams::Interpolated { mu, sigma } => Some((*mu, *sigma)),
            BinParams::Excluded => None,
        }
    }
}

/// The fitted binning baseline.
#[derive(Debug, Clone)]
pub struct BinnedModel {
    pub grid: BinGrid,
    pub bins: Vec<BinParams>,
    /// Shape shared by every bin, from the pooled fit.
    pub xi_shared: f64,
    /// Pooled intercept-only parameters, the fallback scale source.
    pub pooled_mu: f64,
    pub pooled_sigma: f64,
}

impl BinnedModel {
    /// Short-term distribution of the bin containing `(v, s)`.
    pub fn gev_at(&self, v: f64, s: f64) -> Result<GevParams> {
        let idx = self.grid.bin_of(v, s);
        let (mu, sigma) = self.bins[idx]
            .mu_sigma()
            .ok_or_else(|| Error::InvalidState(format!("bin {idx} has no parameters")))?;
        GevParams::new(mu, sigma, self.xi_shared)
    }
}

/// GEV log-likelihood of one bin's maxima with the shape held fixed,
/// parameterized by `(mu, log sigma)`.
fn bin_loglik(params: &[f64], ys: &[f64], xi: f64) -> f64 {
    let p = GevParams {
        mu: params[0],
        sigma: params[1].exp(),
        xi,
    };
    ys.iter()
        .map(|&y| {
            let lp = crate::dist::gev_log_pdf(y, &p).unwrap_or(f64::NEG_INFINITY);
            if lp.is_finite() {
                lp
            } else {
                LOG_DENSITY_FLOOR
            }
        })
        .sum()
}

/// Gumbel-limit Fisher information of one observation in `(mu, log sigma)`
/// coordinates. Used as the repair scale for bins whose observed
/// information is degenerate: no direction of a bin posterior may be less
/// informed than a single observation, which keeps the drawn parameters
/// finite where tiny bins would otherwise give unbounded covariances.
fn one_obs_information(sigma: f64) -> DMatrix<f64> {
    const EULER: f64 = 0.577_215_664_901_532_9;
    let g1 = EULER - 1.0;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            1.0 / (sigma * sigma),
            -g1 / sigma,
            -g1 / sigma,
            g1 * g1 + std::f64::consts::PI * std::f64::consts::PI / 6.0,
        ],
    )
}

fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    eig.eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Covariance of a bin's `(mu, log sigma)`: the inverted observed
/// information with its eigenvalues floored at one observation's worth.
fn bin_covariance(info: &DMatrix<f64>, sigma_hat: f64) -> DMatrix<f64> {
    let floor = smallest_eigenvalue(&one_obs_information(sigma_hat)).max(1e-8);
    crate::fit::floored_inverse_at(info, floor).0
}

/// Method-of-moments `(mu, sigma)` for a fixed shape.
fn moments_given_xi(mean: f64, sd: f64, xi: f64) -> (f64, f64) {
    const EULER: f64 = 0.577_215_664_901_532_9;
    if xi.abs() < 1e-3 {
        let sigma = sd * 6.0f64.sqrt() / std::f64::consts::PI;
        return (mean - EULER * sigma, sigma);
    }
    let g1 = statrs::function::gamma::gamma(1.0 - xi);
    let g2 = statrs::function::gamma::gamma(1.0 - 2.0 * xi);
    let var_factor = g2 - g1 * g1;
    if var_factor <= 0.0 || !var_factor.is_finite() {
        let sigma = sd * 6.0f64.sqrt() / std::f64::consts::PI;
        return (mean - EULER * sigma, sigma);
    }
    let sigma = sd * xi.abs() / var_factor.sqrt();
    let mu = mean - sigma * (g1 - 1.0) / xi;
    (mu, sigma)
}

/// Fit the baseline: pooled shape, per-bin conditional MLEs, moment
/// fallbacks for 1-2 point bins, interpolation for empty ones.
pub fn fit_binned(data: &[TenMinRecord], grid: &BinGrid) -> Result<BinnedModel> {
    grid.validate()?;
    if data.is_empty() {
        return Err(Error::invalid_argument("no data to bin"));
    }
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); grid.n_bins()];
    let mut n_used = 0usize;
    for r in data {
        let idx = grid.bin_of(r.v, r.s);
        if !grid.is_excluded(idx) {
            members[idx].push(r.y);
            n_used += 1;
        }
    }
    if n_used == 0 {
        return Err(Error::invalid_argument("all data fall in excluded bins"));
    }

    // pooled intercept-only fit for the shared shape
    let pooled_data: Vec<TenMinRecord> = data
        .iter()
        .filter(|r| !grid.is_excluded(grid.bin_of(r.v, r.s)))
        .cloned()
        .collect();
    let phi = crate::basis::PhiState::intercept_only(crate::basis::AllowedTypes::V_S, 2);
    let pooled = fit_mle(Likelihood::Gev, &phi, &phi, &pooled_data, None)?;
    if !pooled.converged {
        return Err(Error::numeric("pooled GEV fit did not converge"));
    }
    let xi = pooled.xi();
    let pooled_mu = pooled.beta[0];
    let pooled_sigma = pooled.theta[0].exp();

    let mut bins: Vec<BinParams> = Vec::with_capacity(grid.n_bins());
    for (idx, ys) in members.iter().enumerate() {
        if grid.is_excluded(idx) {
            bins.push(BinParams::Excluded);
            continue;
        }
        if ys.is_empty() {
            // placeholder; interpolation pass follows
            bins.push(BinParams::Interpolated {
                mu: f64::NAN,
                sigma: f64::NAN,
            });
            continue;
        }
        let n = ys.len();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let sd = if n >= 2 {
            (ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        let (mut mu0, mut sigma0) = if n >= 2 && sd > 0.0 {
            moments_given_xi(mean, sd, xi)
        } else {
            (mean - 0.45 * pooled_sigma, pooled_sigma)
        };
        if !sigma0.is_finite() || sigma0 <= 0.0 {
            sigma0 = pooled_sigma;
        }
        if !mu0.is_finite() {
            mu0 = mean;
        }

        let (mu, sigma, moment_fallback) = if n >= 3 {
            let neg = |p: &[f64]| -bin_loglik(p, ys, xi);
            let neg_grad = |p: &[f64]| {
                let f = neg(p);
                let mut g = vec![0.0; 2];
                let mut q = p.to_vec();
                for j in 0..2 {
                    let h = 1e-6 * (1.0 + p[j].abs());
                    q[j] = p[j] + h;
                    let up = neg(&q);
                    q[j] = p[j] - h;
                    let dn = neg(&q);
                    q[j] = p[j];
                    g[j] = (up - dn) / (2.0 * h);
                }
                (f, g)
            };
            let run = bfgs_minimize(&neg_grad, &neg, &[mu0, sigma0.ln()]);
            if run.converged {
                (run.z[0], run.z[1].exp(), false)
            } else {
                (mu0, sigma0, true)
            }
        } else {
            (mu0, sigma0, true)
        };

        let cov = if moment_fallback {
            // the observed information away from an MLE is meaningless
            // (and unbounded for 1-2 points); use the closed-form
            // information of `count` observations instead
            let info = one_obs_information(sigma) * n as f64;
            bin_covariance(&info, sigma)
        } else {
            let point = [mu, sigma.ln()];
            let info = observed_information(&|p| bin_loglik(p, ys, xi), &point);
            bin_covariance(&info, sigma)
        };
        bins.push(BinParams::Fitted {
            mu,
            sigma,
            cov,
            count: n,
            moment_fallback,
        });
    }

    // interpolate empty bins from the fitted ones
    let fitted: Vec<(usize, f64, f64)> = bins
        .iter()
        .enumerate()
        .filter_map(|(i, b)| match b {
            BinParams::Fitted { mu, sigma, .. } => Some((i, *mu, *sigma)),
            _ => None,
        })
        .collect();
    if fitted.is_empty() {
        return Err(Error::numeric("no bin had enough data to fit"));
    }
    for (idx, bin) in bins.iter_mut().enumerate() {
        if matches!(bin, BinParams::Interpolated { .. }) {
            let (mu, sigma) = interpolate_empty_bin(idx, &fitted, grid)?;
            *bin = BinParams::Interpolated { mu, sigma };
        }
    }

    Ok(BinnedModel {
        grid: grid.clone(),
        bins,
        xi_shared: xi,
        pooled_mu,
        pooled_sigma,
    })
}

/// Inverse squared-distance weighted average of the fitted bins' `(mu,
/// sigma)` at the target bin, with distances over standardized centers.
pub fn interpolate_empty_bin(
    target: usize,
    fitted: &[(usize, f64, f64)],
    grid: &BinGrid,
) -> Result<(f64, f64)> {
    if fitted.is_empty() {
        return Err(Error::invalid_argument(
            "interpolation needs at least one fitted bin",
        ));
    }
    let mut weights = Vec::with_capacity(fitted.len());
    let mut total = 0.0;
    for &(idx, _, _) in fitted {
        let d2 = grid.center_dist2(target, idx);
        let w = if d2 > 0.0 { 1.0 / d2 } else { f64::INFINITY };
        weights.push(w);
        total += w;
    }
    if !total.is_finite() {
        // target coincides with a fitted center; take it exactly
        let pos = weights.iter().position(|w| w.is_infinite()).unwrap();
        return Ok((fitted[pos].1, fitted[pos].2));
    }
    let mut mu = 0.0;
    let mut sigma = 0.0;
    for (w, &(_, m, s)) in weights.iter().zip(fitted) {
        mu += w / total * m;
        sigma += w / total * s;
    }
    Ok((mu, sigma))
}

/// The repeated-sampling confidence procedure: per repetition draw every
/// fitted bin's `(mu, log sigma)` from its normal approximation,
/// re-interpolate the empty bins from the drawn values, route the wind
/// pairs, pool `n_l` loads per pair, and take the upper quantiles; the
/// repetitions form the sampling distribution of the extreme load.
pub fn binned_extreme_load(
    data: &[TenMinRecord],
    wind_pairs: &[(f64, f64)],
    grid: &BinGrid,
    probs: &[f64],
    m_l: usize,
    n_l: usize,
    seed: u64,
) -> Result<Vec<QuantileResult>> {
    if probs.is_empty() || wind_pairs.is_empty() || m_l == 0 || n_l == 0 {
        return Err(Error::invalid_argument(
            "need probabilities, wind pairs and positive repetition counts",
        ));
    }
    let model = fit_binned(data, grid)?;
    binned_extreme_load_from_model(&model, wind_pairs, probs, m_l, n_l, seed)
}

/// As [`binned_extreme_load`] but reusing an already fitted model.
pub fn binned_extreme_load_from_model(
    model: &BinnedModel,
    wind_pairs: &[(f64, f64)],
    probs: &[f64],
    m_l: usize,
    n_l: usize,
    seed: u64,
) -> Result<Vec<QuantileResult>> {
    for &p in probs {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid_argument(format!(
                "target probability must lie in (0, 1), got {p}"
            )));
        }
    }
    let grid = &model.grid;
    let routes: Vec<usize> = wind_pairs.iter().map(|&(v, s)| grid.bin_of(v, s)).collect();

    // per-bin covariance square roots, computed once
    let sqrts: Vec<Option<(f64, f64, DMatrix<f64>)>> = model
        .bins
        .iter()
        .map(|b| match b {
            BinParams::Fitted { mu, sigma, cov, .. } => Some((*mu, *sigma, covariance_sqrt(cov))),
            _ => None,
        })
        .collect();

    let reps: Vec<Result<Vec<(f64, bool)>>> = (0..m_l)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng_from_seed(child_seed(seed, REP_TAG, rep as u64));
            // draw fitted-bin parameters
            let mut drawn: Vec<Option<(f64, f64)>> = vec![None; model.bins.len()];
            for (idx, entry) in sqrts.iter().enumerate() {
                if let Some((mu, sigma, sq)) = entry {
                    let d = mvn_draw(&[*mu, sigma.ln()], sq, &mut rng);
                    drawn[idx] = Some((d[0], d[1].exp()));
                }
            }
            // interpolation applies to the sampled values as well
            let fitted_drawn: Vec<(usize, f64, f64)> = drawn
                .iter()
                .enumerate()
                .filter_map(|(i, d)| d.map(|(m, s)| (i, m, s)))
                .collect();
            for (idx, slot) in drawn.iter_mut().enumerate() {
                if slot.is_none() {
                    *slot = Some(interpolate_empty_bin(idx, &fitted_drawn, grid)?);
                }
            }

            let mut pool = Vec::with_capacity(routes.len() * n_l);
            for &bin in &routes {
                let (mu, sigma) = drawn[bin].expect("all bins populated");
                let p = GevParams {
                    mu,
                    sigma: sigma.max(1e-12),
                    xi: model.xi_shared,
                };
                for _ in 0..n_l {
                    pool.push(gev_sample(&p, &mut rng));
                }
            }
            let mut out = Vec::with_capacity(probs.len());
            for &p_t in probs {
                let warn = (pool.len() as f64) * p_t < 1.0;
                out.push((empirical_quantile(&mut pool, 1.0 - p_t), warn));
            }
            Ok(out)
        })
        .collect();

    let mut per_prob: Vec<Vec<f64>> = vec![Vec::with_capacity(m_l); probs.len()];
    let mut warn_any = vec![false; probs.len()];
    for rep in reps {
        let rep = rep?;
        for (j, (q, w)) in rep.into_iter().enumerate() {
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

/// Row of the per-bin comparison table: the difference of the two methods'
/// conditional `tau`-quantiles at each included bin's median covariates,
/// standardized over the included bins.
#[derive(Debug, Clone, Copy)]
pub struct BinComparison {
    pub bin: usize,
    pub v_median: f64,
    pub s_median: f64,
    pub count: usize,
    pub binning_quantile: f64,
    pub spline_quantile: f64,
    pub difference: f64,
    pub std_difference: f64,
}

/// Per-bin quantile comparison between the baseline and the spline
/// posterior draws (predictive pools of `n_l` loads per posterior draw).
pub fn quantile_difference_grid(
    model: &BinnedModel,
    spline_draws: &[PosteriorDraw],
    data: &[TenMinRecord],
    tau: f64,
    n_l: usize,
    seed: u64,
) -> Result<Vec<BinComparison>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid_argument("tau must lie in (0, 1)"));
    }
    if spline_draws.is_empty() {
        return Err(Error::invalid_argument("no spline posterior draws"));
    }
    let grid = &model.grid;
    let mut members: Vec<Vec<&TenMinRecord>> = vec![Vec::new(); grid.n_bins()];
    for r in data {
        members[grid.bin_of(r.v, r.s)].push(r);
    }
    let mut rows = Vec::new();
    for (idx, recs) in members.iter().enumerate() {
        if recs.is_empty() || grid.is_excluded(idx) {
            continue;
        }
        let mut vs: Vec<f64> = recs.iter().map(|r| r.v).collect();
        let mut ss: Vec<f64> = recs.iter().map(|r| r.s).collect();
        let v_med = empirical_quantile(&mut vs, 0.5);
        let s_med = empirical_quantile(&mut ss, 0.5);

        let bin_q = crate::dist::gev_quantile(1.0 - tau, &model.gev_at(v_med, s_med)?)?;
        let mut rng = rng_from_seed(child_seed(seed, 0x4647_5244, idx as u64));
        let mut pool = Vec::with_capacity(spline_draws.len() * n_l);
        for draw in spline_draws {
            let table = crate::extreme::short_term_params(draw, &[(v_med, s_med)])?;
            for _ in 0..n_l {
                pool.push(gev_sample(&table[0], &mut rng));
            }
        }
        let spline_q = empirical_quantile(&mut pool, tau);
        rows.push(BinComparison {
            bin: idx,
            v_median: v_med,
            s_median: s_med,
            count: recs.len(),
            binning_quantile: bin_q,
            spline_quantile: spline_q,
            difference: bin_q - spline_q,
            std_difference: 0.0,
        });
    }
    // standardize the differences over the included bins
    let n = rows.len() as f64;
    if n >= 2.0 {
        let mean = rows.iter().map(|r| r.difference).sum::<f64>() / n;
        let sd = (rows
            .iter()
            .map(|r| (r.difference - mean) * (r.difference - mean))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
            .max(1e-12);
        for r in rows.iter_mut() {
            r.std_difference = (r.difference - mean) / sd;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::gev_sample;
    use crate::rng_from_seed;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn synth(n: usize, seed: u64) -> Vec<TenMinRecord> {
        let p = GevParams::new(1.0, 0.5, 0.05).unwrap();
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| TenMinRecord {
                v: rng.gen_range(3.0..25.0),
                s: rng.gen_range(0.1..2.0),
                y: gev_sample(&p, &mut rng),
            })
            .collect()
    }

    #[test]
    fn single_bin_equals_pooled_fit() {
        let data = synth(800, 3);
        let grid = BinGrid::from_data(&data, 1, 1).unwrap();
        let model = fit_binned(&data, &grid).unwrap();
        match &model.bins[0] {
            BinParams::Fitted { mu, sigma, .. } => {
                assert_relative_eq!(*mu, model.pooled_mu, max_relative = 1e-3);
                assert_relative_eq!(*sigma, model.pooled_sigma, max_relative = 1e-3);
            }
            other => panic!("expected fitted bin, got {other:?}"),
        }
    }

    #[test]
    fn bin_counts_partition_the_data() {
        let data = synth(500, 9);
        let grid = BinGrid::from_data(&data, 10, 6).unwrap();
        let mut counts = vec![0usize; grid.n_bins()];
        for r in &data {
            counts[grid.bin_of(r.v, r.s)] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), data.len());

        let model = fit_binned(&data, &grid).unwrap();
        let fitted_count: usize = model
            .bins
            .iter()
            .map(|b| match b {
                BinParams::Fitted { count, .. } => *count,
                _ => 0,
            })
            .sum();
        assert_eq!(fitted_count, data.len());
    }

    #[test]
    fn excluded_bins_drop_their_data() {
        let data = synth(500, 11);
        let mut grid = BinGrid::from_data(&data, 10, 6).unwrap();
        let victim = grid.bin_of(data[0].v, data[0].s);
        grid.excluded = vec![victim];
        let model = fit_binned(&data, &grid).unwrap();
        assert!(matches!(model.bins[victim], BinParams::Excluded));
        let fitted_count: usize = model
            .bins
            .iter()
            .map(|b| match b {
                BinParams::Fitted { count, .. } => *count,
                _ => 0,
            })
            .sum();
        let excluded_count = data
            .iter()
            .filter(|r| grid.bin_of(r.v, r.s) == victim)
            .count();
        assert_eq!(fitted_count, data.len() - excluded_count);
    }

    #[test]
    fn interpolation_identities() {
        let data = synth(100, 21);
        let grid = BinGrid::from_data(&data, 4, 3).unwrap();
        // single fitted bin: exact copy
        let one = vec![(5usize, 1.7, 0.4)];
        let (mu, sigma) = interpolate_empty_bin(0, &one, &grid).unwrap();
        assert_eq!((mu, sigma), (1.7, 0.4));

        // two sources equidistant from the target average exactly
        let a = grid.bin_of(grid.center(4).0, grid.center(4).1);
        // bins 3 and 5 are the lateral neighbors of 4 in a 3-wide row
        let pair = vec![(a - 1, 1.0, 1.0), (a + 1, 3.0, 3.0)];
        let (mu2, sigma2) = interpolate_empty_bin(a, &pair, &grid).unwrap();
        assert_relative_eq!(mu2, 2.0, max_relative = 1e-12);
        assert_relative_eq!(sigma2, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn interpolation_weights_normalize_and_stay_in_hull() {
        let mut rng = rng_from_seed(31);
        for _ in 0..100 {
            let data = synth(60, rng.gen());
            let n_v = rng.gen_range(2..8);
            let n_s = rng.gen_range(2..6);
            let grid = BinGrid::from_data(&data, n_v, n_s).unwrap();
            let n_fitted = rng.gen_range(1..grid.n_bins());
            let fitted: Vec<(usize, f64, f64)> = (0..n_fitted)
                .map(|i| (i, rng.gen_range(-2.0..2.0), rng.gen_range(0.1..3.0)))
                .collect();
            let target = grid.n_bins() - 1;
            let (mu, sigma) = interpolate_empty_bin(target, &fitted, &grid).unwrap();
            let (mu_lo, mu_hi) = min_max(fitted.iter().map(|f| f.1));
            let (sg_lo, sg_hi) = min_max(fitted.iter().map(|f| f.2));
            assert!(mu >= mu_lo - 1e-12 && mu <= mu_hi + 1e-12);
            assert!(sigma >= sg_lo - 1e-12 && sigma <= sg_hi + 1e-12);
            assert!(sigma > 0.0);
        }
    }

    #[test]
    fn routing_is_a_partition_with_clamping() {
        let data = synth(300, 41);
        let grid = BinGrid::from_data(&data, 10, 6).unwrap();
        for r in &data {
            let idx = grid.bin_of(r.v, r.s);
            assert!(idx < grid.n_bins());
            let ((vl, vh), (sl, sh)) = grid.ranges(idx);
            assert!(r.v >= vl && r.v < vh + 1e-6);
            assert!(r.s >= sl && r.s < sh + 1e-6);
        }
        // far out-of-range pairs clamp to corner bins
        assert_eq!(grid.bin_of(-100.0, -5.0), 0);
        assert_eq!(grid.bin_of(1e6, 1e6), grid.n_bins() - 1);
    }

    #[test]
    fn one_bin_grid_reduces_to_homogeneous_quantile() {
        let data = synth(900, 51);
        let grid = BinGrid::from_data(&data, 1, 1).unwrap();
        let mut rng = rng_from_seed(77);
        let wind_pairs: Vec<(f64, f64)> = (0..300)
            .map(|_| (rng.gen_range(3.0..25.0), rng.gen_range(0.1..2.0)))
            .collect();
        let results = binned_extreme_load(&data, &wind_pairs, &grid, &[1e-3], 60, 50, 5).unwrap();
        let r = &results[0];
        assert_eq!(r.draws.len(), 60);
        assert!(r.ci_lower <= r.median && r.median <= r.ci_upper);
        // the sampling median should sit near the pooled closed-form level
        let model = fit_binned(&data, &grid).unwrap();
        let pooled = GevParams::new(model.pooled_mu, model.pooled_sigma, model.xi_shared).unwrap();
        let exact = crate::dist::gev_quantile(1e-3, &pooled).unwrap();
        assert!(
            (r.median - exact).abs() / exact.abs() < 0.1,
            "median {} vs pooled quantile {exact}",
            r.median
        );
    }

    #[test]
    fn repeated_run_is_deterministic() {
        let data = synth(400, 61);
        let grid = BinGrid::from_data(&data, 5, 3).unwrap();
        let wind_pairs: Vec<(f64, f64)> = data.iter().map(|r| (r.v, r.s)).collect();
        let a = binned_extreme_load(&data, &wind_pairs, &grid, &[1e-3, 1e-4], 20, 20, 9).unwrap();
        let b = binned_extreme_load(&data, &wind_pairs, &grid, &[1e-3, 1e-4], 20, 20, 9).unwrap();
        assert_eq!(a[0].draws, b[0].draws);
        assert_eq!(a[1].draws, b[1].draws);
        // pathwise ordering across shared pools
        for (x, y) in a[0].draws.iter().zip(&a[1].draws) {
            assert!(y >= x);
        }
    }

    #[test]
    fn exclusion_rule_flags_rare_corners() {
        let data = synth(400, 71);
        let mut grid = BinGrid::from_data(&data, 6, 4).unwrap();
        // wind samples concentrated in one bin make everything else rare
        let center = grid.center(grid.bin_of(10.0, 1.0));
        let samples = vec![center; 5000];
        grid.exclude_low_likelihood(&samples, data.len(), 0.5);
        assert!(grid.excluded.len() == grid.n_bins() - 1);
        assert!(!grid.is_excluded(grid.bin_of(center.0, center.1)));
    }
}
