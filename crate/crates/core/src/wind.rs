//! Wind characteristics submodel: SIC selection of the average-wind-speed
//! family, the truncated-normal turbulence model with spline location and
//! scale in the average speed, and the joint predictive sampling of
//! `(v, s)` pairs that feeds the long-term integral.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use crate::basis::{design_row, AllowedTypes};
use crate::dist::{
    trunc_norm_sample, wind_log_pdf, wind_sample, TruncNormParams, WindDistKind, WindDistParams,
    LOG_DENSITY_FLOOR,
};
use crate::fit::{
    bfgs_minimize, covariance_sqrt, floored_inverse, mvn_draw, observed_information, Likelihood,
};
use crate::rjs::{run_chain, ChainConfig, ChainDiagnostics, PosteriorDraw};
use crate::{rng_from_seed, Error, Result, TenMinRecord};

/// Margin keeping shift parameters strictly below the smallest observation
/// during fitting.
const SHIFT_MARGIN: f64 = 1e-6;

/// Result of the wind-speed family selection.
#[derive(Debug, Clone)]
pub struct WindFit {
    /// The SIC-maximizing family at its MLE.
    pub chosen: WindDistParams,
    pub loglik: f64,
    /// Inverse negative Hessian at the MLE, in the natural parameters.
    pub nu_cov: DMatrix<f64>,
    /// `(family, SIC)` for every family that fit successfully.
    pub sic_table: Vec<(WindDistKind, f64)>,
    /// Families excluded because their fit failed, with the reason.
    pub failures: Vec<(WindDistKind, String)>,
}

impl WindFit {
    pub fn sic_of(&self, kind: WindDistKind) -> Option<f64> {
        self.sic_table
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, s)| *s)
    }
}

/// Turbulence model fit: posterior draws of the location and log-scale
/// spline coefficients, all with single-input basis terms.
#[derive(Debug, Clone)]
pub struct TurbulenceFit {
    pub draws: Vec<PosteriorDraw>,
    pub diagnostics: ChainDiagnostics,
}

fn wind_loglik(kind: WindDistKind, nu: &[f64], v_data: &[f64]) -> f64 {
    let p = WindDistParams {
        kind,
        nu: nu.to_vec(),
    };
    if !p.is_valid() {
        return LOG_DENSITY_FLOOR * v_data.len() as f64;
    }
    v_data
        .iter()
        .map(|&v| {
            let lp = wind_log_pdf(v, &p);
            if lp.is_finite() {
                lp
            } else {
                LOG_DENSITY_FLOOR
            }
        })
        .sum()
}

/// Transform between the optimizer space and the natural parameters:
/// log for positive components, shifted-log keeping shifts below the data.
struct FamilyTransform {
    kind: WindDistKind,
    shift_bound: f64,
}

impl FamilyTransform {
    fn to_natural(&self, z: &[f64]) -> Vec<f64> {
        let mut nu: Vec<f64> = match self.kind {
            WindDistKind::Ln3 => vec![z[0], z[1].exp()],
            WindDistKind::Ray => vec![z[0].exp()],
            _ => vec![z[0].exp(), z[1].exp()],
        };
        if self.kind.shift_index().is_some() {
            nu.push(self.shift_bound - z[2].exp());
        }
        nu
    }

    fn to_internal(&self, nu: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = match self.kind {
            WindDistKind::Ln3 => vec![nu[0], nu[1].ln()],
            WindDistKind::Ray => vec![nu[0].ln()],
            _ => vec![nu[0].ln(), nu[1].ln()],
        };
        if self.kind.shift_index().is_some() {
            z.push((self.shift_bound - nu[2]).max(1e-12).ln());
        }
        z
    }
}

fn moment_init(kind: WindDistKind, v_data: &[f64], shift_bound: f64) -> Vec<f64> {
    let n = v_data.len() as f64;
    let mean = v_data.iter().sum::<f64>() / n;
    let var = v_data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt().max(1e-6);
    let v_min = v_data.iter().cloned().fold(f64::INFINITY, f64::min);

    let shift0 = v_min - (0.05 * (mean - v_min)).max(1e-2);
    let shifted_mean = |c: f64| mean - c;
    match kind {
        WindDistKind::Ray => vec![(v_data.iter().map(|v| v * v).sum::<f64>() / (2.0 * n)).sqrt()],
        WindDistKind::W2 => {
            let cv = sd / mean;
            let k = cv.powf(-1.086).clamp(0.3, 20.0);
            let lambda = mean / statrs::function::gamma::gamma(1.0 + 1.0 / k);
            vec![k, lambda]
        }
        WindDistKind::W3 => {
            let m = shifted_mean(shift0);
            let cv = sd / m;
            let k = cv.powf(-1.086).clamp(0.3, 20.0);
            let lambda = m / statrs::function::gamma::gamma(1.0 + 1.0 / k);
            vec![k, lambda, shift0.min(shift_bound - 1e-3)]
        }
        WindDistKind::Ln3 => {
            let logs: Vec<f64> = v_data.iter().map(|v| (v - shift0).max(1e-9).ln()).collect();
            let lm = logs.iter().sum::<f64>() / n;
            let lv = logs.iter().map(|l| (l - lm) * (l - lm)).sum::<f64>() / (n - 1.0);
            vec![lm, lv.sqrt().max(1e-3), shift0.min(shift_bound - 1e-3)]
        }
        WindDistKind::G3 => {
            let m = shifted_mean(shift0);
            let a = (m * m / var).clamp(0.1, 1e4);
            let b = var / m;
            vec![a, b, shift0.min(shift_bound - 1e-3)]
        }
        WindDistKind::Ig3 => {
            let m = shifted_mean(shift0);
            let lambda = (m * m * m / var).max(1e-3);
            vec![m, lambda, shift0.min(shift_bound - 1e-3)]
        }
    }
}

/// MLE of one family with its inverse negative Hessian in the natural
/// parameters.
pub fn fit_wind_family(
    kind: WindDistKind,
    v_data: &[f64],
) -> Result<(WindDistParams, f64, DMatrix<f64>)> {
    if v_data.len() < kind.n_params() + 2 {
        return Err(Error::invalid_argument(
            "too few observations for this family",
        ));
    }
    let v_min = v_data.iter().cloned().fold(f64::INFINITY, f64::min);
    let transform = FamilyTransform {
        kind,
        shift_bound: v_min - SHIFT_MARGIN,
    };
    let init = moment_init(kind, v_data, transform.shift_bound);
    let z0 = transform.to_internal(&init);

    let neg_ll = |z: &[f64]| -wind_loglik(kind, &transform.to_natural(z), v_data);
    let neg_ll_grad = |z: &[f64]| {
        let f = neg_ll(z);
        let mut grad = vec![0.0; z.len()];
        let mut p = z.to_vec();
        for j in 0..z.len() {
            let h = 1e-6 * (1.0 + z[j].abs());
            p[j] = z[j] + h;
            let up = neg_ll(&p);
            p[j] = z[j] - h;
            let dn = neg_ll(&p);
            p[j] = z[j];
            grad[j] = (up - dn) / (2.0 * h);
        }
        (f, grad)
    };

    let mut run = bfgs_minimize(&neg_ll_grad, &neg_ll, &z0);
    if !run.converged {
        // one jittered retry from a widened start
        let mut z1 = z0.clone();
        for (i, z) in z1.iter_mut().enumerate() {
            *z += 0.3 * (1.0 + z.abs()) * if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let retry = bfgs_minimize(&neg_ll_grad, &neg_ll, &z1);
        if retry.converged || retry.f < run.f {
            run = retry;
        }
    }
    if !run.converged {
        return Err(Error::numeric(format!(
            "{} MLE did not converge",
            kind.name()
        )));
    }
    let nu = transform.to_natural(run.z.as_slice());
    let loglik = -run.f;
    if loglik <= LOG_DENSITY_FLOOR / 2.0 {
        return Err(Error::numeric(format!(
            "{} likelihood degenerate at the optimum",
            kind.name()
        )));
    }
    let info = observed_information(&|p| wind_loglik(kind, p, v_data), &nu);
    let (cov, _) = floored_inverse(&info);
    Ok((WindDistParams::new(kind, nu)?, loglik, cov))
}

/// Fit all six candidate families and keep the SIC maximizer. Families that
/// fail to fit are excluded with a diagnostic; it is an error for all six to
/// fail.
pub fn select_wind_family(v_data: &[f64]) -> Result<WindFit> {
    if v_data.len() < 30 {
        return Err(Error::invalid_argument(format!(
            "family selection needs at least 30 observations, got {}",
            v_data.len()
        )));
    }
    let n = v_data.len() as f64;
    let mut sic_table = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<(f64, WindDistParams, f64, DMatrix<f64>)> = None;
    for kind in WindDistKind::ALL {
        match fit_wind_family(kind, v_data) {
            Ok((params, loglik, cov)) => {
                let sic = loglik - 0.5 * (kind.n_params() as f64) * n.ln();
                sic_table.push((kind, sic));
                let better = best.as_ref().is_none_or(|(s, ..)| sic > *s);
                if better {
                    best = Some((sic, params, loglik, cov));
                }
            }
            Err(e) => failures.push((kind, e.to_string())),
        }
    }
    match best {
        Some((_, chosen, loglik, nu_cov)) => Ok(WindFit {
            chosen,
            loglik,
            nu_cov,
            sic_table,
            failures,
        }),
        None => Err(Error::numeric("all six wind-speed families failed to fit")),
    }
}

/// Fit the turbulence model `s | v ~ TN2(eta(v), delta(v))` with the same
/// reversible jump machinery as the load model, restricted to single-input
/// basis terms.
pub fn fit_turbulence(
    v_data: &[f64],
    s_data: &[f64],
    config: &ChainConfig,
) -> Result<TurbulenceFit> {
    if v_data.len() != s_data.len() {
        return Err(Error::invalid_argument(format!(
            "paired vectors must have equal length, got {} and {}",
            v_data.len(),
            s_data.len()
        )));
    }
    if s_data.iter().any(|&s| s <= 0.0) {
        return Err(Error::invalid_argument(
            "turbulence observations must be positive (the truncation bound is 0)",
        ));
    }
    // the regression response is s; the only covariate is v
    let rows: Vec<TenMinRecord> = v_data
        .iter()
        .zip(s_data)
        .map(|(&v, &s)| TenMinRecord { v, s: 0.0, y: s })
        .collect();
    let (draws, diagnostics) = run_chain(
        Likelihood::TruncNormal { lower: 0.0 },
        &rows,
        AllowedTypes::V_ONLY,
        AllowedTypes::V_ONLY,
        config,
        None,
    )?;
    Ok(TurbulenceFit { draws, diagnostics })
}

/// Location and scale of the turbulence distribution at wind speed `v`
/// under one posterior draw.
pub fn turbulence_at(draw: &PosteriorDraw, v: f64) -> (f64, f64) {
    let row_eta = design_row(&draw.phi_loc, v, 0.0);
    let row_delta = design_row(&draw.phi_scale, v, 0.0);
    let eta: f64 = draw.beta.iter().zip(&row_eta).map(|(a, b)| a * b).sum();
    let log_delta: f64 = draw.theta.iter().zip(&row_delta).map(|(a, b)| a * b).sum();
    (eta, log_delta.exp())
}

/// Draw `m_w * n_w` predictive wind pairs: per outer repetition one
/// parameter draw from the wind-family normal approximation and one
/// turbulence posterior draw, then `n_w` speeds with their sampled
/// turbulence values.
pub fn sample_wind_joint(
    wind: &WindFit,
    turb: &TurbulenceFit,
    m_w: usize,
    n_w: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(f64, f64)>> {
    if m_w == 0 || n_w == 0 {
        return Err(Error::invalid_argument("m_w and n_w must be positive"));
    }
    if turb.draws.is_empty() {
        return Err(Error::invalid_argument(
            "turbulence fit has no posterior draws",
        ));
    }
    let cov_sqrt = covariance_sqrt(&wind.nu_cov);
    let mut pairs = Vec::with_capacity(m_w * n_w);
    for rep in 0..m_w {
        // parameter draw, redrawn while invalid for the family
        let mut nu_draw = None;
        for _ in 0..100 {
            let candidate = WindDistParams {
                kind: wind.chosen.kind,
                nu: mvn_draw(&wind.chosen.nu, &cov_sqrt, rng),
            };
            if candidate.is_valid() {
                nu_draw = Some(candidate);
                break;
            }
        }
        let nu_draw = nu_draw
            .ok_or_else(|| Error::numeric("100 consecutive invalid wind-parameter draws"))?;
        let turb_draw = &turb.draws[rep % turb.draws.len()];
        for _ in 0..n_w {
            let v = wind_sample(&nu_draw, rng);
            let (eta, delta) = turbulence_at(turb_draw, v);
            let tn = TruncNormParams::new(eta, delta, 0.0)?;
            let s = trunc_norm_sample(&tn, rng);
            pairs.push((v, s));
        }
    }
    Ok(pairs)
}

/// Deterministic convenience wrapper seeding its own stream.
pub fn sample_wind_joint_seeded(
    wind: &WindFit,
    turb: &TurbulenceFit,
    m_w: usize,
    n_w: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = rng_from_seed(seed);
    sample_wind_joint(wind, turb, m_w, n_w, &mut rng)
}
