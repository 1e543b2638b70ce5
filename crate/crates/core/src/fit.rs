//! Conditional maximum-likelihood fitting of the spline regression models,
//! observed-information computation, SIC evaluation, and the
//! normal-approximation posterior draws used by the sampler.
//!
//! The same machinery fits both regressions used in the pipeline: the GEV
//! load model with a shared shape parameter, and the truncated-normal
//! turbulence model. Both have a location that is linear in a hinge basis
//! and a scale that is the exponential of a second hinge-basis expansion.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::{design_row, PhiState};
use crate::dist::LOG_DENSITY_FLOOR;
use crate::{Error, Result, TenMinRecord};

/// Box bound on the GEV shape during optimization; a standard regularity
/// region for the MLE.
pub const XI_MAX: f64 = 0.5;

const GUMBEL_BRANCH_EPS: f64 = 1e-8;
const HESSIAN_STEP: f64 = 1e-4;
const EIGENVALUE_FLOOR: f64 = 1e-8;
const MAX_BFGS_ITERS: usize = 300;
const N_RESTARTS: usize = 3;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Conditional density family of the regression response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Likelihood {
    /// GEV with spline location, exp-spline scale and one shared shape.
    Gev,
    /// Truncated normal over `(lower, inf)` with spline location and
    /// exp-spline scale; no extra parameter.
    TruncNormal { lower: f64 },
}

impl Likelihood {
    pub fn n_extra(&self) -> usize {
        match self {
            Likelihood::Gev => 1,
            Likelihood::TruncNormal { .. } => 0,
        }
    }
}

/// Result of one conditional MLE fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    /// Non-spline parameters: `[xi]` for the GEV model, empty for the
    /// truncated normal.
    pub extra: Vec<f64>,
    /// Inverse of the negative Hessian of the log-likelihood at the MLE,
    /// over the stacked `(beta, theta, extra)` vector.
    pub neg_hessian_inv: DMatrix<f64>,
    pub loglik: f64,
    pub sic: f64,
    pub converged: bool,
    /// Set when the observed information needed an eigenvalue floor before
    /// inversion (rank-deficient designs, duplicated columns).
    pub ridge_repaired: bool,
}

impl FitResult {
    /// Shared GEV shape; zero for models without one.
    pub fn xi(&self) -> f64 {
        self.extra.first().copied().unwrap_or(0.0)
    }

    /// Total number of fitted parameters.
    pub fn d_k(&self) -> usize {
        self.beta.len() + self.theta.len() + self.extra.len()
    }

    /// Stacked `(beta, theta, extra)` vector.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.d_k());
        p.extend_from_slice(&self.beta);
        p.extend_from_slice(&self.theta);
        p.extend_from_slice(&self.extra);
        p
    }
}

/// Dense row-major design matrix.
struct Design {
    data: Vec<f64>,
    k: usize,
}

impl Design {
    fn build(phi: &PhiState, records: &[TenMinRecord]) -> Design {
        let k = phi.k();
        let mut data = Vec::with_capacity(records.len() * k);
        for r in records {
            data.extend(design_row(phi, r.v, r.s));
        }
        Design { data, k }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One regression instance: likelihood, fixed designs, responses.
pub struct Regression {
    lik: Likelihood,
    design_loc: Design,
    design_scale: Design,
    y: Vec<f64>,
}

struct PointGrad {
    d_loc: f64,
    d_g: f64,
    d_extra: f64,
}

impl Regression {
    pub fn new(
        lik: Likelihood,
        phi_loc: &PhiState,
        phi_scale: &PhiState,
        records: &[TenMinRecord],
    ) -> Regression {
        Regression {
            lik,
            design_loc: Design::build(phi_loc, records),
            design_scale: Design::build(phi_scale, records),
            y: records.iter().map(|r| r.y).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k_loc(&self) -> usize {
        self.design_loc.k
    }

    pub fn k_scale(&self) -> usize {
        self.design_scale.k
    }

    pub fn dim(&self) -> usize {
        self.k_loc() + self.k_scale() + self.lik.n_extra()
    }

    fn split<'a>(&self, params: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let (beta, rest) = params.split_at(self.k_loc());
        let (theta, extra) = rest.split_at(self.k_scale());
        (beta, theta, extra)
    }

    fn point_log_pdf(&self, y: f64, loc: f64, g: f64, extra: &[f64]) -> f64 {
        let sigma = g.exp();
        match self.lik {
            Likelihood::Gev => {
                let xi = extra[0];
                let z = (y - loc) / sigma;
                if xi.abs() <= GUMBEL_BRANCH_EPS {
                    -z - (-z).exp() - g
                } else {
                    let u = xi * z;
                    if u <= -1.0 {
                        return f64::NEG_INFINITY;
                    }
                    let log_t = u.ln_1p();
                    -(1.0 + 1.0 / xi) * log_t - (-log_t / xi).exp() - g
                }
            }
            Likelihood::TruncNormal { lower } => {
                if y <= lower {
                    return f64::NEG_INFINITY;
                }
                let z = (y - loc) / sigma;
                let mut lp = -0.5 * z * z - LN_SQRT_2PI - g;
                if lower > f64::NEG_INFINITY {
                    let alpha = (lower - loc) / sigma;
                    lp -= crate::dist::std_normal_log_sf(alpha);
                }
                lp
            }
        }
    }

    fn point_log_pdf_grad(
        &self,
        y: f64,
        loc: f64,
        g: f64,
        extra: &[f64],
        out: &mut PointGrad,
    ) -> f64 {
        let sigma = g.exp();
        match self.lik {
            Likelihood::Gev => {
                let xi = extra[0];
                let z = (y - loc) / sigma;
                if xi.abs() <= GUMBEL_BRANCH_EPS {
                    let e = (-z).exp();
                    out.d_loc = (1.0 - e) / sigma;
                    out.d_g = z * (1.0 - e) - 1.0;
                    out.d_extra = 0.5 * z * z * (1.0 - e) - z;
                    -z - e - g
                } else {
                    let u = xi * z;
                    if u <= -1.0 {
                        out.d_loc = 0.0;
                        out.d_g = 0.0;
                        out.d_extra = 0.0;
                        return f64::NEG_INFINITY;
                    }
                    let t = 1.0 + u;
                    let log_t = u.ln_1p();
                    let w = (-log_t / xi).exp(); // t^{-1/xi}
                    let gain = ((1.0 + xi) - w) / t;
                    out.d_loc = gain / sigma;
                    out.d_g = z * gain - 1.0;
                    out.d_extra =
                        log_t / (xi * xi) * (1.0 - w) - (1.0 + 1.0 / xi) * z / t + w * z / (xi * t);
                    -(1.0 + 1.0 / xi) * log_t - w - g
                }
            }
            Likelihood::TruncNormal { lower } => {
                if y <= lower {
                    out.d_loc = 0.0;
                    out.d_g = 0.0;
                    out.d_extra = 0.0;
                    return f64::NEG_INFINITY;
                }
                let z = (y - loc) / sigma;
                let mut lp = -0.5 * z * z - LN_SQRT_2PI - g;
                let mut lam = 0.0;
                let mut alpha = 0.0;
                if lower > f64::NEG_INFINITY {
                    alpha = (lower - loc) / sigma;
                    lam = inverse_mills(alpha);
                    lp -= crate::dist::std_normal_log_sf(alpha);
                }
                out.d_loc = (z - lam) / sigma;
                out.d_g = z * z - 1.0 - alpha * lam;
                out.d_extra = 0.0;
                lp
            }
        }
    }

    /// Log-likelihood with per-point flooring of out-of-support values.
    pub fn loglik(&self, params: &[f64]) -> f64 {
        let (beta, theta, extra) = self.split(params);
        let mut total = 0.0;
        for i in 0..self.n() {
            let loc = dot(beta, self.design_loc.row(i));
            let g = dot(theta, self.design_scale.row(i));
            let lp = self.point_log_pdf(self.y[i], loc, g, extra);
            total += if lp.is_finite() {
                lp
            } else {
                LOG_DENSITY_FLOOR
            };
        }
        total
    }

    /// Log-likelihood and its gradient over `(beta, theta, extra)`.
    /// Floored points contribute zero gradient.
    pub fn loglik_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (beta, theta, extra) = self.split(params);
        let kl = self.k_loc();
        let ks = self.k_scale();
        let mut grad = vec![0.0; self.dim()];
        let mut total = 0.0;
        let mut pg = PointGrad {
            d_loc: 0.0,
            d_g: 0.0,
            d_extra: 0.0,
        };
        for i in 0..self.n() {
            let row_l = self.design_loc.row(i);
            let row_s = self.design_scale.row(i);
            let loc = dot(beta, row_l);
            let g = dot(theta, row_s);
            let lp = self.point_log_pdf_grad(self.y[i], loc, g, extra, &mut pg);
            if lp.is_finite() {
                total += lp;
                for (gk, xk) in grad[..kl].iter_mut().zip(row_l) {
                    *gk += pg.d_loc * xk;
                }
                for (gk, xk) in grad[kl..kl + ks].iter_mut().zip(row_s) {
                    *gk += pg.d_g * xk;
                }
                if self.lik.n_extra() == 1 {
                    grad[kl + ks] += pg.d_extra;
                }
            } else {
                total += LOG_DENSITY_FLOOR;
            }
        }
        (total, grad)
    }

    /// Central-difference gradient; the independent check on the analytic
    /// one and a fallback for debugging.
    pub fn loglik_grad_numeric(&self, params: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; params.len()];
        let mut p = params.to_vec();
        for j in 0..params.len() {
            let h = 1e-6 * (1.0 + params[j].abs());
            p[j] = params[j] + h;
            let up = self.loglik(&p);
            p[j] = params[j] - h;
            let dn = self.loglik(&p);
            p[j] = params[j];
            grad[j] = (up - dn) / (2.0 * h);
        }
        grad
    }

    /// Default optimizer start: moment anchors for the intercepts, zero for
    /// every other coefficient.
    fn default_init(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mean = self.y.iter().sum::<f64>() / n;
        let var = self.y.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let sd = var.sqrt().max(1e-6);
        let mut p = vec![0.0; self.dim()];
        match self.lik {
            Likelihood::Gev => {
                // Gumbel moment anchors: sd = pi sigma / sqrt(6), mean = mu + gamma sigma
                let sigma0 = sd * 6.0f64.sqrt() / std::f64::consts::PI;
                p[0] = mean - 0.577_215_664_901_532_9 * sigma0;
                p[self.k_loc()] = sigma0.ln();
                p[self.dim() - 1] = xi_to_z(0.05);
            }
            Likelihood::TruncNormal { .. } => {
                p[0] = mean;
                p[self.k_loc()] = sd.ln();
            }
        }
        p
    }

    fn to_internal(&self, params: &[f64]) -> Vec<f64> {
        let mut z = params.to_vec();
        if self.lik.n_extra() == 1 {
            let last = z.len() - 1;
            z[last] = xi_to_z(params[last]);
        }
        z
    }

    fn to_params(&self, z: &[f64]) -> Vec<f64> {
        let mut p = z.to_vec();
        if self.lik.n_extra() == 1 {
            let last = p.len() - 1;
            p[last] = z_to_xi(z[last]);
        }
        p
    }

    fn internal_neg_loglik_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let p = self.to_params(z);
        let (ll, mut grad) = self.loglik_grad(&p);
        if self.lik.n_extra() == 1 {
            let last = grad.len() - 1;
            let th = z[last].tanh();
            grad[last] *= XI_MAX * (1.0 - th * th);
        }
        for g in grad.iter_mut() {
            *g = -*g;
        }
        (-ll, grad)
    }

    fn internal_neg_loglik(&self, z: &[f64]) -> f64 {
        -self.loglik(&self.to_params(z))
    }
}

/// Hazard of the standard normal (inverse Mills ratio), stable in both
/// tails.
fn inverse_mills(alpha: f64) -> f64 {
    if alpha > 35.0 {
        // asymptotic expansion; erfc underflows past here
        return alpha + 1.0 / alpha;
    }
    let phi = (-0.5 * alpha * alpha).exp() / (2.0 * std::f64::consts::PI).sqrt();
    phi / crate::dist::std_normal_sf(alpha)
}

/// Shape transform keeping the optimizer inside the box |xi| < XI_MAX.
fn xi_to_z(xi: f64) -> f64 {
    let r = (xi / XI_MAX).clamp(-0.999_999, 0.999_999);
    0.5 * ((1.0 + r) / (1.0 - r)).ln()
}

fn z_to_xi(z: f64) -> f64 {
    XI_MAX * z.tanh()
}

/// Spline GEV regression log-likelihood: the nonhomogeneous model with
/// location `beta . row_mu(x)`, scale `exp(theta . row_sigma(x))` and a
/// shared shape. Support violations contribute the sentinel floor.
pub fn gev_regression_loglik(
    beta: &[f64],
    theta: &[f64],
    xi: f64,
    phi_mu: &PhiState,
    phi_sigma: &PhiState,
    data: &[TenMinRecord],
) -> Result<f64> {
    if beta.len() != phi_mu.k() || theta.len() != phi_sigma.k() {
        return Err(Error::invalid_argument(format!(
            "coefficient lengths ({}, {}) do not match basis counts ({}, {})",
            beta.len(),
            theta.len(),
            phi_mu.k(),
            phi_sigma.k()
        )));
    }
    let reg = Regression::new(Likelihood::Gev, phi_mu, phi_sigma, data);
    let mut params = Vec::with_capacity(reg.dim());
    params.extend_from_slice(beta);
    params.extend_from_slice(theta);
    params.push(xi);
    Ok(reg.loglik(&params))
}

pub(crate) struct Bfgs {
    pub(crate) f: f64,
    pub(crate) z: DVector<f64>,
    pub(crate) converged: bool,
}

/// Objective returning the value and its gradient.
pub(crate) type ValueGrad<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a;

pub(crate) fn bfgs_minimize(
    value_grad: &ValueGrad,
    value: &dyn Fn(&[f64]) -> f64,
    z0: &[f64],
) -> Bfgs {
    let dim = z0.len();
    let mut z = DVector::from_column_slice(z0);
    let (mut f, g) = value_grad(z.as_slice());
    let mut grad = DVector::from_vec(g);
    let mut h_inv = DMatrix::<f64>::identity(dim, dim);
    let mut converged = false;
    let mut stall = 0usize;

    for _ in 0..MAX_BFGS_ITERS {
        let gnorm = grad.amax();
        if gnorm <= 1e-6 * (1.0 + f.abs()) {
            converged = true;
            break;
        }
        let mut dir = -(&h_inv * &grad);
        if dir.dot(&grad) >= 0.0 {
            h_inv = DMatrix::identity(dim, dim);
            dir = -grad.clone();
        }

        // backtracking Armijo line search
        let slope = dir.dot(&grad);
        let mut step = 1.0f64;
        let mut accepted = false;
        let mut z_new = z.clone();
        for _ in 0..60 {
            z_new = &z + &dir * step;
            let f_new = value(z_new.as_slice());
            if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }

        let (f_chk, g_new_vec) = value_grad(z_new.as_slice());
        let grad_new = DVector::from_vec(g_new_vec);
        let s = &z_new - &z;
        let yk = &grad_new - &grad;
        let sy = s.dot(&yk);
        if sy > 1e-12 * s.norm() * yk.norm() {
            // standard inverse BFGS update
            let rho = 1.0 / sy;
            let hy = &h_inv * &yk;
            let yhy = yk.dot(&hy);
            let s_row = s.transpose();
            h_inv = &h_inv - (&hy * &s_row + &s * hy.transpose()) * rho
                + &s * &s_row * (rho * rho * (yhy + sy));
        }

        if (f - f_chk).abs() <= 1e-12 * (1.0 + f.abs()) {
            stall += 1;
        } else {
            stall = 0;
        }
        z = z_new;
        f = f_chk;
        grad = grad_new;
        if stall >= 3 {
            converged = grad.amax() <= 1e-4 * (1.0 + f.abs());
            break;
        }
    }
    if !converged {
        converged = grad.amax() <= 1e-4 * (1.0 + f.abs());
    }
    Bfgs { f, z, converged }
}

/// Observed information (negative Hessian of a log-likelihood) by central
/// finite differences in the original parameterization, symmetrized.
pub(crate) fn observed_information(loglik: &dyn Fn(&[f64]) -> f64, params: &[f64]) -> DMatrix<f64> {
    let d = params.len();
    let f0 = loglik(params);
    let steps: Vec<f64> = params
        .iter()
        .map(|p| HESSIAN_STEP * (1.0 + p.abs()))
        .collect();
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut p = params.to_vec();
    for i in 0..d {
        p[i] = params[i] + steps[i];
        let fp = loglik(&p);
        p[i] = params[i] - steps[i];
        let fm = loglik(&p);
        p[i] = params[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
        for j in (i + 1)..d {
            p[i] = params[i] + steps[i];
            p[j] = params[j] + steps[j];
            let fpp = loglik(&p);
            p[j] = params[j] - steps[j];
            let fpm = loglik(&p);
            p[i] = params[i] - steps[i];
            let fmm = loglik(&p);
            p[j] = params[j] + steps[j];
            let fmp = loglik(&p);
            p[i] = params[i];
            p[j] = params[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    -h
}

/// Floor the eigenvalues of a symmetric information matrix at `floor` and
/// invert. Returns the inverse and whether any eigenvalue needed the floor.
pub(crate) fn floored_inverse_at(info: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, bool) {
    let sym = (info + info.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut repaired = false;
    let d = eig.eigenvalues.len();
    let mut inv_vals = DVector::zeros(d);
    for i in 0..d {
        let mut v = eig.eigenvalues[i];
        if !v.is_finite() || v < floor {
            v = floor;
            repaired = true;
        }
        inv_vals[i] = 1.0 / v;
    }
    let q = &eig.eigenvectors;
    (
        q * DMatrix::from_diagonal(&inv_vals) * q.transpose(),
        repaired,
    )
}

pub(crate) fn floored_inverse(info: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    floored_inverse_at(info, EIGENVALUE_FLOOR)
}

/// Maximize the regression likelihood over `(beta, theta, extra)` given the
/// knot configurations. Quasi-Newton with analytic gradients, moment-anchor
/// initialization plus jittered restarts, finite-difference observed
/// information at the optimum.
pub fn fit_mle(
    lik: Likelihood,
    phi_loc: &PhiState,
    phi_scale: &PhiState,
    data: &[TenMinRecord],
    init: Option<&[f64]>,
) -> Result<FitResult> {
    phi_loc.validate()?;
    phi_scale.validate()?;
    let reg = Regression::new(lik, phi_loc, phi_scale, data);
    let d = reg.dim();
    if reg.n() < d + 2 {
        return Err(Error::invalid_argument(format!(
            "need at least d_k + 2 = {} observations, got {}",
            d + 2,
            reg.n()
        )));
    }
    if let Some(p) = init {
        if p.len() != d {
            return Err(Error::invalid_argument(format!(
                "init vector has length {}, expected {}",
                p.len(),
                d
            )));
        }
    }

    let anchor = reg.default_init();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(p) = init {
        starts.push(reg.to_internal(p));
    }
    starts.push(reg.to_internal(&anchor));

    // deterministic jitter stream for restarts
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(0xF17_0001);
    let mut best: Option<Bfgs> = None;
    let mut tried = 0usize;
    let mut queue: Vec<Vec<f64>> = starts;
    let value_grad = |z: &[f64]| reg.internal_neg_loglik_grad(z);
    let value = |z: &[f64]| reg.internal_neg_loglik(z);
    while let Some(z0) = queue.pop() {
        let run = bfgs_minimize(&value_grad, &value, &z0);
        let better = match &best {
            None => true,
            Some(b) => {
                (run.converged && !b.converged) || (run.converged == b.converged && run.f < b.f)
            }
        };
        if better {
            best = Some(run);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
        tried += 1;
        if tried <= N_RESTARTS {
            let base = reg.to_internal(&anchor);
            let jittered: Vec<f64> = base
                .iter()
                .map(|&z| {
                    let n: f64 = StandardNormal.sample(&mut jitter_rng);
                    z + 0.2 * (1.0 + z.abs()) * n
                })
                .collect();
            queue.push(jittered);
        }
    }
    let best = best.expect("at least one optimizer start");

    let params = reg.to_params(best.z.as_slice());
    let loglik = -best.f;
    let n = reg.n() as f64;
    let sic = loglik - 0.5 * (d as f64) * n.ln();
    let info = observed_information(&|p| reg.loglik(p), &params);
    // rank-deficient designs (dead or duplicated basis columns) leave
    // directions with zero observed information; floor them at one typical
    // observation's worth so the normal-approximation draws stay on the
    // scale of the data rather than exploding along the null space
    let median_diag = {
        let mut diag: Vec<f64> = (0..d).map(|i| info[(i, i)].abs()).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        diag[d / 2]
    };
    let floor = (median_diag / n).max(EIGENVALUE_FLOOR);
    let (neg_hessian_inv, ridge_repaired) = floored_inverse_at(&info, floor);

    let converged = best.converged && loglik.is_finite() && loglik > LOG_DENSITY_FLOOR / 2.0;
    let (beta, theta, extra) = {
        let (b, t, e) = reg.split(&params);
        (b.to_vec(), t.to_vec(), e.to_vec())
    };
    Ok(FitResult {
        beta,
        theta,
        extra,
        neg_hessian_inv,
        loglik,
        sic,
        converged,
        ridge_repaired,
    })
}

/// Square root of a covariance matrix for normal-approximation draws:
/// Cholesky when possible, eigen square root for floored near-singular
/// matrices.
pub(crate) fn covariance_sqrt(cov: &DMatrix<f64>) -> DMatrix<f64> {
    match Cholesky::new(cov.clone()) {
        Some(c) => c.l().clone_owned(),
        None => {
            let d = cov.nrows();
            let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
            let mut sqrt_vals = DVector::zeros(d);
            for i in 0..d {
                sqrt_vals[i] = eig.eigenvalues[i].max(0.0).sqrt();
            }
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
        }
    }
}

/// One multivariate-normal draw given a precomputed covariance square root.
pub(crate) fn mvn_draw<R: Rng + ?Sized>(
    mean: &[f64],
    cov_sqrt: &DMatrix<f64>,
    rng: &mut R,
) -> Vec<f64> {
    let d = mean.len();
    let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
    let draw = DVector::from_column_slice(mean) + cov_sqrt * z;
    draw.as_slice().to_vec()
}

/// One draw from the multivariate normal centered at the MLE with the
/// inverse observed information as covariance.
pub fn draw_params_normal_approx<R: Rng + ?Sized>(
    fit: &FitResult,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !fit.converged {
        return Err(Error::InvalidState(
            "posterior draws require a converged fit".into(),
        ));
    }
    let chol = covariance_sqrt(&fit.neg_hessian_inv);
    Ok(mvn_draw(&fit.params(), &chol, rng))
}

/// Split a stacked draw back into `(beta, theta, extra)` for the given
/// configuration sizes.
pub fn split_draw(draw: &[f64], k_loc: usize, k_scale: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let beta = draw[..k_loc].to_vec();
    let theta = draw[k_loc..k_loc + k_scale].to_vec();
    let extra = draw[k_loc + k_scale..].to_vec();
    (beta, theta, extra)
}
