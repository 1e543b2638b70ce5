//! Reversible jump sampler over the pair of knot configurations, with the
//! SIC difference standing in for the marginal likelihood ratio in the
//! acceptance probability. Each iteration updates the location
//! configuration, then the scale configuration, refitting the conditional
//! MLE for every proposal; after burn-in each iteration emits one
//! coefficient draw from the normal approximation at the retained fit.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{propose, AllowedTypes, MoveKind, PhiState};
use crate::fit::{draw_params_normal_approx, fit_mle, split_draw, FitResult, Likelihood};
use crate::{rng_from_seed, Error, Result, TenMinRecord};

/// Chain settings. The proposal probabilities are for BIRTH, DEATH and MOVE
/// in that order and must sum to one.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub burn_in: usize,
    /// Number of post-burn-in parameter draws (one per iteration).
    pub n_draws: usize,
    pub proposal_probs: [f64; 3],
    pub seed: u64,
    pub k_max: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            burn_in: 200,
            n_draws: 500,
            proposal_probs: [1.0 / 3.0; 3],
            seed: 0,
            k_max: 40,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.proposal_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.proposal_probs.iter().any(|&p| p < 0.0) {
            return Err(Error::invalid_argument(format!(
                "proposal probabilities must be nonnegative and sum to 1, got {:?}",
                self.proposal_probs
            )));
        }
        if self.k_max < 2 {
            return Err(Error::invalid_argument(
                "k_max must be at least 2 so that dimension moves exist",
            ));
        }
        Ok(())
    }
}

/// Which of the two dimension-varying states a step updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Loc,
    Scale,
}

/// Current position of the chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub phi_loc: PhiState,
    pub phi_scale: PhiState,
    pub fit: FitResult,
    pub iteration: usize,
}

/// One retained posterior draw: the knot configurations it was drawn under
/// and the stacked coefficient draw split into its parts.
#[derive(Debug, Clone)]
pub struct PosteriorDraw {
    pub phi_loc: PhiState,
    pub phi_scale: PhiState,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub extra: Vec<f64>,
}

impl PosteriorDraw {
    pub fn xi(&self) -> f64 {
        self.extra.first().copied().unwrap_or(0.0)
    }
}

/// Chain summary counters.
#[derive(Debug, Clone, Default)]
pub struct ChainDiagnostics {
    pub proposals: usize,
    pub accepted: usize,
    pub failed_fits: usize,
}

/// Effective move-type probabilities at basis count `k`: at the lower bound
/// the DEATH and MOVE mass is redistributed to BIRTH, at the upper bound the
/// BIRTH mass goes to DEATH.
pub fn move_probs(k: usize, k_max: usize, base: [f64; 3]) -> [f64; 3] {
    let [b, r, m] = base;
    if k <= 1 {
        [1.0, 0.0, 0.0]
    } else if k >= k_max {
        [0.0, b + r, m]
    } else {
        [b, r, m]
    }
}

/// Proposal-probability ratio R entering the acceptance probability. Equal
/// to one except when a dimension move touches the bounds of `k`.
pub fn boundary_ratio(action: MoveKind, k: usize, k_max: usize, base: [f64; 3]) -> f64 {
    match action {
        MoveKind::Birth => {
            let p_death_next = move_probs(k + 1, k_max, base)[1];
            let p_birth_here = move_probs(k, k_max, base)[0];
            p_death_next / p_birth_here
        }
        MoveKind::Death => {
            let p_birth_next = move_probs(k - 1, k_max, base)[0];
            let p_death_here = move_probs(k, k_max, base)[1];
            p_birth_next / p_death_here
        }
        MoveKind::Move => 1.0,
    }
}

fn choose_move<R: Rng + ?Sized>(probs: [f64; 3], rng: &mut R) -> MoveKind {
    // strict comparisons so zero-probability moves are never selected even
    // when the uniform draw is exactly 0
    let u: f64 = rng.gen();
    if u < probs[0] {
        MoveKind::Birth
    } else if u < probs[0] + probs[1] {
        MoveKind::Death
    } else {
        MoveKind::Move
    }
}

/// Warm start for a proposal fit: carry the current coefficients over and
/// give any newborn term a zero coefficient.
fn warm_init(
    state: &ChainState,
    which: Component,
    action: MoveKind,
    removed: Option<usize>,
    proposal_k: usize,
) -> Vec<f64> {
    let (cur, other_first): (&[f64], bool) = match which {
        Component::Loc => (&state.fit.beta, true),
        Component::Scale => (&state.fit.theta, false),
    };
    let mut coef = cur.to_vec();
    match action {
        MoveKind::Birth => coef.push(0.0),
        MoveKind::Death => {
            coef.remove(removed.expect("death index") + 1);
        }
        MoveKind::Move => {
            coef.remove(removed.expect("move index") + 1);
            coef.push(0.0);
        }
    }
    debug_assert_eq!(coef.len(), proposal_k);
    let mut init = Vec::with_capacity(state.fit.d_k() + 1);
    if other_first {
        init.extend_from_slice(&coef);
        init.extend_from_slice(&state.fit.theta);
    } else {
        init.extend_from_slice(&state.fit.beta);
        init.extend_from_slice(&coef);
    }
    init.extend_from_slice(&state.fit.extra);
    init
}

/// Outcome of one sub-step, for traces and tests.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub action: MoveKind,
    pub accepted: bool,
    pub fit_failed: bool,
}

/// One reversible jump update of the chosen component. Rejected or
/// non-converging proposals leave the state unchanged.
pub fn rjs_step(
    state: &mut ChainState,
    which: Component,
    lik: Likelihood,
    data: &[TenMinRecord],
    config: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<StepInfo> {
    let phi_cur = match which {
        Component::Loc => &state.phi_loc,
        Component::Scale => &state.phi_scale,
    };
    let k = phi_cur.k();
    let probs = move_probs(k, config.k_max, config.proposal_probs);
    let action = choose_move(probs, rng);

    // build the proposal, remembering which term a DEATH/MOVE removed so the
    // warm start can drop its coefficient
    let (phi_prop, removed) = match action {
        MoveKind::Birth => (propose(phi_cur, MoveKind::Birth, data, rng)?, None),
        MoveKind::Death => {
            let idx = rng.gen_range(0..phi_cur.terms.len());
            let mut next = phi_cur.clone();
            next.terms.remove(idx);
            (next, Some(idx))
        }
        MoveKind::Move => {
            let idx = rng.gen_range(0..phi_cur.terms.len());
            let mut next = phi_cur.clone();
            next.terms.remove(idx);
            let reborn = propose(&next, MoveKind::Birth, data, rng)?;
            (reborn, Some(idx))
        }
    };

    let init = warm_init(state, which, action, removed, phi_prop.k());
    let (phi_loc_prop, phi_scale_prop) = match which {
        Component::Loc => (&phi_prop, &state.phi_scale),
        Component::Scale => (&state.phi_loc, &phi_prop),
    };
    let fit_prop = fit_mle(lik, phi_loc_prop, phi_scale_prop, data, Some(&init))?;

    let u: f64 = rng.gen();
    if !fit_prop.converged {
        return Ok(StepInfo {
            action,
            accepted: false,
            fit_failed: true,
        });
    }
    let ratio = boundary_ratio(action, k, config.k_max, config.proposal_probs);
    let alpha = ((fit_prop.sic - state.fit.sic).exp() * ratio).min(1.0);
    let accepted = u < alpha;
    if accepted {
        match which {
            Component::Loc => state.phi_loc = phi_prop,
            Component::Scale => state.phi_scale = phi_prop,
        }
        state.fit = fit_prop;
    }
    Ok(StepInfo {
        action,
        accepted,
        fit_failed: false,
    })
}

/// Run the full chain: alternate location and scale updates each iteration
/// and emit one coefficient draw per post-burn-in iteration. An optional
/// trace sink receives one delimited line per iteration.
pub fn run_chain(
    lik: Likelihood,
    data: &[TenMinRecord],
    allowed_loc: AllowedTypes,
    allowed_scale: AllowedTypes,
    config: &ChainConfig,
    mut trace: Option<&mut dyn Write>,
) -> Result<(Vec<PosteriorDraw>, ChainDiagnostics)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid_argument("chain needs observations"));
    }
    let mut rng = rng_from_seed(config.seed);
    let phi_loc = PhiState::intercept_only(allowed_loc, config.k_max);
    let phi_scale = PhiState::intercept_only(allowed_scale, config.k_max);
    let fit = fit_mle(lik, &phi_loc, &phi_scale, data, None)?;
    if !fit.converged {
        return Err(Error::numeric(
            "initial intercept-only fit did not converge",
        ));
    }
    let mut state = ChainState {
        phi_loc,
        phi_scale,
        fit,
        iteration: 0,
    };

    let mut draws = Vec::with_capacity(config.n_draws);
    let mut diag = ChainDiagnostics::default();
    let mut consecutive_failures = 0usize;
    if let Some(t) = trace.as_deref_mut() {
        writeln!(
            t,
            "iteration,k_loc,k_scale,loglik,sic,accepted_loc,accepted_scale"
        )?;
    }

    let total = config.burn_in + config.n_draws;
    for t in 0..total {
        state.iteration = t;
        let mut accepted_pair = [false, false];
        for (slot, which) in [(0usize, Component::Loc), (1usize, Component::Scale)] {
            let info = rjs_step(&mut state, which, lik, data, config, &mut rng)?;
            diag.proposals += 1;
            if info.accepted {
                diag.accepted += 1;
            }
            if info.fit_failed {
                diag.failed_fits += 1;
                consecutive_failures += 1;
                if consecutive_failures > 50 {
                    return Err(Error::ChainStall(format!(
                        "{consecutive_failures} consecutive MLE failures at iteration {t}"
                    )));
                }
            } else {
                consecutive_failures = 0;
            }
            accepted_pair[slot] = info.accepted;
        }

        if let Some(tr) = trace.as_deref_mut() {
            writeln!(
                tr,
                "{},{},{},{},{},{},{}",
                t,
                state.phi_loc.k(),
                state.phi_scale.k(),
                state.fit.loglik,
                state.fit.sic,
                accepted_pair[0] as u8,
                accepted_pair[1] as u8
            )?;
        }

        if t >= config.burn_in {
            let draw = draw_params_normal_approx(&state.fit, &mut rng)?;
            let (beta, theta, extra) = split_draw(&draw, state.phi_loc.k(), state.phi_scale.k());
            draws.push(PosteriorDraw {
                phi_loc: state.phi_loc.clone(),
                phi_scale: state.phi_scale.clone(),
                beta,
                theta,
                extra,
            });
        }
    }
    Ok((draws, diag))
}
