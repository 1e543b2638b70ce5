//! Adaptive hinge-spline basis machinery: basis terms with data-located
//! knots, variable-dimension knot configurations, their uniform priors, and
//! the BIRTH/DEATH/MOVE proposals that the reversible jump sampler drives.

use rand::Rng;

use crate::{Error, Result, TenMinRecord};

/// One hinge basis function. The two single-covariate kinds are hinges in
/// the average wind speed `v` or its standard deviation `s`; the interaction
/// kind multiplies one hinge in each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisTerm {
    /// `[h (v - t)]_+`
    HingeV { sign: i8, knot: f64 },
    /// `[h (s - t)]_+`
    HingeS { sign: i8, knot: f64 },
    /// `[h_v (v - t_v)]_+ [h_s (s - t_s)]_+`
    Interaction {
        sign_v: i8,
        knot_v: f64,
        sign_s: i8,
        knot_s: f64,
    },
}

impl BasisTerm {
    /// Integer type code: 1 for a `v` hinge, 2 for an `s` hinge, 3 for the
    /// interaction.
    pub fn type_code(&self) -> u8 {
        match self {
            BasisTerm::HingeV { .. } => 1,
            BasisTerm::HingeS { .. } => 2,
            BasisTerm::Interaction { .. } => 3,
        }
    }
}

fn hinge(sign: i8, x: f64, knot: f64) -> f64 {
    (f64::from(sign) * (x - knot)).max(0.0)
}

/// Evaluate one basis term at covariates `(v, s)`.
pub fn eval_basis(term: &BasisTerm, v: f64, s: f64) -> f64 {
    match *term {
        BasisTerm::HingeV { sign, knot } => hinge(sign, v, knot),
        BasisTerm::HingeS { sign, knot } => hinge(sign, s, knot),
        BasisTerm::Interaction {
            sign_v,
            knot_v,
            sign_s,
            knot_s,
        } => hinge(sign_v, v, knot_v) * hinge(sign_s, s, knot_s),
    }
}

/// Which term kinds a model function may use. The location model uses all
/// three when interactions are allowed, `{1, 2}` otherwise; the scale model
/// uses `{1, 2}` or `{1}`; single-input models (turbulence) use `{1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllowedTypes(u8);

impl AllowedTypes {
    pub const V_ONLY: AllowedTypes = AllowedTypes(0b001);
    pub const V_S: AllowedTypes = AllowedTypes(0b011);
    pub const ALL: AllowedTypes = AllowedTypes(0b111);

    pub fn from_codes(codes: &[u8]) -> Result<Self> {
        let mut bits = 0u8;
        for &c in codes {
            if !(1..=3).contains(&c) {
                return Err(Error::invalid_argument(format!(
                    "basis type codes are 1, 2 or 3, got {c}"
                )));
            }
            bits |= 1 << (c - 1);
        }
        if bits == 0 {
            return Err(Error::invalid_argument("at least one basis type required"));
        }
        Ok(AllowedTypes(bits))
    }

    pub fn contains(&self, code: u8) -> bool {
        (1..=3).contains(&code) && self.0 & (1 << (code - 1)) != 0
    }

    pub fn count(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn codes(&self) -> Vec<u8> {
        (1..=3).filter(|&c| self.contains(c)).collect()
    }
}

/// Variable-dimension knot configuration of one model function: the ordered
/// non-intercept terms (the intercept is implicit), the admissible term
/// kinds, and the cap on the basis count.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiState {
    pub terms: Vec<BasisTerm>,
    pub allowed_types: AllowedTypes,
    pub k_max: usize,
}

impl PhiState {
    /// Intercept-only configuration (the chain's initial state).
    pub fn intercept_only(allowed_types: AllowedTypes, k_max: usize) -> Self {
        PhiState {
            terms: Vec::new(),
            allowed_types,
            k_max,
        }
    }

    /// Number of basis functions including the intercept.
    pub fn k(&self) -> usize {
        self.terms.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::InvalidState("k_max must be at least 1".into()));
        }
        if self.k() > self.k_max {
            return Err(Error::InvalidState(format!(
                "K = {} exceeds k_max = {}",
                self.k(),
                self.k_max
            )));
        }
        for t in &self.terms {
            if !self.allowed_types.contains(t.type_code()) {
                return Err(Error::InvalidState(format!(
                    "term type {} not in the allowed set",
                    t.type_code()
                )));
            }
        }
        Ok(())
    }
}

/// Design row at `(v, s)`: intercept 1 followed by the term evaluations.
/// The model function value is the dot product with the coefficient vector.
pub fn design_row(phi: &PhiState, v: f64, s: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(phi.k());
    row.push(1.0);
    row.extend(phi.terms.iter().map(|t| eval_basis(t, v, s)));
    row
}

/// Log prior mass of a knot configuration: uniform 1/n on the basis count,
/// uniform over the allowed term kinds, 1/2 per sign, and uniform 1/n per
/// knot over the observed covariate values.
pub fn log_prior_phi(phi: &PhiState, n_obs: usize) -> Result<f64> {
    if n_obs < 1 {
        return Err(Error::invalid_argument(
            "prior needs at least one observation",
        ));
    }
    phi.validate()?;
    let ln_n = (n_obs as f64).ln();
    let ln_types = (phi.allowed_types.count() as f64).ln();
    let ln_2 = std::f64::consts::LN_2;
    let mut lp = -ln_n; // p(K) = 1/n
    for term in &phi.terms {
        lp -= ln_types;
        match term.type_code() {
            1 | 2 => lp -= ln_2 + ln_n,
            _ => lp -= 2.0 * (ln_2 + ln_n),
        }
    }
    Ok(lp)
}

/// Proposal moves over the knot configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Birth,
    Death,
    Move,
}

/// Draw a new term uniformly: kind from the allowed set, signs uniform on
/// {-1, +1}, knots uniform over the observed covariate values (`v` values
/// for a `v` hinge, `s` values for an `s` hinge).
fn draw_term<R: Rng + ?Sized>(
    allowed: AllowedTypes,
    data: &[TenMinRecord],
    rng: &mut R,
) -> BasisTerm {
    let codes = allowed.codes();
    let code = codes[rng.gen_range(0..codes.len())];
    let sign = |rng: &mut R| if rng.gen::<bool>() { 1i8 } else { -1i8 };
    let knot_v = |rng: &mut R| data[rng.gen_range(0..data.len())].v;
    let knot_s = |rng: &mut R| data[rng.gen_range(0..data.len())].s;
    match code {
        1 => BasisTerm::HingeV {
            sign: sign(rng),
            knot: knot_v(rng),
        },
        2 => BasisTerm::HingeS {
            sign: sign(rng),
            knot: knot_s(rng),
        },
        _ => BasisTerm::Interaction {
            sign_v: sign(rng),
            knot_v: knot_v(rng),
            sign_s: sign(rng),
            knot_s: knot_s(rng),
        },
    }
}

/// Build the proposed configuration for one move. BIRTH appends a uniformly
/// drawn term, DEATH removes a uniformly chosen one, and MOVE is a
/// DEATH-proposal followed by a BIRTH-proposal. DEATH and MOVE require
/// `K >= 2`; proposing them on an intercept-only state is a caller bug.
pub fn propose<R: Rng + ?Sized>(
    phi: &PhiState,
    action: MoveKind,
    data: &[TenMinRecord],
    rng: &mut R,
) -> Result<PhiState> {
    if data.is_empty() {
        return Err(Error::invalid_argument(
            "proposals need observed covariates",
        ));
    }
    let mut next = phi.clone();
    match action {
        MoveKind::Birth => {
            if phi.k() >= phi.k_max {
                return Err(Error::IllegalMove(format!(
                    "BIRTH at K = k_max = {}",
                    phi.k_max
                )));
            }
            next.terms.push(draw_term(phi.allowed_types, data, rng));
        }
        MoveKind::Death => {
            if phi.terms.is_empty() {
                return Err(Error::IllegalMove(
                    "DEATH on an intercept-only state".into(),
                ));
            }
            let idx = rng.gen_range(0..next.terms.len());
            next.terms.remove(idx);
        }
        MoveKind::Move => {
            if phi.terms.is_empty() {
                return Err(Error::IllegalMove("MOVE on an intercept-only state".into()));
            }
            let idx = rng.gen_range(0..next.terms.len());
            next.terms.remove(idx);
            next.terms.push(draw_term(phi.allowed_types, data, rng));
        }
    }
    Ok(next)
}
