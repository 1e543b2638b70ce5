//! Property tests for the distribution and basis invariants.

use extload_core::basis::{design_row, eval_basis, AllowedTypes, BasisTerm, PhiState};
use extload_core::dist::{
    gev_cdf, gev_log_pdf, gev_quantile, target_exceedance, trunc_norm_log_pdf, wind_log_pdf,
    GevParams, TruncNormParams, WindDistKind, WindDistParams,
};
use extload_core::scoring::gpl_score;
use proptest::prelude::*;

proptest! {
    #[test]
    fn gev_quantile_cdf_inverse(
        mu in -10.0..10.0f64,
        sigma in 0.01..5.0f64,
        xi in -0.45..0.45f64,
        pe in 1e-7..0.5f64,
    ) {
        let p = GevParams::new(mu, sigma, xi).unwrap();
        let q = gev_quantile(pe, &p).unwrap();
        prop_assert!((gev_cdf(q, &p) - (1.0 - pe)).abs() < 1e-10);
    }

    #[test]
    fn gev_density_nonpositive_log_only_in_support(
        y in -20.0..20.0f64,
        sigma in 0.05..5.0f64,
        xi in -0.45..0.45f64,
    ) {
        let p = GevParams::new(0.0, sigma, xi).unwrap();
        let lp = gev_log_pdf(y, &p).unwrap();
        let in_support = xi.abs() <= 1e-8 || 1.0 + xi * (y - p.mu) / p.sigma > 0.0;
        if in_support {
            prop_assert!(lp.is_finite());
        } else {
            prop_assert!(lp == f64::NEG_INFINITY);
        }
    }

    #[test]
    fn exceedance_monotone(t1 in 0.1..500.0f64, t2 in 0.1..500.0f64) {
        prop_assume!(t1 < t2);
        prop_assert!(target_exceedance(t1).unwrap() > target_exceedance(t2).unwrap());
    }

    #[test]
    fn hinge_nonnegative_and_clipped(
        sign in prop::sample::select(vec![-1i8, 1i8]),
        knot in -5.0..30.0f64,
        v in -5.0..35.0f64,
        s in 0.0..4.0f64,
    ) {
        let term = BasisTerm::HingeV { sign, knot };
        let val = eval_basis(&term, v, s);
        prop_assert!(val >= 0.0);
        // exactly zero on the clipped side
        if (f64::from(sign) * (v - knot)) < 0.0 {
            prop_assert_eq!(val, 0.0);
        }
    }

    #[test]
    fn design_row_shape(v in 0.0..30.0f64, s in 0.0..4.0f64, n_terms in 0usize..6) {
        let phi = PhiState {
            terms: (0..n_terms)
                .map(|i| BasisTerm::HingeV { sign: 1, knot: 2.0 + i as f64 })
                .collect(),
            allowed_types: AllowedTypes::ALL,
            k_max: 40,
        };
        let row = design_row(&phi, v, s);
        prop_assert_eq!(row.len(), phi.k());
        prop_assert_eq!(row[0], 1.0);
    }

    #[test]
    fn gpl_nonnegative_and_zero_at_truth(
        l in 1e-3..50.0f64,
        y in 1e-3..50.0f64,
        tau in 0.01..0.99f64,
        b in prop::sample::select(vec![0.0f64, 1.0, 2.0]),
    ) {
        prop_assert!(gpl_score(l, y, tau, b).unwrap() >= 0.0);
        prop_assert_eq!(gpl_score(y, y, tau, b).unwrap(), 0.0);
    }

    #[test]
    fn truncated_normal_log_density_respects_bound(
        s in -2.0..6.0f64,
        eta in -1.0..3.0f64,
        delta in 0.05..2.0f64,
    ) {
        let p = TruncNormParams::new(eta, delta, 0.0).unwrap();
        let lp = trunc_norm_log_pdf(s, &p);
        if s <= 0.0 {
            prop_assert!(lp == f64::NEG_INFINITY);
        } else {
            prop_assert!(lp.is_finite());
            // renormalization never shrinks the density below the plain
            // normal's
            let plain = TruncNormParams::new(eta, delta, f64::NEG_INFINITY).unwrap();
            prop_assert!(lp >= trunc_norm_log_pdf(s, &plain) - 1e-12);
        }
    }

    #[test]
    fn shifted_families_vanish_below_shift(
        shift in -2.0..6.0f64,
        offset in -4.0..-1e-6f64,
    ) {
        for kind in [WindDistKind::W3, WindDistKind::Ln3, WindDistKind::G3, WindDistKind::Ig3] {
            let nu = match kind {
                WindDistKind::Ln3 => vec![1.0, 0.5, shift],
                WindDistKind::Ig3 => vec![5.0, 10.0, shift],
                _ => vec![2.0, 5.0, shift],
            };
            let p = WindDistParams::new(kind, nu).unwrap();
            prop_assert!(wind_log_pdf(shift + offset, &p) == f64::NEG_INFINITY);
        }
    }
}
