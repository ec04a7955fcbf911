//! Property tests for the model-level invariants.

use jumpflow_core::model::{
    validate_growth, CirJumpParams, Coefficient, DriftProcess, InitialLaw, LevyParams, MarkLaw,
    ModelSpec, ValidateOptions,
};
use jumpflow_core::yamada::ModulusFamily;
use proptest::prelude::*;
use std::sync::Arc;

fn cir_jump() -> Arc<ModelSpec> {
    Arc::new(
        ModelSpec::builtin_cir_jump(CirJumpParams {
            sigma0: 0.5,
            beta: -1.0,
            drift: DriftProcess::constant(0.5),
            initial: InitialLaw::Constant { value: 1.0 },
            rate: 2.0,
            mark_law: MarkLaw::Exponential { mean: 0.5 },
            truncation: None,
            growth_k: None,
        })
        .unwrap(),
    )
}

fn levy() -> Arc<ModelSpec> {
    Arc::new(
        ModelSpec::builtin_levy_onesided(LevyParams {
            sigma: Coefficient::SqrtScaled(0.3),
            phi: Coefficient::custom(|x| 0.1 * x),
            beta: -1.0,
            drift: DriftProcess::constant(0.5),
            initial: InitialLaw::Constant { value: 1.0 },
            rate: 2.0,
            mark_law: MarkLaw::Exponential { mean: 1.0 },
            truncation: None,
            growth_k: None,
        })
        .unwrap(),
    )
}

proptest! {
    /// Truncation kills non-positive states exactly, for every mark.
    #[test]
    fn truncations_vanish_on_nonpositive_states(x in -1e6_f64..=0.0, p in 0.0_f64..1.0) {
        for spec in [cir_jump(), levy()] {
            let u = spec.measure().law().quantile(p);
            prop_assert_eq!(spec.sigma_trunc(x), 0.0);
            prop_assert_eq!(spec.g_trunc(x, u), 0.0);
            prop_assert_eq!(spec.compensator_trunc(x - 1e-12).unwrap(), 0.0);
        }
    }

    /// On x ≥ 0 the truncated coefficients agree with the raw ones.
    #[test]
    fn truncations_agree_on_nonnegative_states(x in 0.0_f64..1e3, p in 0.0_f64..1.0) {
        let spec = cir_jump();
        let u = spec.measure().law().quantile(p);
        prop_assert_eq!(spec.sigma_trunc(x), 0.5 * x.sqrt());
        prop_assert_eq!(spec.g_trunc(x, u), u * x.min(1.0));
        let levy = levy();
        prop_assert_eq!(levy.g_trunc(x, u), 0.1 * x * u);
    }

    /// Downward jumps never cross zero: g(x,u) + x ≥ 0 for x > 0 under
    /// marks drawn from the builtin laws.
    #[test]
    fn jumps_keep_states_nonnegative(x in 1e-12_f64..1e4, p in 0.0_f64..1.0) {
        for spec in [cir_jump(), levy()] {
            let u = spec.measure().law().quantile(p);
            prop_assert!(spec.g_trunc(x, u) + x >= 0.0);
        }
    }

    /// The constructed growth constant of the capped-linear jump model
    /// works on every state grid in [0, 1e6].
    #[test]
    fn growth_holds_on_arbitrary_grids(grid in proptest::collection::vec(0.0_f64..1e6, 1..24)) {
        let spec = cir_jump();
        let report = validate_growth(&spec, &grid, &ValidateOptions::default()).unwrap();
        prop_assert!(report.all_pass, "failed on grid {:?}", grid);
    }

    /// Builtin gauges are non-decreasing and have midpoint-concave squares
    /// on sampled triples.
    #[test]
    fn gauges_are_monotone_with_concave_squares(a in 1e-6_f64..4.0, b in 1e-6_f64..4.0) {
        for fam in [
            ModulusFamily::sqrt(),
            ModulusFamily::Sqrt { scale: 1.5 },
            ModulusFamily::SqrtLog,
            ModulusFamily::SqrtLogLog,
        ] {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(fam.rho(lo) <= fam.rho(hi) + 1e-12);
            let mid = fam.rho_sq(0.5 * (lo + hi));
            let avg = 0.5 * (fam.rho_sq(lo) + fam.rho_sq(hi));
            prop_assert!(mid >= avg - 1e-9 * avg.abs().max(1e-12));
        }
    }
}

/// The one-sided Lévy compensator agrees with φ(x)·m₁ to quadrature
/// tolerance across [0, 100].
#[test]
fn levy_compensator_matches_reduction_on_grid() {
    let spec = levy();
    let m1 = spec.measure().first_moment();
    for i in 0..=100 {
        let x = i as f64;
        let analytic = spec.compensator_trunc(x).unwrap();
        let quadrature = spec.compensator_by_quadrature(x).unwrap();
        assert!(
            (analytic - 0.1 * x * m1).abs() <= 1e-12 * (1.0 + x),
            "analytic form at x = {x}"
        );
        assert!(
            (quadrature - analytic).abs() <= 1e-8 * analytic.abs().max(1.0),
            "quadrature {quadrature} vs analytic {analytic} at x = {x}"
        );
    }
}
