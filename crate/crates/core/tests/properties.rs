use std::f64::consts::PI;

use backflow_core::backflow::beta_rescaled;
use backflow_core::dynamics::{current_j, CurrentRoute};
use backflow_core::eta::{delta_kernel, EtaParams};
use backflow_core::numerics::{integrate_1d, refine_root, Bracket};
use backflow_core::phase_space::{negativity_delta, shear, wigner_cat};
use backflow_core::smoothing::{smooth_wigner, SmoothingSpec};
use backflow_core::states::{CatState, RescaledParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = RescaledParams> {
    (1.0..6.0f64, 0.0..25.0f64, 0.0..5.0f64, 0.0..2.0 * PI)
        .prop_map(|(p0_t, delta_t, alpha, theta)| RescaledParams { p0_t, delta_t, alpha, theta })
        .prop_filter("non-degenerate", |r| r.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn current_routes_agree(r in params(), sigma in 0.5..20.0f64, tt in -1.0..1.0f64) {
        let s = CatState::from_rescaled(&r, sigma).unwrap();
        let t = s.time_from_rescaled(tt);
        let scale = sigma * sigma;
        let a = scale * current_j(&s, t, CurrentRoute::Wavefunction);
        let b = scale * current_j(&s, t, CurrentRoute::Wigner);
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn shear_round_trip(x in -50.0..50.0f64, p in -50.0..50.0f64, t in -5.0..5.0f64) {
        let (x1, p1) = shear(shear((x, p), t), -t);
        prop_assert!((x1 - x).abs() <= 1e-12 * (1.0 + x.abs() + (p * t).abs()));
        prop_assert_eq!(p1, p);
    }

    #[test]
    fn kernel_is_even(x in -30.0..30.0f64, p1 in 0.1..20.0f64, p2 in 0.1..20.0f64) {
        let k = EtaParams { p1, p2, flip_sign: false };
        prop_assert_eq!(delta_kernel(x, &k), delta_kernel(-x, &k));
        let swapped = EtaParams { p1: p2, p2: p1, flip_sign: false };
        prop_assert!((delta_kernel(x, &k) + delta_kernel(x, &swapped)).abs() < 1e-15);
    }

    #[test]
    fn wigner_is_bounded(r in params(), x in -6.0..6.0f64, dp in -3.0..3.0f64) {
        let p = r.mid() + dp;
        prop_assert!(wigner_cat(&r, x, p).unwrap().abs() <= 2.0 / PI + 1e-9);
    }

    #[test]
    fn smoothing_does_not_grow_values(r in params(), x in -4.0..4.0f64, dp in -3.0..3.0f64, s in -1.0..0.0f64) {
        let p = r.mid() + dp;
        let v = smooth_wigner(&r, x, p, SmoothingSpec::new(s).unwrap()).unwrap();
        prop_assert!(v.abs() <= 1.0 / PI + 1e-12);
    }

    #[test]
    fn quadrature_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, w in 0.5..12.0f64) {
        let f = |x: f64| (w * x).sin() * (-x * x).exp();
        let g = |x: f64| (w * x).cos() / (1.0 + x * x);
        let i = |h: &dyn Fn(f64) -> f64| integrate_1d(h, -4.0, 4.0, 1e-10).unwrap().value;
        let lhs = i(&|x| a * f(x) + b * g(x));
        prop_assert!((lhs - a * i(&f) - b * i(&g)).abs() <= 2e-10 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn root_refinement_is_idempotent(c in 0.1..3.0f64) {
        let f = |x: f64| x.cos() - c * x;
        let r = refine_root(f, Bracket::new(0.0, 2.0).unwrap(), 1e-13).unwrap();
        let r2 = refine_root(f, Bracket::new(r - 1e-3, r + 1e-3).unwrap(), 1e-13).unwrap();
        prop_assert!((r - r2).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn backflow_below_negativity(alpha in 0.0..6.0f64, delta_t in 0.5..25.0f64, theta in 0.0..2.0 * PI) {
        let r = RescaledParams::new(3.0, delta_t, alpha, theta).unwrap();
        let b = beta_rescaled(&r, None).unwrap();
        let d = negativity_delta(&r).unwrap();
        prop_assert!(b.beta >= 0.0);
        prop_assert!(b.beta <= d + 1e-12, "beta {} delta {}", b.beta, d);
        prop_assert!(b.beta < 0.041);
    }
}
