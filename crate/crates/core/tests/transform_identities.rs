use std::f64::consts::{FRAC_PI_2, PI};

use marcus_core::transform::{marcus_map_ode, AtlasOptions, SigmaFunction, TransformAtlas};
use proptest::prelude::*;

fn numeric(sigma: SigmaFunction) -> TransformAtlas {
    TransformAtlas::with_options(sigma, AtlasOptions { closed_form: false, ..Default::default() }).unwrap()
}

fn sine() -> TransformAtlas {
    TransformAtlas::new(SigmaFunction::sine(1.0, 1.0, (-10.0, 10.0)).unwrap()).unwrap()
}

fn arctan() -> TransformAtlas {
    TransformAtlas::new(SigmaFunction::polynomial(vec![1.0, 0.0, 1.0], vec![], (-10.0, 10.0)).unwrap()).unwrap()
}

fn check_identities(atlas: &TransformAtlas, x: f64, y: f64) -> Result<(), TestCaseError> {
    let v = atlas.h_tilde(x, y).unwrap();
    let (i0, h0) = atlas.h_forward(x).unwrap();
    let (i1, h1) = atlas.h_forward(v).unwrap();
    prop_assert_eq!(i0, i1);
    prop_assert!((h1 - h0 - y).abs() < 1e-8, "chain: {} vs {}", h1 - h0, y);
    let ode = marcus_map_ode(atlas.sigma(), y, x).unwrap();
    prop_assert!((v - ode).abs() <= 1e-7, "ode: {} vs {}", v, ode);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn linear_numeric_matches_closed_form(x in -5.0f64..5.0, y in -3.0f64..3.0) {
        prop_assume!(x != 0.0);
        let exact = TransformAtlas::new(SigmaFunction::linear(1.0, 0.0).unwrap()).unwrap();
        let num = numeric(SigmaFunction::linear(1.0, 0.0).unwrap());
        let a = exact.h_tilde(x, y).unwrap();
        let b = num.h_tilde(x, y).unwrap();
        prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        prop_assert!((num.h_tilde_dx(x, y).unwrap() - y.exp()).abs() < 1e-10 * y.exp());
        check_identities(&num, x, y)?;
    }

    #[test]
    fn doubled_linear_identities(x in -5.0f64..5.0, y in -1.5f64..1.5) {
        prop_assume!(x != 0.0);
        check_identities(&numeric(SigmaFunction::linear(2.0, 0.0).unwrap()), x, y)?;
    }

    #[test]
    fn sine_identities_and_confinement(x in -9.0f64..9.0, y in -6.0f64..6.0) {
        let atlas = sine();
        prop_assume!(!atlas.sigma().is_zero(x));
        check_identities(&atlas, x, y)?;
        let i = atlas.interval_of(x).unwrap();
        let (lo, hi) = atlas.interval_bounds(i);
        let v = atlas.h_tilde(x, y).unwrap();
        prop_assert!(v > lo && v < hi);
    }

    #[test]
    fn arctan_identities(x in -3.0f64..3.0, t in -1.0f64..1.0) {
        let atlas = arctan();
        let y = t * (FRAC_PI_2 - 0.3) - x.atan();
        check_identities(&atlas, x, y)?;
    }

    #[test]
    fn constant_identities(x in -5.0f64..5.0, y in -3.0f64..3.0) {
        check_identities(&numeric(SigmaFunction::constant(1.5).unwrap()), x, y)?;
    }

    #[test]
    fn group_property(x in 0.1f64..3.0, y1 in -2.0f64..2.0, y2 in -2.0f64..2.0) {
        let atlas = sine();
        let a = atlas.h_tilde(atlas.h_tilde(x, y1).unwrap(), y2).unwrap();
        let b = atlas.h_tilde(x, y1 + y2).unwrap();
        prop_assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn forward_map_is_monotone(x in 0.05f64..3.0, d in 1e-6f64..0.05) {
        let atlas = sine();
        let (_, a) = atlas.h_forward(x).unwrap();
        let (_, b) = atlas.h_forward((x + d).min(PI - 1e-9)).unwrap();
        prop_assert!(b > a);
    }
}

#[test]
fn approach_to_zero_is_continuous() {
    let atlas = sine();
    for &z in &[0.0, PI] {
        for side in [-1.0, 1.0] {
            let mut prev = f64::INFINITY;
            for k in 1..12 {
                let x = z + side * 10f64.powi(-k);
                let d = (atlas.h_tilde(x, 1.3).unwrap() - z).abs();
                assert!(d < prev);
                prev = d;
            }
            assert!(prev < 1e-9);
        }
    }
}

#[test]
fn transform_grows_logarithmically_at_zeros() {
    // With |σ(t)| ≤ L|t − z| the transform is at least |ln|x − z||/L in size.
    let atlas = sine();
    let l = atlas.sigma().lipschitz_bound();
    let (_, h_anchor) = atlas.h_forward(FRAC_PI_2).unwrap();
    for k in 1..10 {
        let x = 10f64.powi(-k);
        let (_, h) = atlas.h_forward(x).unwrap();
        assert!((h - h_anchor).abs() >= (FRAC_PI_2 / x).ln() / l - 1e-9);
    }
}

#[test]
fn derivative_series_matches_limit() {
    let atlas = numeric(SigmaFunction::linear(1.0, 0.0).unwrap());
    for y in [-2.0, -1.0, 0.5, 2.0] {
        let series = atlas.h_tilde_dx(0.0, y).unwrap();
        assert!((series - f64::exp(y)).abs() < 1e-10);
        for x in [1e-6, -1e-6, 1e-9, -1e-9] {
            assert!((atlas.h_tilde_dx(x, y).unwrap() - series).abs() < 1e-6);
        }
    }
    let s = sine();
    let phi = s.phi_series(s.zeros().iter().position(|&z| z == 0.0).unwrap());
    assert!(phi.iter().all(|&p| (p - 1.0).abs() < 1e-14));
}
