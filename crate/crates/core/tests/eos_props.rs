mod common;

use approx::assert_relative_eq;
use common::{simpson, Gamma};
use eulerfan::eos::{PressureLaw, ValidationError};
use proptest::prelude::*;

fn gamma_law() -> impl Strategy<Value = (f64, f64)> {
    (0.2f64..5.0, 1.05f64..3.5)
}

proptest! {
    #[test]
    fn gamma_law_matches_closed_forms((kappa, g) in gamma_law(), lr in -3.0f64..3.0) {
        let rho = 10f64.powf(lr);
        let law = PressureLaw::gamma(kappa, g).unwrap();
        let o = Gamma { kappa, gamma: g };
        assert_relative_eq!(law.pressure(rho), o.p(rho), max_relative = 1e-13);
        assert_relative_eq!(law.dpressure(rho), o.dp(rho), max_relative = 1e-13);
        assert_relative_eq!(law.sound_speed(rho).unwrap(), o.c(rho), max_relative = 1e-13);
        let scale = o.p(rho).abs() + o.h(rho).abs() + kappa * rho;
        prop_assert!((law.pressure_potential(rho).unwrap() - o.h(rho)).abs() <= 1e-12 * scale);
        prop_assert!((rho * law.dpressure_potential(rho).unwrap() - rho * o.dh(rho)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn potential_satisfies_legendre_identity((kappa, g) in gamma_law(), lr in -3.0f64..3.0) {
        let rho = 10f64.powf(lr);
        let law = PressureLaw::gamma(kappa, g).unwrap();
        let h = law.pressure_potential(rho).unwrap();
        let dh = law.dpressure_potential(rho).unwrap();
        let p = law.pressure(rho);
        let scale = (rho * dh).abs().max(h.abs()).max(p);
        prop_assert!((rho * dh - h - p).abs() <= 1e-12 * scale);
    }

    #[test]
    fn invariant_integral_matches_quadrature((kappa, g) in gamma_law(), a in 0.05f64..5.0, b in 0.05f64..5.0) {
        let law = PressureLaw::gamma(kappa, g).unwrap();
        let o = Gamma { kappa, gamma: g };
        let quad = simpson(|z| o.c(z) / z, a, b, 2000);
        let got = law.invariant_integral(a, b).unwrap();
        prop_assert!((got - quad).abs() <= 1e-8 * (1.0 + quad.abs()), "{got} vs {quad}");
        prop_assert!((got - o.riemann_integral(a, b)).abs() <= 1e-12 * (1.0 + got.abs()));
    }

    #[test]
    fn invariant_integral_is_additive((kappa, g) in gamma_law(), a in 0.0f64..4.0, b in 0.01f64..4.0, c in 0.01f64..4.0) {
        let law = PressureLaw::gamma(kappa, g).unwrap();
        let ab = law.invariant_integral(a, b).unwrap();
        let bc = law.invariant_integral(b, c).unwrap();
        let ac = law.invariant_integral(a, c).unwrap();
        prop_assert!((ab + bc - ac).abs() <= 1e-12 * (1.0 + ab.abs() + bc.abs()));
        prop_assert!((law.invariant_integral(b, a).unwrap() + ab).abs() <= 1e-14 * (1.0 + ab.abs()));
    }

    #[test]
    fn bregman_divergences_are_nonnegative((kappa, g) in gamma_law(), lr in -3.0f64..3.0, lq in -3.0f64..3.0) {
        let (rho, r) = (10f64.powf(lr), 10f64.powf(lq));
        let law = PressureLaw::gamma(kappa, g).unwrap();
        let scale = law.pressure(rho) + law.pressure(r) + law.dpressure(r) * (rho + r);
        prop_assert!(law.pressure_bregman(rho, r) >= -1e-13 * scale);
        prop_assert!(law.potential_bregman(rho, r).unwrap() >= -1e-13 * scale);
        prop_assert!(law.potential_bregman(0.0, r).unwrap() >= 0.0);
    }

    #[test]
    fn table_of_a_gamma_law_tracks_it(lr in -0.5f64..0.5) {
        // p = rho^2 sampled densely
        let samples: Vec<(f64, f64)> = (1..=400).map(|k| {
            let rho = k as f64 * 0.01;
            (rho, rho * rho)
        }).collect();
        let table = PressureLaw::tabulated(&samples).unwrap();
        let rho = 10f64.powf(lr);
        assert_relative_eq!(table.pressure(rho), rho * rho, max_relative = 1e-4);
        let o = Gamma { kappa: 1.0, gamma: 2.0 };
        let h = table.pressure_potential(rho).unwrap();
        prop_assert!((h - o.h(rho)).abs() <= 1e-3 * (1.0 + o.h(rho).abs()));
        let i = table.invariant_integral(0.5, rho).unwrap();
        prop_assert!((i - o.riemann_integral(0.5, rho)).abs() <= 1e-3);
    }
}

#[test]
fn second_difference_of_potential_is_dp_over_rho() {
    for g in [1.2, 1.4, 2.0, 3.0] {
        let law = PressureLaw::gamma(1.0, g).unwrap();
        for rho in eulerfan::eos::log_grid(1e-3, 1e3, 512) {
            let f = |x: f64| law.pressure_potential(x).unwrap();
            let d2 = |h: f64| (f(rho + h) - 2.0 * f(rho) + f(rho - h)) / (h * h);
            // Richardson; a small step loses the curvature under the linear term
            let h = 0.04 * rho;
            let fd = (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
            let want = law.dpressure(rho) / rho;
            assert_relative_eq!(fd, want, max_relative = 1e-6);
        }
    }
}

#[test]
fn validation_accepts_gamma_laws_and_rejects_bad_tables() {
    for g in [1.2, 1.4, 2.0, 3.0] {
        assert!(PressureLaw::gamma(1.0, g).unwrap().validate().is_ok());
    }
    assert!(PressureLaw::gamma(1.0, 1.0).is_err());
    assert!(PressureLaw::gamma(-1.0, 2.0).is_err());

    // concave in density
    let concave: Vec<(f64, f64)> = (1..=8).map(|k| (k as f64, (k as f64).sqrt())).collect();
    let law = PressureLaw::tabulated(&concave).unwrap();
    assert!(matches!(law.validate(), Err(ValidationError::NonConvex { .. })));

    let dip = PressureLaw::tabulated(&[(1.0, 1.0), (2.0, 0.5), (3.0, 2.0)]).unwrap();
    assert!(dip.validate().is_err());
    assert!(PressureLaw::tabulated(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
}

#[test]
fn table_csv_fixture_loads() {
    let law = PressureLaw::from_csv(&common::fixture("table.csv")).unwrap();
    assert!(law.validate().is_ok());
    assert_relative_eq!(law.pressure(1.0), 1.0, max_relative = 1e-12);
    assert!(law.invariant_integral(0.0, 1.0).is_err());
}
