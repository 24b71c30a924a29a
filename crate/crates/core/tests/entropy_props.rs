mod common;

use common::Gamma;
use eulerfan::entropy::{
    certify, check_identities, min_symmetric_eigenvalue, pressure_split_defect, rei2_rhs, rei_full_residual,
    relative_entropy, total_relative_entropy, CertifySettings, ConstantReference, EntropyError, FdReference,
    State, TrajectorySource, TOL_FAN_IDENTITIES, TOL_PRESSURE_SPLIT,
};
use eulerfan::eos::PressureLaw;
use eulerfan::fvm::{FieldState, Grid};
use eulerfan::riemann::{RiemannData, WaveFan};
use proptest::prelude::*;
use rand::Rng;

fn symmetric_fan() -> WaveFan {
    let law = PressureLaw::gamma(1.0, 2.0).unwrap();
    WaveFan::new(&RiemannData::new(1.0, -1.0, 1.0, 1.0).unwrap(), &law).unwrap()
}

fn random_field(rng: &mut impl Rng, grid: Grid, t: f64, vacuum_fraction: f64) -> FieldState {
    let mut f = FieldState::zeros(grid, t);
    for k in 0..grid.cells() {
        if rng.gen_bool(vacuum_fraction) {
            continue;
        }
        let rho = rng.gen_range(0.01..3.0);
        f.rho[k] = rho;
        f.m1[k] = rho * rng.gen_range(-3.0..3.0);
        f.m2[k] = rho * rng.gen_range(-1.0..1.0);
    }
    f
}

proptest! {
    #[test]
    fn relative_entropy_matches_closed_form(
        g in 1.1f64..3.0, rho in 0.0f64..5.0, r in 0.01f64..5.0,
        u in prop::array::uniform2(-3.0f64..3.0), v in prop::array::uniform2(-3.0f64..3.0),
    ) {
        let law = PressureLaw::gamma(1.3, g).unwrap();
        let o = Gamma { kappa: 1.3, gamma: g };
        let got = relative_entropy(&State::new(rho, u), &State::new(r, v), &law).unwrap();
        let kinetic = if rho > 1e-12 { 0.5 * rho * ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)) } else { 0.0 };
        let want = kinetic + o.h(rho) - o.h(r) - o.dh(r) * (rho - r);
        let scale = 1.0 + o.h(rho).abs() + o.h(r).abs() + o.dh(r).abs() * (rho + r) + kinetic;
        prop_assert!((got - want).abs() <= 1e-12 * scale, "{got} vs {want}");
        prop_assert!(got >= 0.0);
    }

    #[test]
    fn relative_entropy_vanishes_only_on_the_reference(
        rho in 0.01f64..5.0, u in prop::array::uniform2(-3.0f64..3.0), d in 0.01f64..1.0,
    ) {
        let law = PressureLaw::gamma(1.0, 1.4).unwrap();
        let s = State::new(rho, u);
        prop_assert!(relative_entropy(&s, &s, &law).unwrap().abs() <= 1e-14 * (1.0 + rho));
        let off = State::new(rho * (1.0 + d), u);
        prop_assert!(relative_entropy(&off, &s, &law).unwrap() > 0.0);
        let moved = State::new(rho, [u[0] + d, u[1]]);
        prop_assert!(relative_entropy(&moved, &s, &law).unwrap() > 0.0);
    }

    #[test]
    fn tabulated_relative_entropy_is_nonnegative(rho in 0.0f64..3.0, r in 0.05f64..3.0, du in -2.0f64..2.0) {
        let law = PressureLaw::from_csv(&common::fixture("table.csv")).unwrap();
        let e = relative_entropy(&State::new(rho, [du, 0.0]), &State::new(r, [0.0, 0.0]), &law).unwrap();
        prop_assert!(e >= -1e-12);
    }

    #[test]
    fn pressure_split_identity_holds(g in 1.1f64..3.0, rho in 0.0f64..5.0, r in 0.01f64..5.0, du in -3.0f64..3.0) {
        let law = PressureLaw::gamma(1.0, g).unwrap();
        prop_assert!(pressure_split_defect(&law, rho, r, du) <= TOL_PRESSURE_SPLIT);
    }

    #[test]
    fn min_eigenvalue_matches_rayleigh_quotient(g in prop::array::uniform4(-2.0f64..2.0)) {
        let grad = [[g[0], g[1]], [g[2], g[3]]];
        let brute = (0..3600)
            .map(|k| {
                let th = k as f64 * std::f64::consts::PI / 3600.0;
                let v = [th.cos(), th.sin()];
                let mut q = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        q += v[a] * (grad[a][b] + grad[b][a]) * v[b];
                    }
                }
                q
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!((min_symmetric_eigenvalue(grad) - brute).abs() <= 1e-5);
    }
}

#[test]
fn rei2_is_nonpositive_on_random_fields() {
    let mut rng = common::rng(21);
    for _ in 0..40 {
        let g = rng.gen_range(1.1..3.0);
        let law = PressureLaw::gamma(rng.gen_range(0.5..2.0), g).unwrap();
        let o = Gamma { kappa: 1.0, gamma: g };
        let (rl, ul, rr, ur) = common::random_rarefaction_data(&mut rng, &o);
        let Ok(fan) = WaveFan::new(&RiemannData::new(rl, ul, rr, ur).unwrap(), &law) else { continue };
        let grid = Grid::new(4.0, 48, 2).unwrap();
        for _ in 0..20 {
            let t = rng.gen_range(0.1..1.5);
            let field = random_field(&mut rng, grid, t, 0.1);
            let r = rei2_rhs(&field, &fan, t).unwrap();
            assert!(r <= 1e-12 * (1.0 + r.abs()), "rei2 = {r}");
        }
    }
}

#[test]
fn full_interior_rate_reduces_to_rei2_against_the_fan() {
    let fan = symmetric_fan();
    let law = fan.law().clone();
    let grid = Grid::new(5.0, 64, 3).unwrap();
    let mut rng = common::rng(22);
    let snaps: Vec<FieldState> =
        [0.3, 0.6, 1.0].iter().map(|&t| random_field(&mut rng, grid, t, 0.0)).collect();
    let res = rei_full_residual(&snaps, &fan, &law, fan.data()).unwrap();
    for (k, s) in snaps.iter().enumerate() {
        let direct = rei2_rhs(s, &fan, s.t).unwrap();
        let scale = 1.0 + direct.abs();
        assert!((res.interior_rate[k] - direct).abs() <= 1e-10 * scale, "{} vs {direct}", res.interior_rate[k]);
    }
}

#[test]
fn difference_reference_agrees_with_analytic_fan() {
    let fan = symmetric_fan();
    let law = fan.law().clone();
    let grid = Grid::new(5.0, 40, 1).unwrap();
    let mut rng = common::rng(23);
    let snaps: Vec<FieldState> =
        [0.5, 0.75, 1.0].iter().map(|&t| random_field(&mut rng, grid, t, 0.0)).collect();
    let values = |t: f64, x1: f64, _x2: f64| {
        let (r, u) = fan.evaluate(x1 / t).unwrap();
        (r, [u, 0.0])
    };
    let fd = FdReference { values, step: 1e-6 };
    let a = rei_full_residual(&snaps, &fan, &law, fan.data()).unwrap();
    let b = rei_full_residual(&snaps, &fd, &law, fan.data()).unwrap();
    for k in 0..3 {
        assert!((a.residual[k] - b.residual[k]).abs() <= 1e-4 * (1.0 + a.residual[k].abs()));
    }
}

#[test]
fn constant_reference_on_its_own_state_has_zero_residual() {
    let law = PressureLaw::gamma(1.0, 1.4).unwrap();
    let data = RiemannData::new(0.8, 0.3, 0.8, 0.3).unwrap();
    let grid = Grid::new(2.0, 16, 4).unwrap();
    let snaps: Vec<FieldState> = [0.0, 0.5]
        .iter()
        .map(|&t| {
            let mut f = FieldState::zeros(grid, t);
            f.rho.fill(0.8);
            f.m1.fill(0.8 * 0.3);
            f
        })
        .collect();
    let reference = ConstantReference(State::new(0.8, [0.3, 0.0]));
    let res = rei_full_residual(&snaps, &reference, &law, &data).unwrap();
    assert!(res.residual.iter().all(|r| r.abs() <= 1e-14));
}

#[test]
fn fan_identities_hold_away_from_edges() {
    let fan = symmetric_fan();
    let s = fan.speeds().as_array();
    let points: Vec<f64> = (0..=400)
        .map(|k| -4.9 + 9.8 * k as f64 / 400.0)
        .filter(|x| s.iter().all(|e| (x - e).abs() > 1e-3))
        .collect();
    let defects = check_identities(&fan, 1.0, &points, 1e-5).unwrap();
    assert!(defects.max() <= TOL_FAN_IDENTITIES, "{defects:?}");
    let on_edge = check_identities(&fan, 1.0, &[s[0]], 1e-5);
    assert!(matches!(on_edge, Err(EntropyError::SamplingOnKink { .. })));
}

#[test]
fn exact_samples_certify_themselves() {
    let fan = symmetric_fan();
    let grid = Grid::new(5.0, 200, 1).unwrap();
    let snaps: Vec<FieldState> =
        (0..=4).map(|k| fan.evaluate_field(0.25 * k as f64, &grid).unwrap()).collect();
    for s in &snaps[1..] {
        assert!(total_relative_entropy(s, &fan, s.t).unwrap() <= 1e-25);
    }
    let report = certify(&snaps, &fan, &CertifySettings::default(), TrajectorySource::ExactSamples).unwrap();
    assert!(report.certified(), "{:?}", report.checks);
    let again = certify(&snaps, &fan, &CertifySettings::default(), TrajectorySource::ExactSamples).unwrap();
    assert_eq!(report, again);
}

#[test]
fn kinetic_tampering_breaks_the_energy_check() {
    let fan = symmetric_fan();
    let grid = Grid::new(5.0, 200, 1).unwrap();
    let mut snaps: Vec<FieldState> =
        (0..=4).map(|k| fan.evaluate_field(0.25 * k as f64, &grid).unwrap()).collect();
    for s in &mut snaps[3..] {
        s.m1.iter_mut().for_each(|m| *m *= 1.1);
    }
    let report = certify(&snaps, &fan, &CertifySettings::default(), TrajectorySource::ExactSamples).unwrap();
    assert!(!report.checks.energy_inequality);
    assert!(!report.certified());
}
