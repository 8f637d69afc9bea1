//! Gallery oracles pinned at hand-derived points, and the solver and path
//! simulator checked against them.

use approx::assert_abs_diff_eq;

use exitdp::gallery::{self, annulus_oracle, pure_discount_exact, smooth_exact};
use exitdp::simulate::{payoff_mc, PathConfig, Policy};
use exitdp::solve::{solve_with, LatticeOptions};
use exitdp::verify::barrier_residual;
use exitdp::ControlId;

#[test]
fn annulus_flow_oracle_frozen_values() {
    // above the inner disc: travel to the outer circle
    assert_abs_diff_eq!(
        annulus_oracle(0.0, 0.0, 1.5).unwrap(),
        1.75f64.sqrt(),
        epsilon = 1e-15
    );
    // behind the inner disc: travel to the inner circle
    assert_abs_diff_eq!(
        annulus_oracle(0.0, -1.5, 0.5).unwrap(),
        1.5 - 0.75f64.sqrt(),
        epsilon = 1e-15
    );
    // capped by the remaining time
    assert_abs_diff_eq!(
        annulus_oracle(3.5, -1.5, 1.2).unwrap(),
        0.5,
        epsilon = 1e-15
    );
    // jump across y = 1 at x = −0.5
    let jump = annulus_oracle(0.0, -0.5, 1.05).unwrap() - annulus_oracle(0.0, -0.5, 0.95).unwrap();
    assert_abs_diff_eq!(jump, 2.014_454_352_974_84, epsilon = 1e-12);
    assert!(annulus_oracle(0.0, 0.0, 0.5).is_err());
}

#[test]
fn closed_forms_frozen_values() {
    assert_abs_diff_eq!(
        pure_discount_exact(0.0),
        0.632_120_558_828_557_7,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(pure_discount_exact(1.0), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(smooth_exact(0.0, &[0.0]), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(
        smooth_exact(1.0, &[std::f64::consts::FRAC_PI_3]),
        0.5 / std::f64::consts::E,
        epsilon = 1e-15
    );
}

#[test]
fn annulus_barrier_residual_is_closed_form() {
    let inst = gallery::brownian_annulus();
    for r in [1.001, 1.25, 1.5, 1.999] {
        let res = barrier_residual(&inst, ControlId(0), 0.3, &[0.0, r], 0.0).unwrap();
        assert_abs_diff_eq!(res, -4.0 + 3.0 / r, epsilon = 1e-12);
    }
}

#[test]
fn solver_matches_annulus_flow() {
    let inst = gallery::annulus_flow();
    let f = solve_with(&inst, &LatticeOptions::new(0.02), 1, 0.0).unwrap();
    for (x, y) in [(0.0, 1.5), (-1.5, 0.5), (1.2, -1.3), (-0.5, 1.4)] {
        let exact = annulus_oracle(0.0, x, y).unwrap();
        assert_abs_diff_eq!(f.eval(0.0, &[x, y]).unwrap(), exact, epsilon = 0.1);
    }
}

#[test]
fn solver_matches_pure_discount() {
    let inst = gallery::pure_discount();
    let f = solve_with(&inst, &LatticeOptions::new(0.1).with_dt(1e-3), 1, 0.0).unwrap();
    for t in [0.0, 0.5, -0.5] {
        assert_abs_diff_eq!(
            f.eval(t, &[0.3]).unwrap(),
            pure_discount_exact(t),
            epsilon = 1e-3
        );
    }
}

#[test]
fn solver_matches_smooth_benchmark() {
    let inst = gallery::smooth_benchmark();
    let f = solve_with(&inst, &LatticeOptions::new(0.025), 1, 0.0).unwrap();
    for x in [-0.9, -0.4, 0.0, 0.3, 0.8] {
        for t in [-0.8, 0.0, 0.6] {
            assert_abs_diff_eq!(
                f.eval(t, &[x]).unwrap(),
                smooth_exact(t, &[x]),
                epsilon = 2e-3
            );
        }
    }
}

#[test]
fn monte_carlo_agrees_with_the_lattice() {
    let inst = gallery::brownian_annulus();
    let f = solve_with(&inst, &LatticeOptions::new(0.025), 1, 0.0).unwrap();
    let cfg = PathConfig::for_instance(&inst, 1e-3, 4000, 3);
    let mc = payoff_mc(
        &inst,
        &Policy::Constant(ControlId(0)),
        0.0,
        &[1.5, 0.0],
        0.0,
        &cfg,
    )
    .unwrap();
    let v = f.eval(0.0, &[1.5, 0.0]).unwrap();
    // Euler–Maruyama exit detection at step ends overshoots τ by O(√Δt)
    assert!(
        (mc.mean - v).abs() <= 3.0 * mc.se + 0.02,
        "mc {mc:?} lattice {v}"
    );
}

#[test]
fn discontinuity_survives_discretisation() {
    let f = solve_with(&gallery::annulus_flow(), &LatticeOptions::new(0.02), 1, 0.0).unwrap();
    let jump = f.eval(0.0, &[-0.5, 1.05]).unwrap() - f.eval(0.0, &[-0.5, 0.95]).unwrap();
    assert!(jump >= 1.0, "jump {jump}");
}
