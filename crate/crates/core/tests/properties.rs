//! Property-based invariants of the lattice, kernels, scheme and reports.

use proptest::prelude::*;

use exitdp::gallery;
use exitdp::harness::fitted_order;
use exitdp::model::ControlSpace;
use exitdp::shaking::{Kernel, ShakingConfig};
use exitdp::simulate::McEstimate;
use exitdp::solve::{solve_with, LatticeOptions};
use exitdp::verify::{Bump, Verdict};
use exitdp::{Grid, Region};

proptest! {
    #[test]
    fn grid_index_round_trip(h in 0.05f64..0.5, d in 1usize..=3, seed in 0usize..1000) {
        let g = Grid::covering(&vec![-1.0; d], &vec![1.0; d], h, h);
        let n = seed % g.len();
        prop_assert_eq!(g.flat_index(&g.multi_index(n)[..d]), n);
        let x = g.coords(n);
        prop_assert_eq!(g.nearest(&x[..d]), n);
    }

    #[test]
    fn cell_weights_form_a_partition_of_unity(
        h in 0.05f64..0.5,
        x in proptest::collection::vec(-1.0f64..1.0, 2),
    ) {
        let g = Grid::covering(&[-1.0, -1.0], &[1.0, 1.0], h, h);
        let cell = g.cell(&x).unwrap();
        let mass: f64 = cell.iter().map(|c| c.1).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!(cell.iter().all(|c| c.1 > 0.0));
        // multilinear interpolation reproduces affine functions
        let f = |y: &[f64]| 0.3 * y[0] - 1.7 * y[1] + 0.2;
        let interp: f64 = cell.iter().map(|&(n, w)| w * f(&g.coords(n)[..2])).sum();
        prop_assert!((interp - f(&x)).abs() < 1e-9);
    }

    #[test]
    fn product_controls_stay_nested(sizes in proptest::collection::vec(1usize..4, 1..4), count in 1usize..5) {
        let mut acc = 0;
        let prefix: Vec<usize> = sizes.iter().map(|s| { acc += s; acc }).collect();
        let labels: Vec<String> = (0..acc).map(|i| format!("c{i}")).collect();
        let base = ControlSpace::prefixes(labels, &prefix).unwrap();
        let p = base.product(count, |j| format!("/{j}"));
        prop_assert_eq!(p.len(), base.len() * count);
        for n in 2..=p.n_levels() {
            let (lo, hi) = (p.level(n - 1).unwrap(), p.level(n).unwrap());
            prop_assert!(lo.iter().all(|c| hi.contains(c)));
        }
    }

    #[test]
    fn kernel_weights_are_probability_vectors(
        delta in 0.02f64..0.5,
        dt in 1e-4f64..0.05,
        h in 0.01f64..0.2,
        d in 1usize..=2,
    ) {
        let k = Kernel::new(&ShakingConfig::new(delta).unwrap(), dt, h, d);
        let t: f64 = k.time.iter().map(|p| p.1).sum();
        let s: f64 = k.space.iter().map(|p| p.1).sum();
        prop_assert!((t - 1.0).abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        prop_assert!(k.time.iter().all(|p| p.1 >= 0.0) && k.space.iter().all(|p| p.1 >= 0.0));
        // spatial kernel is symmetric
        for (o, w) in &k.space {
            let neg: Vec<i64> = o.iter().map(|v| -v).collect();
            let mirror = k.space.iter().find(|(p, _)| *p == neg).map(|p| p.1);
            prop_assert_eq!(mirror, Some(*w));
        }
    }

    #[test]
    fn bump_is_bounded_and_supported(t in -1.0f64..1.0, x in -1.0f64..1.0) {
        let b = Bump::new(0.0, vec![0.0], 0.5, 0.4);
        let (v, _, _) = b.eval(t, &[x]);
        prop_assert!((0.0..=1.0).contains(&v));
        if t.abs() >= 0.5 || x.abs() >= 0.4 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn gauge_is_positive_exactly_inside(x in -2.5f64..2.5, y in -2.5f64..2.5) {
        let r = Region::annulus(2, 1.0, 2.0);
        let p = [x, y];
        prop_assert_eq!(r.gauge(&p) > 0.0, r.contains(&p));
    }

    #[test]
    fn fitted_order_is_exact_on_power_laws(p in 0.1f64..3.0, c in 0.01f64..10.0) {
        let hs = [0.2, 0.1, 0.05, 0.025];
        let e: Vec<f64> = hs.iter().map(|h: &f64| c * h.powf(p)).collect();
        prop_assert!((fitted_order(&hs, &e).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn constant_samples_have_zero_error(v in -5.0f64..5.0, n in 2usize..50) {
        let e = McEstimate::from_samples(&vec![v; n], 0.01, 0);
        prop_assert!((e.mean - v).abs() < 1e-12);
        prop_assert!(e.se < 1e-12);
    }

    #[test]
    fn verdict_direction_is_respected(s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let j = serde_json::Value::Null;
        prop_assert_eq!(Verdict::at_most("c", "i", j.clone(), s, t).pass, s <= t);
        prop_assert_eq!(Verdict::at_least("c", "i", j, s, t).pass, s >= t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Without discount, lowering g by s lowers v by exactly s.
    #[test]
    fn boundary_shift_moves_value_by_the_shift(s in -1.0f64..1.0) {
        let inst = gallery::smooth_benchmark();
        let opts = LatticeOptions::new(0.1);
        let base = solve_with(&inst, &opts, 1, 0.0).unwrap();
        let shifted = inst.clone().with_boundary(inst.boundary.shifted(s));
        let moved = solve_with(&shifted, &opts, 1, 0.0).unwrap();
        for (a, b) in base.slices().iter().zip(moved.slices()) {
            for (u, w) in a.values.iter().zip(&b.values) {
                prop_assert!((u - w - s).abs() < 1e-10);
            }
        }
    }

    /// The scheme is monotone: larger data give larger values at every node.
    #[test]
    fn larger_boundary_data_give_larger_values(s in 0.0f64..1.0) {
        let inst = gallery::two_diffusion_interval();
        let opts = LatticeOptions::new(0.1);
        let lo = solve_with(&inst.clone().with_boundary(inst.boundary.shifted(s)), &opts, 1, 0.0).unwrap();
        let hi = solve_with(&inst, &opts, 1, 0.0).unwrap();
        for (a, b) in lo.slices().iter().zip(hi.slices()) {
            for (u, w) in a.values.iter().zip(&b.values) {
                prop_assert!(*u <= *w + 1e-12);
            }
        }
    }

    /// Perturbed coefficients move the solution continuously.
    #[test]
    fn small_perturbations_move_the_value_little(eps in 0.0f64..0.05) {
        let inst = gallery::smooth_benchmark();
        let opts = LatticeOptions::new(0.1).with_dt(2e-3);
        let a = solve_with(&inst, &opts, 1, 0.0).unwrap();
        let b = solve_with(&inst, &opts, 1, eps).unwrap();
        for x in [-0.5, 0.0, 0.5] {
            prop_assert!((a.eval(0.0, &[x]).unwrap() - b.eval(0.0, &[x]).unwrap()).abs() <= 2.0 * eps + 1e-12);
        }
    }
}
