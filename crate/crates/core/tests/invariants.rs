use hermanlab::cfrac::{cf_expand, return_ordering, tiling, ContinuedFraction};
use hermanlab::curve::trace;
use hermanlab::julia::{box_count, classify_with, read_grid, write_grid, Sampling, Traps, Window};
use hermanlab::maps::{blaschke, herman_family, rigid_rotation, OrbitSource};
use hermanlab::renorm::scaling_ratios;
use hermanlab::Execution;
use num_complex::Complex64;
use proptest::prelude::*;

fn periodic() -> impl Strategy<Value = ContinuedFraction> {
    (proptest::collection::vec(1u64..4, 0..3), proptest::collection::vec(1u64..4, 1..3))
        .prop_map(|(pre, per)| ContinuedFraction::periodic(pre, per).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tilings_nest_and_returns_alternate(cf in periodic()) {
        let mut prev = tiling(&cf, 2).unwrap();
        for n in 2..=8 {
            let next = tiling(&cf, n + 1).unwrap();
            prop_assert!(next.refines(&prev));
            let r = return_ordering(&cf, n, 0.0).unwrap();
            for w in r.windows(2) {
                // listed in circular order around 0: odd returns below, even above
                prop_assert!(w[0].offset < w[1].offset);
            }
            prev = next;
        }
    }

    #[test]
    fn expansion_recovers_leading_quotients(cf in periodic()) {
        let e = cf_expand(cf.value(), 12).unwrap();
        prop_assert_eq!(e.take(12).unwrap(), cf.take(12).unwrap());
    }

    #[test]
    fn symmetric_family_preserves_the_circle(alpha in 0.0f64..1.0, t in 0.0f64..1.0, d in 2u32..5) {
        let f = blaschke(d, alpha).unwrap();
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t);
        prop_assert!((f.eval_fast(z).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn critical_point_has_the_inner_criticality(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(re.hypot(im) > 0.1);
        let f = herman_family(3, 2, Complex64::new(re, im)).unwrap();
        let at_one = f
            .critical_points()
            .into_iter()
            .filter_map(|(p, m)| p.finite().map(|z| (z, m)))
            .find(|(z, _)| (z - 1.0).norm() < 1e-4);
        // (d0 - 1) + (dinf - 1) coalesce at 1
        prop_assert_eq!(at_one.map(|(_, m)| m), Some(3));
    }

    #[test]
    fn rotations_trace_the_circle_with_chord_ratios(cf in periodic()) {
        let f = rigid_rotation(cf.value());
        let c = trace(&f, &cf, 10).unwrap();
        // |z| drifts by a few ulps per step
        let tol = 1e-15 * c.len() as f64 + 1e-14;
        prop_assert!(c.vertices.iter().all(|v| (v.point.norm() - 1.0).abs() < tol));
        let r = scaling_ratios(&f, &cf, 10).unwrap();
        let conv = cf.convergents(12).unwrap();
        let l = &conv.lengths;
        let chord = |k: usize| {
            let offset = if k % 2 == 0 { l[k] } else { -l[k] };
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * offset) - 1.0
        };
        for (&n, s) in r.levels.iter().zip(&r.ratios) {
            let expected = chord(n + 1) / chord(n);
            // orbit error grows like q eps against a displacement of size l
            let tol = 1e-14 * conv.q[n + 1] as f64 / l[n + 1];
            prop_assert!((s - expected).norm() < tol * expected.norm(), "n = {}: {} vs {}", n, s, expected);
        }
    }

    #[test]
    fn grid_files_round_trip(w in 1usize..12, h in 1usize..12, maxiter in 1u32..40) {
        let f = blaschke(2, 0.3).unwrap();
        let window = Window::new(-1.5, -1.0, 1.5, 1.0).unwrap();
        let g = classify_with(&f, window, (w, h), maxiter, Traps::default(), Execution::Sequential).unwrap();
        let mut bytes = Vec::new();
        write_grid(&g, &mut bytes).unwrap();
        prop_assert_eq!(read_grid(bytes.as_slice()).unwrap(), g);
    }
}

#[test]
fn execution_modes_agree() {
    let f = blaschke(2, 0.61).unwrap();
    let window = Window::centered(Complex64::new(0.2, -0.1), 2.0).unwrap();
    let a = classify_with(&f, window, (96, 80), 300, Traps::default(), Execution::Parallel).unwrap();
    let b = classify_with(&f, window, (96, 80), 300, Traps::default(), Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let pts = hermanlab::julia::koch_curve(6);
    for eps in [0.1, 0.01] {
        for s in [Sampling::Points, Sampling::ClosedPolyline] {
            assert_eq!(box_count(&pts, s, eps, Execution::Parallel), box_count(&pts, s, eps, Execution::Sequential));
        }
    }
}

#[test]
fn the_critical_point_sits_on_the_curve() {
    let f = blaschke(2, 0.61).unwrap();
    assert_eq!(f.critical_point(), Complex64::new(1.0, 0.0));
    let c = trace(&f, &ContinuedFraction::golden(), 8).unwrap();
    assert_eq!(c.vertices[0].k, 0);
    assert_eq!(c.critical_point, Complex64::new(1.0, 0.0));
}
