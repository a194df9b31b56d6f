use super::*;
use crate::fiber::BanachFiber;
use crate::Error;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quadratic() -> ConstraintMap {
    // y² − 1 on ℝ
    let poly = Polynomial {
        domain_dim: 1,
        outputs: vec![vec![Monomial { coef: 1.0, powers: vec![(0, 2)] }, Monomial { coef: -1.0, powers: vec![] }]],
    };
    ConstraintMap::polynomial("quadratic", poly).unwrap()
}

fn sphere(k: usize, level: usize) -> ConstraintMap {
    ConstraintMap::sphere(SequenceLayout::scalar(k), level).unwrap()
}

fn dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

fn newton_oracle(y0: f64, steps: usize) -> Vec<f64> {
    // y ← (y + 1/y)/2
    let mut out = vec![y0];
    for _ in 0..steps {
        let y = *out.last().unwrap();
        out.push(0.5 * (y + 1.0 / y));
    }
    out
}

#[test]
fn layout_weights_and_round_trip() {
    let layout = SequenceLayout::new(BanachFiber::real_euclidean(2).unwrap(), 3).unwrap();
    assert_eq!(layout.dim(), 8);
    let w = layout.weights(1).unwrap();
    assert_eq!(w[0], 1.0);
    assert!((w[2] - libm::exp(2.0)).abs() < 1e-12);
    let q: Vec<f64> = (0..8).map(|i| i as f64).collect();
    assert_eq!(layout.from_sequence(&layout.to_sequence(&q).unwrap()).unwrap(), q);
    assert!(SequenceLayout::scalar(300).weights(1).is_err());
    let complex = BanachFiber::new(1, crate::ScalarField::Complex, crate::NormKind::Euclidean).unwrap();
    assert!(SequenceLayout::new(complex, 2).is_err());
}

#[test]
fn sphere_gradient_kernel_at_e0() {
    let c = sphere(6, 0);
    let e0 = c.layout().unit(0, 0);
    let r = is_regular_point(&c, &e0).unwrap();
    assert!(r.regular);
    // analytic gradient 2e₀
    assert_eq!(r.jacobian[0], {
        let mut g = vec![0.0; 7];
        g[0] = 2.0;
        g
    });
    assert!(c.jacobian_crosscheck(&e0).unwrap() < 1e-6);
    assert_eq!(r.kernel_basis.len(), 6);
    assert_eq!(r.complement_basis.len(), 1);
    for v in &r.kernel_basis {
        assert!(v[0].abs() < 1e-12, "kernel spans e₁…e_K");
    }
    assert!((r.complement_basis[0][0].abs() - 1.0).abs() < 1e-12);
}

#[test]
fn bases_are_weighted_orthonormal_and_annihilate() {
    let c = spheres_two_level(8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p: Vec<f64> = (0..9).map(|k| rng.gen_range(-1.0..1.0) * libm::exp(-(k as f64))).collect();
    let r = is_regular_point(&c, &p).unwrap();
    assert!(r.regular);
    let w = c.weights();
    let all: Vec<&Vec<f64>> = r.kernel_basis.iter().chain(&r.complement_basis).collect();
    for (i, a) in all.iter().enumerate() {
        for (j, b) in all.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot(a, b, w) - want).abs() < 1e-10);
        }
    }
    let j = r.jacobian_matrix();
    for v in &r.kernel_basis {
        let jv = &j * nalgebra::DVector::from_column_slice(v);
        assert!(jv.amax() <= 1e-8 * r.sigma_max());
    }
}

fn spheres_two_level(k: usize) -> ConstraintMap {
    ConstraintMap::spheres(SequenceLayout::scalar(k), &[0, 1]).unwrap()
}

#[test]
fn critical_and_linear_points() {
    let c = sphere(4, 0);
    let r = is_regular_point(&c, &[0.0; 5]).unwrap();
    assert!(!r.regular);
    assert!(r.kernel_basis.is_empty());

    let lin = ConstraintMap::linear(SequenceLayout::scalar(4), &[1.0]).unwrap();
    let r = is_regular_point(&lin, &[0.3, -2.0, 0.0, 1.0, 5.0]).unwrap();
    assert!(r.regular);
    assert!((r.complement_basis[0][0].abs() - 1.0).abs() < 1e-12);
    assert!(r.complement_basis[0][1..].iter().all(|x| x.abs() < 1e-12));

    assert!(matches!(ConstraintMap::linear(SequenceLayout::scalar(0), &[1.0, 2.0]), Err(Error::Dimension { .. })));
    let too_many = ConstraintMap::affine(SequenceLayout::scalar(0), &[vec![1.0], vec![2.0]], &[0.0, 0.0]);
    assert!(matches!(too_many, Err(Error::InvalidInput(_))));
}

#[test]
fn finite_differences_match_supplied_jacobians() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let poly = Polynomial {
        domain_dim: 4,
        outputs: vec![
            vec![Monomial { coef: 1.5, powers: vec![(0, 2), (1, 1)] }, Monomial { coef: -1.0, powers: vec![(3, 3)] }],
            vec![Monomial { coef: 2.0, powers: vec![(2, 1)] }, Monomial { coef: 0.5, powers: vec![] }],
        ],
    };
    let constraints = [
        sphere(8, 0),
        sphere(8, 1),
        spheres_two_level(8),
        ConstraintMap::linear(SequenceLayout::scalar(8), &[1.0, -2.0, 0.5]).unwrap(),
        ConstraintMap::affine(SequenceLayout::scalar(8), &[vec![1.0, 1.0], vec![0.0, 0.0, 3.0]], &[1.0, 2.0]).unwrap(),
        ConstraintMap::polynomial("poly", poly).unwrap(),
    ];
    for c in &constraints {
        for _ in 0..10 {
            let q: Vec<f64> = (0..c.dim()).map(|k| rng.gen_range(-1.0..1.0) * libm::exp(-(c.layout().k_of(k) as f64))).collect();
            assert!(c.jacobian_crosscheck(&q).unwrap() <= 1e-6, "{}", c.name());
        }
    }
}

#[test]
fn dphi_examples() {
    // φ(x, y) = y − a·x on ℝ², y the second coordinate
    let c = ConstraintMap::linear(SequenceLayout::scalar(1), &[-3.0, 1.0]).unwrap();
    let s = Splitting::coordinates(2, &[1]).unwrap();
    assert_eq!(apply_dphi(&c, &s, &[0.4], &[1.0], &[0.0], &[0.0]).unwrap(), (vec![0.0], vec![0.0]));
    assert_eq!(apply_dphi(&c, &s, &[0.4], &[1.0], &[2.0], &[5.0]).unwrap(), (vec![2.0], vec![5.0 - 6.0]));

    // sphere split with y = x₀ at p = e₀
    let sp = sphere(3, 0);
    let s = Splitting::coordinates(4, &[0]).unwrap();
    let (a, b) = apply_dphi(&sp, &s, &[0.0, 0.0, 0.0], &[1.0], &[0.0, 0.0, 0.0], &[1.0]).unwrap();
    assert_eq!(a, vec![0.0; 3]);
    assert_eq!(b, vec![2.0]);
}

#[test]
fn vphi_examples() {
    // φ = 2y on ℝ
    let c = ConstraintMap::linear(SequenceLayout::scalar(0), &[2.0]).unwrap();
    let s = Splitting::coordinates(1, &[0]).unwrap();
    assert_eq!(apply_vphi(&c, &s, &[], &[0.7], &[], &[0.0]).unwrap(), (vec![], vec![0.0]));
    assert_eq!(apply_vphi(&c, &s, &[], &[0.7], &[], &[3.0]).unwrap(), (vec![], vec![1.5]));

    let q = quadratic();
    let s = Splitting::coordinates(1, &[0]).unwrap();
    assert!(matches!(apply_vphi(&q, &s, &[], &[0.0], &[], &[1.0]), Err(Error::SingularBlock { .. })));
}

#[test]
fn dphi_vphi_round_trip_on_sphere() {
    let c = sphere(8, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..5 {
        let mut p: Vec<f64> = (0..9).map(|k| rng.gen_range(-1.0..1.0) * libm::exp(-2.0 * k as f64)).collect();
        let n = c.weighted_norm(&p);
        p.iter_mut().for_each(|x| *x /= n);
        let r = is_regular_point(&c, &p).unwrap();
        let s = Splitting::from_report(&r, &c).unwrap();
        let (x, y) = s.coords(&p).unwrap();
        for _ in 0..16 {
            let k1: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let k2 = vec![rng.gen_range(-1.0..1.0)];
            let (h1, h2) = apply_vphi(&c, &s, &x, &y, &k1, &k2).unwrap();
            let (b1, b2) = apply_dphi(&c, &s, &x, &y, &h1, &h2).unwrap();
            let err = b1.iter().zip(&k1).chain(b2.iter().zip(&k2)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-9);
        }
    }
}

#[test]
fn scalar_newton_iterates() {
    let c = quadratic();
    let s = Splitting::coordinates(1, &[0]).unwrap();
    let sol = solve_implicit(&c, &s, &[], &[0.5], &NewtonOptions::default()).unwrap();
    let oracle = newton_oracle(0.5, sol.iterations());
    assert!((oracle[1] - 1.25).abs() < 1e-15 && (oracle[2] - 1.025).abs() < 1e-15);
    assert!((oracle[3] - 1.000_304_878_048_780_5).abs() < 1e-15);
    for (it, want) in sol.iterates.iter().zip(&oracle) {
        assert!((it[0] - want).abs() <= 1e-12);
    }
    assert!((sol.y[0] - 1.0).abs() < 1e-12);
    let errs: Vec<f64> = sol.iterates.iter().map(|y| (y[0] - 1.0).abs()).collect();
    for w in errs.windows(2) {
        if w[0] < 0.1 {
            assert!(w[1] <= 2.0 * w[0] * w[0]);
        }
    }
}

#[test]
fn singular_start_and_iteration_budget() {
    let c = quadratic();
    let s = Splitting::coordinates(1, &[0]).unwrap();
    match solve_implicit(&c, &s, &[], &[0.0], &NewtonOptions::default()) {
        Err(Error::SingularBlock { residual_history }) => assert_eq!(residual_history, vec![1.0]),
        other => panic!("expected a singular block, got {other:?}"),
    }
    let opts = NewtonOptions { max_iter: 2, ..Default::default() };
    match solve_implicit(&c, &s, &[], &[0.5], &opts) {
        Err(Error::NonConvergence { residual_history }) => assert_eq!(residual_history.len(), 3),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn affine_solve_takes_one_step() {
    // φ(x, y) = y − (2x + 1)
    let c = ConstraintMap::affine(SequenceLayout::scalar(1), &[vec![-2.0, 1.0]], &[1.0]).unwrap();
    let s = Splitting::coordinates(2, &[1]).unwrap();
    let sol = solve_implicit(&c, &s, &[0.75], &[-4.0], &NewtonOptions::default()).unwrap();
    assert_eq!(sol.iterations(), 1);
    assert!((sol.y[0] - 2.5).abs() < 1e-14);
}

#[test]
fn sphere_tail_solve() {
    let c = sphere(5, 0);
    let s = Splitting::coordinates(6, &[0]).unwrap();
    let sol = solve_implicit(&c, &s, &[0.6, 0.0, 0.0, 0.0, 0.0], &[0.5], &NewtonOptions::default()).unwrap();
    // closed form √(1 − 0.36)
    assert!((sol.y[0] - libm::sqrt(1.0 - 0.36)).abs() < 1e-12);
    let errs: Vec<f64> = sol.iterates.iter().map(|y| (y[0] - 0.8).abs()).collect();
    for w in errs.windows(2) {
        if w[0] < 0.1 {
            assert!(w[1] <= 2.0 * w[0] * w[0]);
        }
    }
}

#[test]
fn regular_values() {
    let c = sphere(4, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let seeds: Vec<Vec<f64>> = (0..6)
        .map(|_| {
            let mut s = c.layout().unit(0, 0);
            s.iter_mut().for_each(|x| *x += 0.2 * rng.gen_range(-1.0..1.0));
            s
        })
        .collect();
    let r = is_regular_value(&c, &[0.0], &seeds, &NewtonOptions::default()).unwrap();
    assert_eq!(r.verdict(), Some(true));
    for p in &r.points {
        assert!(p.residual <= 1e-12);
        // gradient 2x on the sphere
        assert!((r.points[0].report.sigma_max() - 2.0).abs() < 1e-9 || p.report.sigma_max() > 1.9);
    }

    let near_zero = vec![vec![0.3, -0.1, 0.05, 0.0, 0.0]];
    let r = is_regular_value(&c, &[-1.0], &near_zero, &NewtonOptions::default()).unwrap();
    assert_eq!(r.points.len(), 1);
    assert!(c.weighted_norm(&r.points[0].point) < 1e-5);
    assert!(!r.points[0].kantorovich.passed);
    assert_eq!(r.verdict(), Some(false));

    let lin = ConstraintMap::linear(SequenceLayout::scalar(4), &[1.0, 1.0]).unwrap();
    let r = is_regular_value(&lin, &[3.7], &[vec![0.0; 5]], &NewtonOptions::default()).unwrap();
    assert_eq!(r.verdict(), Some(true));

    let empty = is_regular_value(&c, &[-2.0], &seeds[..2], &NewtonOptions::default()).unwrap();
    assert_eq!(empty.verdict(), None);
    assert_eq!(empty.unconverged, vec![0, 1]);
}

#[test]
fn two_level_intersection_points_are_degenerate() {
    // Σ(e^{2k} − 1) q_k² = 0 forces q = ±e₀, where both gradients agree
    let c = spheres_two_level(6);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let seeds: Vec<Vec<f64>> =
        (0..8).map(|_| (0..7).map(|k| rng.gen_range(-1.0..1.0) * libm::exp(-(k as f64))).collect()).collect();
    let r = is_regular_value(&c, &[0.0, 0.0], &seeds, &NewtonOptions::default()).unwrap();
    assert!(r.regular_points().next().is_none());
    for p in &r.points {
        assert!(p.point[1..].iter().all(|x| x.abs() < 1e-3));
        assert!(!p.kantorovich.passed);
    }
}

#[test]
fn linear_chart_is_exact() {
    let c = ConstraintMap::linear(SequenceLayout::scalar(3), &[1.0, 2.0]).unwrap();
    let chart = build_chart(&c, &[0.0; 4], &ChartOptions::default()).unwrap();
    assert_eq!(chart.validity_radius(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
        assert!(chart.round_trip_error(&q).unwrap() <= 1e-12);
    }
}

#[test]
fn sphere_chart_straightens_the_fiber() {
    let c = sphere(8, 0);
    let e0 = c.layout().unit(0, 0);
    let chart = build_chart(&c, &e0, &ChartOptions::default()).unwrap();
    let (u, t) = chart.forward(&e0).unwrap();
    assert!(u.iter().all(|x| x.abs() < 1e-14) && t[0].abs() < 1e-14);
    assert!(chart.validity_radius() > 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let mut q: Vec<f64> = e0.iter().map(|x| x + 0.3 * rng.gen_range(-1.0..1.0)).collect();
        let n = c.weighted_norm(&q);
        q.iter_mut().for_each(|x| *x /= n);
        if !chart.contains(&q) {
            continue;
        }
        let (_, t) = chart.forward(&q).unwrap();
        assert!(t[0].abs() <= 1e-10);
        assert!(chart.round_trip_error(&q).unwrap() <= 1e-8);
    }
    assert!(matches!(build_chart(&c, &[0.0; 9], &ChartOptions::default()), Err(Error::NotRegular { .. })));
}

#[test]
fn kantorovich_constants_for_spheres() {
    let c = sphere(4, 1);
    assert!((c.jacobian_lipschitz(&[0.0; 5], 1.0).unwrap() - 2.0).abs() < 1e-12);
    let both = spheres_two_level(4);
    let want = libm::sqrt(4.0 + 4.0 * libm::exp(16.0));
    assert!((both.jacobian_lipschitz(&[0.0; 5], 1.0).unwrap() - want).abs() < 1e-9 * want);
    let c0 = sphere(4, 0);
    let k = kantorovich(&c0, &c0.layout().unit(0, 0), &[0.0]).unwrap();
    assert_eq!((k.eta, k.h), (0.0, 0.0));
    assert!(k.passed);
    let poly = quadratic();
    let l = poly.jacobian_lipschitz(&[0.7], 1e-3).unwrap();
    assert!((l - 2.0).abs() < 1e-6);
}

proptest::proptest! {
    #[test]
    fn sphere_newton_decays_quadratically(tail in proptest::collection::vec(-0.4..0.4f64, 4), y0 in 0.6..1.4f64) {
        let c = sphere(4, 0);
        let s = Splitting::coordinates(5, &[0]).unwrap();
        let sol = solve_implicit(&c, &s, &tail, &[y0], &NewtonOptions::default()).unwrap();
        let exact = libm::sqrt(1.0 - tail.iter().map(|x| x * x).sum::<f64>());
        proptest::prop_assert!((sol.y[0] - exact).abs() < 1e-12);
        let errs: Vec<f64> = sol.iterates.iter().map(|y| (y[0] - exact).abs()).collect();
        for w in errs.windows(2) {
            if w[0] < 0.1 {
                proptest::prop_assert!(w[1] <= 2.0 * w[0] * w[0] + 1e-15);
            }
        }
    }
}
