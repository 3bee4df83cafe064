mod common;

use common::{brute_force_norm, random_problem};
use pmodulus::catalog::make_parallel;
use pmodulus::oracle::{solve_discrete, DiscreteModulusProblem, SolverSettings};
use pmodulus::{
    generalized_norm, modulus_p, verify_factorization, BoxDomain, Exponent, Matrix,
    QuadratureScheme,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-2.0f64..2.0, r * c).prop_map(move |d| Matrix::new(r, c, d).unwrap())
    })
}

fn rotation(theta: f64, n: usize, i: usize, j: usize) -> Matrix {
    let mut q = Matrix::identity(n);
    let (s, c) = theta.sin_cos();
    q[(i, i)] = c;
    q[(j, j)] = c;
    q[(i, j)] = -s;
    q[(j, i)] = s;
    q
}

fn tight() -> SolverSettings {
    SolverSettings {
        tolerance: 1e-9,
        max_iterations: 2_000,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_matches_minor_enumeration(a in matrix(6, 6)) {
        let fast = generalized_norm(&a);
        let slow = brute_force_norm(&a);
        prop_assert!((fast - slow).abs() <= 1e-10 * slow.max(1.0), "{fast} vs {slow}");
    }

    #[test]
    fn norm_is_transpose_invariant(a in matrix(5, 5)) {
        let x = generalized_norm(&a);
        prop_assert!((x - generalized_norm(&a.transpose())).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn norm_is_invariant_under_left_rotations(a in matrix(5, 3), theta in 0.0f64..6.3, seed in 0usize..100) {
        let n = a.rows();
        prop_assume!(n >= 2 && n >= a.cols());
        let (i, j) = (seed % n, (seed / n + 1 + seed % n) % n);
        prop_assume!(i != j);
        let rotated = &rotation(theta, n, i, j) * &a;
        let x = generalized_norm(&a);
        prop_assert!((x - generalized_norm(&rotated)).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn factorization_identity(seed in any::<u64>(), n in 2usize..6, m_frac in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::well_conditioned(&mut rng, n);
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let (lhs, rhs) = verify_factorization(&a, m.min(n - 1)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs);
    }

    #[test]
    fn parallel_reciprocity(a in 0.2f64..3.0, b in 0.2f64..3.0, p in 1.2f64..5.0) {
        let entry = make_parallel(BoxDomain::interval(0.0, a).unwrap(), BoxDomain::interval(0.0, b).unwrap());
        let e = Exponent::new(p).unwrap();
        let quad = QuadratureScheme::gauss_legendre(2, 1).unwrap();
        let m_p = modulus_p(&entry.family, e, &quad).unwrap().modulus;
        let m_q = modulus_p(&entry.transverse().unwrap().family, e.conjugate(), &quad).unwrap().modulus;
        prop_assert!((m_p.powf(1.0 / p) * m_q.powf(1.0 / e.q()) - 1.0).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn removing_surfaces_never_increases_the_modulus(seed in any::<u64>(), p in 1.3f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, p);
        let full = solve_discrete(&problem, &tight()).unwrap().objective;
        let kept: Vec<usize> = (0..problem.surfaces().len()).step_by(2).collect();
        let part = solve_discrete(&problem.with_surfaces(&kept).unwrap(), &tight()).unwrap().objective;
        prop_assert!(part <= full * (1.0 + 1e-6), "{part} > {full}");
    }

    #[test]
    fn weight_scaling(seed in any::<u64>(), p in 1.3f64..4.0, lambda in 0.2f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, p);
        let base = solve_discrete(&problem, &tight()).unwrap().objective;
        let scaled = solve_discrete(&problem.scaled_weights(lambda).unwrap(), &tight()).unwrap().objective;
        prop_assert!((scaled - lambda.powf(-p) * base).abs() <= 1e-6 * scaled);
    }

    #[test]
    fn union_is_subadditive(seed in any::<u64>(), p in 1.3f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, p);
        let s = problem.surfaces().len();
        let first: Vec<usize> = (0..s / 2).collect();
        let second: Vec<usize> = (s / 2..s).collect();
        let solve = |idx: &[usize]| solve_discrete(&problem.with_surfaces(idx).unwrap(), &tight()).unwrap().objective;
        let whole = solve_discrete(&problem, &tight()).unwrap().objective;
        prop_assert!(whole <= (solve(&first) + solve(&second)) * (1.0 + 1e-6));
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), p in 1.1f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, p);
        let text = problem.to_text();
        let back = DiscreteModulusProblem::from_text(&text).unwrap();
        prop_assert_eq!(&back, &problem);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn conjugate_exponent_sweep() {
    for i in 0..200 {
        let p = 1.0 + 0.05 * (i + 1) as f64;
        let e = Exponent::new(p).unwrap();
        assert!((1.0 / e.p() + 1.0 / e.q() - 1.0).abs() <= 1e-14);
        assert!((e.conjugate().conjugate().p() - p).abs() <= 1e-12 * p);
    }
    assert!(Exponent::new(1.0).is_err());
    assert!(Exponent::new(f64::NAN).is_err());
    assert!(Exponent::new(f64::INFINITY).is_err());
}
