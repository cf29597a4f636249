use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncgk::linalg::{identity, svd};
use ncgk::reduction::psi;
use ncgk::rounding::{round_complex, to_orthogonal_traced, RoundingSample};
use ncgk::{
    c64, contract_best_response, solve_relaxation, CMatrix, Field, MatrixExt, RelaxationMode, Sampler,
    SolverOptions, Tensor4, VecMat, C64,
};

fn tensor(seed: u64, n: usize, field: Field) -> Tensor4 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<C64> = (0..n.pow(4))
        .map(|_| match field {
            Field::Real => c64(r.random_range(-1.0..1.0), 0.0),
            Field::Complex => c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
        })
        .collect();
    Tensor4::from_dense(n, field, &data).unwrap()
}

fn matrix(r: &mut ChaCha8Rng, n: usize, real: bool) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c64(r.random_range(-1.0..1.0), if real { 0.0 } else { r.random_range(-1.0..1.0) }))
}

fn unitary(r: &mut ChaCha8Rng, n: usize, real: bool) -> CMatrix {
    svd(&matrix(r, n, real)).unitary()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn form_is_linear_then_antilinear(seed in any::<u64>(), n in 1usize..4) {
        let m = tensor(seed, n, Field::Complex);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let (a1, a2, b) = (matrix(&mut r, n, false), matrix(&mut r, n, false), matrix(&mut r, n, false));
        let s = c64(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let lhs = m.evaluate_matrices(&(&a1 * s + &a2), &b).unwrap();
        let rhs = m.evaluate_matrices(&a1, &b).unwrap() * s + m.evaluate_matrices(&a2, &b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
        let lhs = m.evaluate_matrices(&b, &(&a1 * s)).unwrap();
        let rhs = m.evaluate_matrices(&b, &a1).unwrap() * s.conj();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn best_response_dominates_unitaries(seed in any::<u64>(), n in 1usize..4) {
        let m = tensor(seed, n, Field::Complex);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let b = unitary(&mut r, n, false);
        let (a, value) = contract_best_response(&m, &b).unwrap();
        prop_assert!(a.is_unitary(1e-9));
        prop_assert!((m.evaluate_matrices(&a, &b).unwrap().re - value).abs() < 1e-9);
        for _ in 0..8 {
            let other = unitary(&mut r, n, false);
            prop_assert!(m.evaluate_matrices(&other, &b).unwrap().norm() <= value + 1e-9);
        }
    }

    #[test]
    fn psi_is_a_contraction(seed in any::<u64>(), n in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = matrix(&mut r, 2 * n, true);
        prop_assert!(psi(&a).unwrap().op_norm() <= a.op_norm() + 1e-12);
    }

    #[test]
    fn greedy_rounding_never_decreases(seed in any::<u64>(), n in 1usize..4) {
        let m = tensor(seed, n, Field::Real);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let scale = |x: CMatrix| { let s = x.op_norm(); x * c64(1.0 / s, 0.0) };
        let (a, b) = (scale(matrix(&mut r, n, true)), scale(matrix(&mut r, n, true)));
        let (oa, ob, trace) = to_orthogonal_traced(&m, &a, &b).unwrap();
        prop_assert!(oa.is_real_orthogonal(1e-9) && ob.is_real_orthogonal(1e-9));
        prop_assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rounded_matrices_are_unitary(seed in any::<u64>(), n in 1usize..4) {
        let m = tensor(seed, n, Field::Complex);
        let sol = solve_relaxation(&m, RelaxationMode::UnitaryComplex, &SolverOptions::default()).unwrap();
        let mut s = Sampler::new(seed);
        for _ in 0..10 {
            let pair = round_complex(&m, &sol.x, &sol.y, &RoundingSample::draw(sol.x.d(), &mut s)).unwrap();
            prop_assert!(pair.is_feasible(1e-8));
            prop_assert!(pair.value <= sol.upper_bound * (1.0 + 1e-6) + 1e-9);
        }
    }

    #[test]
    fn relaxation_bounds_every_unitary_pair(seed in any::<u64>(), n in 1usize..4) {
        let m = tensor(seed, n, Field::Complex);
        let sol = solve_relaxation(&m, RelaxationMode::UnitaryComplex, &SolverOptions::default()).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            let b = unitary(&mut r, n, false);
            let (_, v) = contract_best_response(&m, &b).unwrap();
            prop_assert!(v <= sol.upper_bound * (1.0 + 1e-6) + 1e-9);
        }
        let id = identity(n);
        prop_assert!(m.evaluate_matrices(&id, &id).unwrap().norm() <= sol.upper_bound * (1.0 + 1e-6) + 1e-9);
    }

    #[test]
    fn relaxation_is_feasible(seed in any::<u64>(), n in 1usize..4) {
        let m = tensor(seed, n, Field::Complex);
        let sol = solve_relaxation(&m, RelaxationMode::UnitaryComplex, &SolverOptions::default()).unwrap();
        for x in [&sol.x, &sol.y] {
            let (xx, x_x) = x.gram_products();
            prop_assert!((xx - identity(n)).max_abs() < 1e-6);
            prop_assert!((x_x - identity(n)).max_abs() < 1e-6);
        }
        let value = m.evaluate(&sol.x, &sol.y).unwrap();
        prop_assert!((value - c64(sol.value, 0.0)).norm() < 1e-9 * (1.0 + sol.value));
        prop_assert!(sol.value <= sol.upper_bound + 1e-9);
        prop_assert!(sol.upper_bound - sol.value < 1e-4 * (1.0 + sol.upper_bound));
    }
}

#[test]
fn vector_matrix_round_trips_components() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let x = VecMat::random(&mut r, 3, 4);
    let back = VecMat::from_components(&x.components()).unwrap();
    assert_eq!(back.raw(), x.raw());
}
