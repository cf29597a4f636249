use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncgk::apps::{solve_bilinear, stiefel_defect};
use ncgk::linalg::svd;
use ncgk::oracle::local_opt_complex;
use ncgk::{
    c64, decompose, embed_bilinear, ptas_dense, BilinearForm, CMatrix, Coefficient, Field, PipelineConfig, PtasConfig, RMatrix,
    Tensor4, C64,
};

fn unitary(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    svd(&CMatrix::from_fn(n, n, |_, _| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))).unitary()
}

fn planted(seed: u64) -> Tensor4 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = 2;
    let mut data = vec![c64(0.0, 0.0); n.pow(4)];
    for alpha in [c64(1.0, 0.0), c64(0.0, 0.5)] {
        let t = Tensor4::rank_one(alpha, &unitary(&mut r, n), &unitary(&mut r, n)).unwrap();
        data.iter_mut().zip(t.to_dense()).for_each(|(d, v)| *d += v);
    }
    data.iter_mut().for_each(|d| *d += c64(r.random_range(-0.02..0.02), r.random_range(-0.02..0.02)));
    Tensor4::from_dense(n, Field::Complex, &data).unwrap()
}

#[test]
fn ptas_matches_local_search_on_dense_instances() {
    let eps = 0.3;
    for seed in 0..2 {
        let m = planted(seed);
        let config = PtasConfig::default();
        let lb = decompose(&m, eps, &config.decompose).unwrap().lower_bound;
        let kappa = lb / (2.0 * m.frobenius());
        let out = ptas_dense(&m, kappa, eps, &config).unwrap();
        let opt = local_opt_complex(&m, 20, seed).unwrap();
        assert!(out.value >= (1.0 - 1.5 * eps) * opt, "seed {seed}: {} vs {opt}", out.value);
        assert!(out.value <= opt + 1e-6);
    }
}

fn vector_form(r: &mut ChaCha8Rng, p: usize, q: usize) -> (BilinearForm, RMatrix) {
    let c = RMatrix::from_fn(p, q, |_, _| r.random_range(-1.0..1.0));
    let coeffs = (0..p)
        .flat_map(|i| (0..q).map(move |j| (i, j)))
        .map(|(i, j)| Coefficient { left: (0, 0, i), right: (0, 0, j), value: c[(i, j)] })
        .collect();
    (BilinearForm::new(vec![(1, p)], vec![(1, q)], coeffs).unwrap(), c)
}

#[test]
fn embedding_reproduces_the_form() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let left = vec![(1, 2), (2, 1)];
    let right = vec![(2, 2)];
    let coeffs = (0..12)
        .map(|k| {
            let l = if k % 2 == 0 { (0, 0, r.random_range(0..2)) } else { (1, r.random_range(0..2), 0) };
            Coefficient { left: l, right: (0, r.random_range(0..2), r.random_range(0..2)), value: r.random_range(-1.0..1.0) }
        })
        .collect();
    let f = BilinearForm::new(left.clone(), right.clone(), coeffs).unwrap();
    let (m, maps) = embed_bilinear(&f).unwrap();
    assert_eq!(m.field(), Field::Real);
    for _ in 0..10 {
        let us: Vec<RMatrix> = left.iter().map(|&(a, b)| RMatrix::from_fn(a, b, |_, _| r.random_range(-1.0..1.0))).collect();
        let vs: Vec<RMatrix> = right.iter().map(|&(a, b)| RMatrix::from_fn(a, b, |_, _| r.random_range(-1.0..1.0))).collect();
        let place = |blocks: &[RMatrix], at: &[(usize, usize)]| {
            let mut out = CMatrix::zeros(maps.t, maps.t);
            for (b, &(r0, c0)) in blocks.iter().zip(at) {
                for (i, j) in (0..b.nrows()).flat_map(|i| (0..b.ncols()).map(move |j| (i, j))) {
                    out[(r0 + i, c0 + j)] = C64::new(b[(i, j)], 0.0);
                }
            }
            out
        };
        let value = m.evaluate_matrices(&place(&us, &maps.left), &place(&vs, &maps.right)).unwrap();
        assert!((value.re - f.evaluate(&us, &vs)).abs() < 1e-12);
        assert!(value.im.abs() < 1e-12);
    }
}

#[test]
fn bilinear_solver_against_top_singular_value() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let (f, c) = vector_form(&mut r, 2, 3);
        let opt = c.singular_values()[0];
        let sol = solve_bilinear(&f, &PipelineConfig { trials: 64, ..Default::default() }).unwrap();
        assert!(sol.left.iter().chain(&sol.right).all(|b| stiefel_defect(b) < 1e-8));
        assert!(sol.value >= opt / (2.0 * SQRT_2) - 1e-9, "{} vs {opt}", sol.value);
        assert!(sol.value <= opt + 1e-9);
        assert!(sol.upper_bound >= opt - 1e-6);
    }
}
