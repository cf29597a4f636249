//! Rounding of vector-valued unitaries to unitaries: project onto a random
//! `z ∈ {±1, ±i}^d`, then twist the polar factors by `|X_z|^{it}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};
use crate::linalg::{c64, polar_power, CMatrix, MatrixExt, C64};
use crate::rng::Sampler;
use crate::tensor::Tensor4;
use crate::vecmat::VecMat;

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingSample {
    pub z: Vec<C64>,
    pub t: f64,
}

impl RoundingSample {
    pub fn draw(d: usize, sampler: &mut Sampler) -> Self {
        let z = sampler.fourth_roots(d);
        let t = sampler.secant();
        Self { z, t }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    Unitary,
    Orthogonal,
    HermitianContraction,
    Contraction,
}

#[derive(Clone, Debug)]
pub struct RoundedPair {
    pub a: CMatrix,
    pub b: CMatrix,
    /// `|M(A, B)|`.
    pub value: f64,
    pub kind: PairKind,
}

impl RoundedPair {
    pub fn new(m: &Tensor4, a: CMatrix, b: CMatrix, kind: PairKind) -> Result<Self> {
        let value = m.evaluate_matrices(&a, &b)?.norm();
        Ok(Self { a, b, value, kind })
    }

    /// Whether both matrices satisfy the predicate of `kind` within `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        let check = |m: &CMatrix| match self.kind {
            PairKind::Unitary => m.is_unitary(tol),
            PairKind::Orthogonal => m.is_real_orthogonal(tol),
            PairKind::HermitianContraction => m.is_hermitian(tol) && m.is_contraction(tol),
            PairKind::Contraction => m.is_contraction(tol),
        };
        check(&self.a) && check(&self.b)
    }
}

pub fn sample_secant(sampler: &mut Sampler) -> f64 {
    sampler.secant()
}

fn projections(x: &VecMat, y: &VecMat, z: &[C64]) -> Result<(CMatrix, CMatrix)> {
    if x.n() != y.n() || x.d() != y.d() {
        return Err(shape("rounding needs X and Y of equal shape"));
    }
    let s = c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok((x.project(z)? * s, y.project(z)? * s))
}

/// `A = U_z |X_z|^{it}`, `B = V_z |Y_z|^{-it}` with `X_z = <X, z>/√2`.
pub fn round_complex(m: &Tensor4, x: &VecMat, y: &VecMat, sample: &RoundingSample) -> Result<RoundedPair> {
    let (xz, yz) = projections(x, y, &sample.z)?;
    RoundedPair::new(m, polar_power(&xz, sample.t), polar_power(&yz, -sample.t), PairKind::Unitary)
}

/// One rounded pair per trial, trial `i` using stream `i` of `seed`.
pub fn round_complex_trials(m: &Tensor4, x: &VecMat, y: &VecMat, trials: usize, seed: u64) -> Result<Vec<RoundedPair>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = Sampler::stream(seed, i);
            round_complex(m, x, y, &RoundingSample::draw(x.d(), &mut s))
        })
        .collect()
}

/// First pair of maximal value; `None` for an empty list.
pub fn best_pair(pairs: Vec<RoundedPair>) -> Option<RoundedPair> {
    let mut best: Option<RoundedPair> = None;
    for p in pairs {
        if best.as_ref().is_none_or(|b| p.value > b.value) {
            best = Some(p);
        }
    }
    best
}

pub fn round_complex_best_of(m: &Tensor4, x: &VecMat, y: &VecMat, trials: usize, seed: u64) -> Result<RoundedPair> {
    let pairs = round_complex_trials(m, x, y, trials.max(1), seed)?;
    Ok(best_pair(pairs).expect("at least one trial"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::tensor::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_twist_gives_polar_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let x = VecMat::random(&mut rng, 3, 2);
        let y = VecMat::random(&mut rng, 3, 2);
        let m = Tensor4::haagerup(3);
        let sample = RoundingSample { z: vec![c64(0.0, 1.0), c64(-1.0, 0.0)], t: 0.0 };
        let pair = round_complex(&m, &x, &y, &sample).unwrap();
        let (xz, _) = projections(&x, &y, &sample.z).unwrap();
        let (q, _) = crate::linalg::polar(&xz).unwrap();
        assert!((pair.a - q).max_abs() < 1e-10);
        assert!(pair.b.is_unitary(1e-10));
    }

    #[test]
    fn scalar_case_is_unimodular() {
        let m = Tensor4::new(1, Field::Complex, [([0, 0, 0, 0], c64(1.0, 0.0))]).unwrap();
        let x = VecMat::from_matrix(&identity(1));
        for k in 0..4 {
            let sample = RoundingSample { z: vec![crate::rng::quarter_turn(k)], t: 0.37 };
            let pair = round_complex(&m, &x, &x, &sample).unwrap();
            assert!((pair.a[(0, 0)].norm() - 1.0).abs() < 1e-12);
            assert!((pair.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn best_of_is_monotone_in_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = VecMat::random(&mut rng, 2, 3);
        let y = VecMat::random(&mut rng, 2, 3);
        let m = Tensor4::haagerup(2);
        let one = round_complex_best_of(&m, &x, &y, 1, 9).unwrap();
        let single = round_complex(&m, &x, &y, &RoundingSample::draw(3, &mut Sampler::stream(9, 0))).unwrap();
        assert_eq!(one.value, single.value);
        let mut last = 0.0;
        for trials in [1, 5, 50, 200] {
            let v = round_complex_best_of(&m, &x, &y, trials, 9).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn outputs_unitary_even_when_degenerate() {
        let x = VecMat::zeros(3, 2);
        let m = Tensor4::haagerup(3);
        let pair = round_complex(&m, &x, &x, &RoundingSample { z: vec![c64(1.0, 0.0); 2], t: 1.0 }).unwrap();
        assert!(pair.is_feasible(1e-8));
    }
}
