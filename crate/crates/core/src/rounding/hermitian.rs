//! Rounding to Hermitian contractions: round to unitaries, align the phase,
//! then replace each eigenvalue `e^{iθ}` by a Krivine-rounded real in `[-1, 1]`.

use crate::error::{domain, Result};
use crate::linalg::{c64, normal_eigen, phase, CMatrix};
use crate::rng::Sampler;
use crate::rounding::complex::{round_complex, PairKind, RoundedPair, RoundingSample};
use crate::rounding::krivine::KrivineRounder;
use crate::tensor::Tensor4;
use crate::vecmat::VecMat;

fn unit(values: &[crate::linalg::C64]) -> Vec<crate::linalg::C64> {
    values.iter().map(|&v| phase(v)).collect()
}

fn rebuild(vectors: &CMatrix, values: &[f64]) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|e| *e *= v);
    }
    let h = scaled * vectors.adjoint();
    (&h + h.adjoint()) * c64(0.5, 0.0)
}

pub fn check_hermitian(m: &Tensor4) -> Result<()> {
    let scale = m.entries().iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    if m.is_hermitian_tol(1e-12 * (1.0 + scale)) {
        Ok(())
    } else {
        Err(domain("Hermitian rounding needs a Hermitian tensor"))
    }
}

pub fn round_hermitian_with(
    m: &Tensor4,
    x: &VecMat,
    y: &VecMat,
    rounder: &KrivineRounder,
    sampler: &mut Sampler,
) -> Result<RoundedPair> {
    check_hermitian(m)?;
    let sample = RoundingSample::draw(x.d(), sampler);
    let pair = round_complex(m, x, y, &sample)?;
    let v = m.evaluate_matrices(&pair.a, &pair.b)?;
    let a = if v.norm() < 1e-14 { pair.a } else { pair.a * phase(v).conj() };
    let (xs, u) = normal_eigen(&a);
    let (ys, w) = normal_eigen(&pair.b);
    let (lam, mu) = rounder.round(&unit(&xs), &unit(&ys), sampler)?;
    RoundedPair::new(m, rebuild(&u, &lam), rebuild(&w, &mu), PairKind::HermitianContraction)
}

pub fn round_hermitian(m: &Tensor4, x: &VecMat, y: &VecMat, eps: f64, sampler: &mut Sampler) -> Result<RoundedPair> {
    round_hermitian_with(m, x, y, &KrivineRounder::new(eps)?, sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::MatrixExt;
    use crate::sdp::{solve_relaxation, RelaxationMode, SolverOptions};
    use crate::tensor::tests::{random_hermitian_tensor, random_tensor};
    use crate::tensor::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn outputs_are_hermitian_contractions() {
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let m = random_hermitian_tensor(&mut rng, 2);
        let sol = solve_relaxation(&m, RelaxationMode::UnitaryComplex, &SolverOptions::default()).unwrap();
        let rounder = KrivineRounder::new(0.05).unwrap();
        for i in 0..20 {
            let mut s = Sampler::stream(9, i);
            let p = round_hermitian_with(&m, &sol.x, &sol.y, &rounder, &mut s).unwrap();
            assert_eq!(p.kind, PairKind::HermitianContraction);
            assert!(p.a.is_hermitian(1e-12) && p.b.is_hermitian(1e-12));
            assert!(p.a.op_norm() <= 1.0 + 1e-12 && p.b.op_norm() <= 1.0 + 1e-12);
            assert!(m.evaluate_matrices(&p.a, &p.b).unwrap().im.abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let m = random_tensor(&mut rng, 2, Field::Complex);
        let x = VecMat::random(&mut rng, 2, 3);
        assert!(round_hermitian(&m, &x, &x, 0.1, &mut Sampler::new(0)).is_err());
    }
}
