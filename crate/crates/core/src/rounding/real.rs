//! Direct rounding of vector-valued orthogonal matrices and the greedy
//! conversion of real contractions into orthogonal matrices.

use crate::error::{domain, Result};
use crate::linalg::{c64, is_real_matrix, svd, CMatrix, MatrixExt};
use crate::rng::Sampler;
use crate::rounding::complex::{PairKind, RoundedPair};
use crate::tensor::{contract_best_response, Tensor4};
use crate::vecmat::VecMat;

pub const TAU: f64 = 0.866_025_403_784_438_6;

/// Singular values of `y` capped at `tau`.
pub fn truncate(y: &CMatrix, tau: f64) -> CMatrix {
    let d = svd(y);
    let s: Vec<f64> = d.s.iter().map(|&v| v.min(tau)).collect();
    d.compose(&s)
}

pub fn round_real_direct(m: &Tensor4, x: &VecMat, y: &VecMat, sampler: &mut Sampler) -> Result<RoundedPair> {
    if !m.is_real() || !x.is_real() || !y.is_real() {
        return Err(domain("direct real rounding needs real inputs"));
    }
    if x.d() != y.d() || x.n() != m.n() || y.n() != m.n() {
        return Err(crate::error::shape("direct real rounding needs matching shapes"));
    }
    let eps = sampler.signs(y.d());
    let b = truncate(&y.project_real(&eps)?, TAU) * c64(1.0 / TAU, 0.0);
    let (a, _) = contract_best_response(m, &b)?;
    RoundedPair::new(m, a, b, PairKind::Contraction)
}

fn rank_one(d: &crate::linalg::Svd, i: usize) -> CMatrix {
    d.l.column(i) * d.r.column(i).adjoint()
}

/// Orthogonal `U`, `V` with `M(U, V) ≥ |M(A, B)|`, plus the value after each
/// greedy step (starting with the sign-corrected input value).
pub fn to_orthogonal_traced(m: &Tensor4, a: &CMatrix, b: &CMatrix) -> Result<(CMatrix, CMatrix, Vec<f64>)> {
    if !m.is_real() || !is_real_matrix(a) || !is_real_matrix(b) {
        return Err(domain("to_orthogonal needs real inputs"));
    }
    for z in [a, b] {
        if z.op_norm() > 1.0 + 1e-8 {
            return Err(domain("to_orthogonal needs contractions"));
        }
    }
    let value = |p: &CMatrix, q: &CMatrix| -> Result<f64> { Ok(m.evaluate_matrices(p, q)?.re) };
    let mut a = a.clone();
    if value(&a, b)? < 0.0 {
        a = -a;
    }
    let mut trace = vec![value(&a, b)?];
    let da = svd(&a);
    let mut sa = da.s.clone();
    for i in 0..sa.len() {
        let slope = value(&rank_one(&da, i), b)?;
        sa[i] = if slope >= 0.0 { 1.0 } else { -1.0 };
        trace.push(value(&da.compose(&sa), b)?);
    }
    let u = da.compose(&sa);
    let db = svd(b);
    let mut sb = db.s.clone();
    for j in 0..sb.len() {
        let slope = value(&u, &rank_one(&db, j))?;
        sb[j] = if slope >= 0.0 { 1.0 } else { -1.0 };
        trace.push(value(&u, &db.compose(&sb))?);
    }
    let v = db.compose(&sb);
    Ok((u.map(|z| c64(z.re, 0.0)), v.map(|z| c64(z.re, 0.0)), trace))
}

pub fn to_orthogonal(m: &Tensor4, a: &CMatrix, b: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let (u, v, _) = to_orthogonal_traced(m, a, b)?;
    Ok((u, v))
}

pub fn orthogonal_pair(m: &Tensor4, a: &CMatrix, b: &CMatrix) -> Result<RoundedPair> {
    let (u, v) = to_orthogonal(m, a, b)?;
    RoundedPair::new(m, u, v, PairKind::Orthogonal)
}
