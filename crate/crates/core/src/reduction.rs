//! Reductions between real tensors on `O_n` and Hermitian tensors on
//! Hermitian contractions of twice the size.

use crate::error::{domain, shape, Result};
use crate::linalg::{c64, CMatrix, C64};
use crate::tensor::{Field, Tensor4};

/// `M'` on side `2n` with `M'(A, B) = M(Re A_2, Re B_2)` for Hermitian `A`, `B`,
/// where `A_2` is the upper-right `n x n` block.
pub fn real_to_hermitian_tensor(m: &Tensor4) -> Result<Tensor4> {
    if !m.is_real() {
        return Err(domain("real_to_hermitian_tensor needs a real tensor"));
    }
    let n = m.n();
    let mut data = vec![c64(0.0, 0.0); (2 * n).pow(4)];
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * 2 * n + q) * 2 * n + r) * 2 * n + s;
    for &([i, j, k, l], v) in m.entries() {
        let w = v * 0.25;
        for (p, q) in [(i, n + j), (n + j, i)] {
            for (r, s) in [(k, n + l), (n + l, k)] {
                data[idx(p, q, r, s)] += w;
            }
        }
    }
    Tensor4::from_dense(2 * n, Field::Real, &data)
}

/// `ψ(A) = (A1 + A1ᵀ + A4 + A4ᵀ)/4 + i(A2 − A2ᵀ + A3ᵀ − A3)/4` for `A = ((A1, A2), (A3, A4))`.
pub fn psi(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.nrows() % 2 != 0 {
        return Err(shape("psi needs a square matrix of even side"));
    }
    let n = a.nrows() / 2;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        psi_weights(n, i, j).iter().map(|&(p, q, w)| w * a[(p, q)].re).sum()
    }))
}

/// The eight `(p, q, w)` with `ψ(A)_{ij} = Σ w A_{pq}`.
fn psi_weights(n: usize, i: usize, j: usize) -> [(usize, usize, C64); 8] {
    let r = c64(0.25, 0.0);
    let im = c64(0.0, 0.25);
    [
        (i, j, r),
        (j, i, r),
        (n + i, n + j, r),
        (n + j, n + i, r),
        (i, n + j, im),
        (j, n + i, -im),
        (n + j, i, im),
        (n + i, j, -im),
    ]
}

/// The block embedding `((Re X, Im X), (−Im X, Re X))`, inverted by `psi` on Hermitian `X`.
pub fn hermitian_block(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    CMatrix::from_fn(2 * n, 2 * n, |p, q| {
        let z = x[(p % n, q % n)];
        let v = match (p < n, q < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => z.im,
            (false, true) => -z.im,
        };
        c64(v, 0.0)
    })
}

/// Real `M''` on side `2n` with `M''(A, B) = M(ψ(A), ψ(B))` for real `A`, `B`.
pub fn hermitian_to_real_tensor(m: &Tensor4) -> Result<Tensor4> {
    crate::rounding::hermitian::check_hermitian(m)?;
    let n = m.n();
    let side = 2 * n;
    let mut data = vec![c64(0.0, 0.0); side.pow(4)];
    for &([i, j, k, l], v) in m.entries() {
        for (p, q, w) in psi_weights(n, i, j) {
            for (r, s, u) in psi_weights(n, k, l) {
                data[((p * side + q) * side + r) * side + s] += v * w * u.conj();
            }
        }
    }
    let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if data.iter().any(|z| z.im.abs() > 1e-12 * (1.0 + scale)) {
        return Err(domain("tensor is not Hermitian enough for a real reduction"));
    }
    let real: Vec<C64> = data.iter().map(|z| c64(z.re, 0.0)).collect();
    Tensor4::from_dense(side, Field::Real, &real)
}
