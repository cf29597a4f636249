//! 4-index coefficient tensors `M_{ijkl}` and the forms they define on
//! matrices and vector-valued matrices.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};
use crate::linalg::{c64, svd, CMatrix, MatrixExt, C64, RMatrix};
use crate::vecmat::VecMat;

const DENSE_CACHE_MAX_N: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

pub type Index4 = [usize; 4];

#[derive(Clone)]
pub struct Tensor4 {
    n: usize,
    field: Field,
    entries: Vec<(Index4, C64)>,
    dense: OnceLock<Vec<C64>>,
}

impl fmt::Debug for Tensor4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor4")
            .field("n", &self.n)
            .field("field", &self.field)
            .field("entries", &self.entries)
            .finish()
    }
}

impl PartialEq for Tensor4 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.field == other.field && self.entries == other.entries
    }
}

fn flat(n: usize, [i, j, k, l]: Index4) -> usize {
    ((i * n + j) * n + k) * n + l
}

fn unflat(n: usize, mut p: usize) -> Index4 {
    let l = p % n;
    p /= n;
    let k = p % n;
    p /= n;
    let j = p % n;
    [p / n, j, k, l]
}

impl Tensor4 {
    /// Builds a tensor from explicit entries. Duplicated indices are rejected.
    pub fn new(n: usize, field: Field, entries: impl IntoIterator<Item = (Index4, C64)>) -> Result<Self> {
        if n == 0 {
            return Err(domain("tensor side must be positive"));
        }
        let mut list = Vec::new();
        for (idx, v) in entries {
            if idx.iter().any(|&x| x >= n) {
                return Err(shape(format!("index {idx:?} out of range for n = {n}")));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(domain(format!("non-finite value at {idx:?}")));
            }
            if field == Field::Real && v.im != 0.0 {
                return Err(domain(format!("imaginary part at {idx:?} in a real tensor")));
            }
            list.push((idx, v));
        }
        list.sort_by_key(|(idx, _)| *idx);
        if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Ingest(format!("duplicate entry {:?}", w[0].0)));
        }
        list.retain(|(_, v)| *v != c64(0.0, 0.0));
        Ok(Self { n, field, entries: list, dense: OnceLock::new() })
    }

    pub fn zeros(n: usize, field: Field) -> Self {
        Self { n, field, entries: Vec::new(), dense: OnceLock::new() }
    }

    /// Builds a tensor from a dense row-major array of length `n^4`.
    pub fn from_dense(n: usize, field: Field, data: &[C64]) -> Result<Self> {
        if data.len() != n.pow(4) {
            return Err(shape(format!("dense data has {} values, expected {}", data.len(), n.pow(4))));
        }
        Self::new(
            n,
            field,
            data.iter().enumerate().filter(|(_, v)| **v != c64(0.0, 0.0)).map(|(p, v)| (unflat(n, p), *v)),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_real(&self) -> bool {
        self.field == Field::Real
    }

    /// Nonzero entries in lexicographic index order.
    pub fn entries(&self) -> &[(Index4, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn dense_cache(&self) -> Option<&[C64]> {
        if self.n > DENSE_CACHE_MAX_N {
            return None;
        }
        Some(self.dense.get_or_init(|| self.to_dense()))
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut data = vec![c64(0.0, 0.0); self.n.pow(4)];
        for (idx, v) in &self.entries {
            data[flat(self.n, *idx)] = *v;
        }
        data
    }

    pub fn get(&self, idx: Index4) -> C64 {
        if let Some(d) = self.dense_cache() {
            return d[flat(self.n, idx)];
        }
        match self.entries.binary_search_by_key(&idx, |(i, _)| *i) {
            Ok(p) => self.entries[p].1,
            Err(_) => c64(0.0, 0.0),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `M_{ijkl} = conj(M_{jilk})` for every index, compared exactly.
    pub fn is_hermitian(&self) -> bool {
        self.entries.iter().all(|&([i, j, k, l], v)| self.get([j, i, l, k]) == v.conj())
    }

    pub fn is_hermitian_tol(&self, tol: f64) -> bool {
        self.entries.iter().all(|&([i, j, k, l], v)| (self.get([j, i, l, k]) - v.conj()).norm() <= tol)
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        let field = if alpha.im == 0.0 { self.field } else { Field::Complex };
        Self::new(self.n, field, self.entries.iter().map(|(i, v)| (*i, v * alpha))).expect("scaling keeps entries valid")
    }

    /// `M(A, B) = Σ M_{ijkl} A_{ij} conj(B_{kl})`.
    pub fn evaluate_matrices(&self, a: &CMatrix, b: &CMatrix) -> Result<C64> {
        let n = self.n;
        if a.shape() != (n, n) || b.shape() != (n, n) {
            return Err(shape(format!(
                "expected {n}x{n} matrices, got {:?} and {:?}",
                a.shape(),
                b.shape()
            )));
        }
        Ok(self.entries.iter().map(|&([i, j, k, l], v)| v * a[(i, j)] * b[(k, l)].conj()).sum())
    }

    /// `M(X, Y) = Σ M_{ijkl} <X_{ij}, Y_{kl}>`.
    pub fn evaluate(&self, x: &VecMat, y: &VecMat) -> Result<C64> {
        let n = self.n;
        if x.n() != n || y.n() != n || x.d() != y.d() {
            return Err(shape(format!(
                "tensor side {n} with vector matrices ({}, d={}) and ({}, d={})",
                x.n(),
                x.d(),
                y.n(),
                y.d()
            )));
        }
        Ok(self
            .entries
            .iter()
            .map(|&([i, j, k, l], v)| {
                let s: C64 = x.entry(i, j).iter().zip(y.entry(k, l)).map(|(p, q)| p * q.conj()).sum();
                v * s
            })
            .sum())
    }

    /// `N_{ij} = Σ_{kl} M_{ijkl} conj(B_{kl})`, so that `M(A, B) = Σ A_{ij} N_{ij}`.
    pub fn contract_right(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.n;
        if b.shape() != (n, n) {
            return Err(shape(format!("expected {n}x{n} matrix, got {:?}", b.shape())));
        }
        let mut out = CMatrix::zeros(n, n);
        for &([i, j, k, l], v) in &self.entries {
            out[(i, j)] += v * b[(k, l)].conj();
        }
        Ok(out)
    }

    /// `N_{kl} = Σ_{ij} M_{ijkl} A_{ij}`, so that `M(A, B) = Σ N_{kl} conj(B_{kl})`.
    pub fn contract_left(&self, a: &CMatrix) -> Result<CMatrix> {
        let n = self.n;
        if a.shape() != (n, n) {
            return Err(shape(format!("expected {n}x{n} matrix, got {:?}", a.shape())));
        }
        let mut out = CMatrix::zeros(n, n);
        for &([i, j, k, l], v) in &self.entries {
            out[(k, l)] += v * a[(i, j)];
        }
        Ok(out)
    }

    /// `M - alpha * (conj(A) ⊗ B)`, the residual after removing a rank-one term.
    pub fn minus_product(&self, alpha: C64, a: &CMatrix, b: &CMatrix) -> Result<Self> {
        let n = self.n;
        if a.shape() != (n, n) || b.shape() != (n, n) {
            return Err(shape("term matrices must be n x n"));
        }
        let mut data = self.to_dense();
        for (p, slot) in data.iter_mut().enumerate() {
            let [i, j, k, l] = unflat(n, p);
            *slot -= alpha * a[(i, j)].conj() * b[(k, l)];
        }
        let real = self.is_real() && alpha.im == 0.0 && a.iter().chain(b.iter()).all(|z| z.im == 0.0);
        Self::from_dense(n, if real { Field::Real } else { Field::Complex }, &data)
    }

    /// The instance `M_{0jj0} = 1`: `Opt_C = 1` while the nc norm is at least `2n/(n+1)`.
    pub fn haagerup(n: usize) -> Self {
        Self::new(n, Field::Real, (0..n).map(|j| ([0, j, j, 0], c64(1.0, 0.0)))).expect("valid indices")
    }

    /// `alpha * conj(A) ⊗ B`, for which `M(A, B) = alpha * n^2` when `A`, `B` are unitary.
    pub fn rank_one(alpha: C64, a: &CMatrix, b: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        let zero = Self::zeros(n, Field::Complex);
        zero.minus_product(-alpha, a, b)
    }
}

/// `M_{iijj} = A_{ij}`: the classical bilinear form `Σ A_{ij} x_i y_j` as a tensor.
pub fn grothendieck_embed(a: &RMatrix) -> Result<Tensor4> {
    if !a.is_square() {
        return Err(shape("grothendieck_embed needs a square matrix"));
    }
    let n = a.nrows();
    Tensor4::new(
        n,
        Field::Real,
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| ([i, i, j, j], c64(a[(i, j)], 0.0))),
    )
}

/// The matrix `A` with `|M(A, B)|` maximal among contractions, and that maximum
/// (the nuclear norm of `contract_right(B)`).
pub fn contract_best_response(m: &Tensor4, b: &CMatrix) -> Result<(CMatrix, f64)> {
    let nmat = m.contract_right(b)?;
    let d = svd(&nmat);
    let a = d.unitary().map(|z| z.conj());
    Ok((a, d.s.iter().sum()))
}

/// The matrix `B` with `|M(A, B)|` maximal among contractions, and that maximum.
pub fn contract_best_response_right(m: &Tensor4, a: &CMatrix) -> Result<(CMatrix, f64)> {
    let d = svd(&m.contract_left(a)?);
    Ok((d.unitary(), d.s.iter().sum()))
}

/// Nuclear norm of the contraction, i.e. `max_A |M(A, B)|`.
pub fn best_response_value(m: &Tensor4, b: &CMatrix) -> Result<f64> {
    Ok(m.contract_right(b)?.nuclear_norm())
}
