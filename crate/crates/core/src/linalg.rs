//! Dense complex linear algebra on top of nalgebra: polar factors, spectral
//! powers, and the real fast paths that keep real inputs real.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{domain, shape, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

/// Singular values (and eigenvalues of PSD factors) below this are treated as zero.
pub const ZERO_SINGULAR: f64 = 1e-12;

pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn is_real_matrix(a: &CMatrix) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

pub fn real_part(a: &CMatrix) -> RMatrix {
    a.map(|z| z.re)
}

pub fn complexify(a: &RMatrix) -> CMatrix {
    a.map(|x| c64(x, 0.0))
}

pub trait MatrixExt {
    fn op_norm(&self) -> f64;
    fn nuclear_norm(&self) -> f64;
    fn max_abs(&self) -> f64;
    fn is_unitary(&self, tol: f64) -> bool;
    fn is_real_orthogonal(&self, tol: f64) -> bool;
    fn is_hermitian(&self, tol: f64) -> bool;
    fn is_contraction(&self, tol: f64) -> bool;
}

impl MatrixExt for CMatrix {
    fn op_norm(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        singular_values(self).into_iter().fold(0.0, f64::max)
    }

    fn nuclear_norm(&self) -> f64 {
        singular_values(self).into_iter().sum()
    }

    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let id = CMatrix::identity(self.nrows(), self.ncols());
        (self.adjoint() * self - &id).max_abs() <= tol && (self * self.adjoint() - id).max_abs() <= tol
    }

    fn is_real_orthogonal(&self, tol: f64) -> bool {
        self.iter().all(|z| z.im.abs() <= tol) && self.is_unitary(tol)
    }

    fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && (self - self.adjoint()).max_abs() <= tol
    }

    fn is_contraction(&self, tol: f64) -> bool {
        self.op_norm() <= 1.0 + tol
    }
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if is_real_matrix(a) {
        real_part(a).singular_values().iter().copied().collect()
    } else {
        a.singular_values().iter().copied().collect()
    }
}

/// `a = l * diag(s) * r^*`, with `l`, `r` having `min(rows, cols)` columns.
#[derive(Clone, Debug)]
pub struct Svd {
    pub l: CMatrix,
    pub s: Vec<f64>,
    pub r: CMatrix,
}

pub fn svd(a: &CMatrix) -> Svd {
    if is_real_matrix(a) {
        let d = real_part(a).svd(true, true);
        Svd {
            l: complexify(&d.u.expect("u requested")),
            s: d.singular_values.iter().copied().collect(),
            r: complexify(&d.v_t.expect("v_t requested").transpose()),
        }
    } else {
        let d = a.clone().svd(true, true);
        Svd {
            l: d.u.expect("u requested"),
            s: d.singular_values.iter().copied().collect(),
            r: d.v_t.expect("v_t requested").adjoint(),
        }
    }
}

impl Svd {
    pub fn compose(&self, s: &[f64]) -> CMatrix {
        let mut l = self.l.clone();
        for (j, &v) in s.iter().enumerate() {
            l.column_mut(j).scale_mut(v);
        }
        l * self.r.adjoint()
    }

    fn compose_complex(&self, s: &[C64]) -> CMatrix {
        let mut l = self.l.clone();
        for (j, &v) in s.iter().enumerate() {
            l.column_mut(j).iter_mut().for_each(|e| *e *= v);
        }
        l * self.r.adjoint()
    }

    /// The unitary factor `L R^*`.
    pub fn unitary(&self) -> CMatrix {
        &self.l * self.r.adjoint()
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
/// Real symmetric input yields real eigenvectors.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let (values, vectors) = if is_real_matrix(h) {
        let r = real_part(h);
        let e = SymmetricEigen::new((&r + r.transpose()) * 0.5);
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), complexify(&e.eigenvectors))
    } else {
        let e = SymmetricEigen::new((h + h.adjoint()) * c64(0.5, 0.0));
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| vectors.column(i).into_owned()).collect();
    (sorted, CMatrix::from_columns(&cols))
}

pub fn symmetric_eigen_real(h: &RMatrix) -> (Vec<f64>, RMatrix) {
    let e = SymmetricEigen::new((h + h.transpose()) * 0.5);
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

pub fn min_eigenvalue(h: &CMatrix) -> f64 {
    hermitian_eigen(h).0.last().copied().unwrap_or(0.0)
}

/// Polar decomposition `a = q p` with `q` unitary and `p = |a|`.
pub fn polar(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if !a.is_square() {
        return Err(shape(format!("polar needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let d = svd(a);
    let p = d.r.clone() * CMatrix::from_diagonal(&d.s.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>().into())
        * d.r.adjoint();
    Ok((d.unitary(), p))
}

fn imaginary_power(lambda: f64, t: f64) -> C64 {
    if lambda <= ZERO_SINGULAR {
        c64(1.0, 0.0)
    } else {
        C64::from_polar(1.0, t * lambda.ln())
    }
}

/// `p^{it}` for Hermitian PSD `p`, with `0^{it} := 1`.
pub fn unitary_power(p: &CMatrix, t: f64) -> Result<CMatrix> {
    if !p.is_square() {
        return Err(shape("unitary_power needs a square matrix"));
    }
    let scale = 1.0 + p.max_abs();
    if !p.is_hermitian(1e-10 * scale) {
        return Err(domain("unitary_power needs a Hermitian matrix"));
    }
    let (values, u) = hermitian_eigen(p);
    if values.iter().any(|&v| v < -1e-9 * scale) {
        return Err(domain("unitary_power needs a positive semidefinite matrix"));
    }
    let mut w = u.clone();
    for (j, &v) in values.iter().enumerate() {
        let f = imaginary_power(v, t);
        w.column_mut(j).iter_mut().for_each(|e| *e *= f);
    }
    Ok(w * u.adjoint())
}

/// `U |a|^{it}` where `a = U |a|`, computed from one SVD.
pub fn polar_power(a: &CMatrix, t: f64) -> CMatrix {
    let d = svd(a);
    let phases: Vec<C64> = d.s.iter().map(|&s| imaginary_power(s, t)).collect();
    d.compose_complex(&phases)
}

/// Eigenvalues and an orthonormal eigenbasis of a normal (e.g. unitary) matrix.
pub fn normal_eigen(u: &CMatrix) -> (Vec<C64>, CMatrix) {
    let (q, t) = u.clone().schur().unpack();
    (t.diagonal().iter().copied().collect(), q)
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c64(0.5, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Uniform unit-modulus scalar pointing the same way as `z` (1 for zero).
pub fn phase(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        c64(1.0, 0.0)
    } else {
        z / r
    }
}
