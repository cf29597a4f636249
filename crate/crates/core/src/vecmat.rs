//! Vector-valued matrices: `n x n` arrays whose entries live in `C^d`.

use rand::Rng;

use crate::error::{shape, Result};
use crate::linalg::{c64, is_real_matrix, svd, CMatrix, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct VecMat {
    n: usize,
    d: usize,
    data: Vec<C64>,
}

impl VecMat {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, data: vec![c64(0.0, 0.0); n * n * d] }
    }

    /// `data[(i * n + j) * d + r]` is coordinate `r` of entry `(i, j)`.
    pub fn from_raw(n: usize, d: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n * d {
            return Err(shape(format!("expected {} values for n={n}, d={d}, got {}", n * n * d, data.len())));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_matrix(a: &CMatrix) -> Self {
        Self::from_components(std::slice::from_ref(a)).expect("single square component")
    }

    /// Reassembles `X` from its component matrices `X_r`.
    pub fn from_components(components: &[CMatrix]) -> Result<Self> {
        let d = components.len();
        let n = components.first().map_or(0, |c| c.nrows());
        let mut out = Self::zeros(n, d);
        for (r, c) in components.iter().enumerate() {
            if c.shape() != (n, n) {
                return Err(shape("components must share one square shape"));
            }
            for i in 0..n {
                for j in 0..n {
                    out.entry_mut(i, j)[r] = c[(i, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize, d: usize) -> Self {
        let data = (0..n * n * d).map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        Self { n, d, data }
    }

    pub fn random_real<R: Rng>(rng: &mut R, n: usize, d: usize) -> Self {
        let data = (0..n * n * d).map(|_| c64(rng.random_range(-1.0..1.0), 0.0)).collect();
        Self { n, d, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn raw(&self) -> &[C64] {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> &[C64] {
        let s = (i * self.n + j) * self.d;
        &self.data[s..s + self.d]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut [C64] {
        let s = (i * self.n + j) * self.d;
        &mut self.data[s..s + self.d]
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn component(&self, r: usize) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j)[r])
    }

    pub fn components(&self) -> Vec<CMatrix> {
        (0..self.d).map(|r| self.component(r)).collect()
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        Self { n: self.n, d: self.d, data: self.data.iter().map(|z| z * alpha).collect() }
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(XX^*, X^*X)` as `Σ_r X_r X_r^*` and `Σ_r X_r^* X_r`. Both are Hermitian PSD.
    pub fn gram_products(&self) -> (CMatrix, CMatrix) {
        let n = self.n;
        let mut row = CMatrix::zeros(n, n);
        let mut col = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut r = c64(0.0, 0.0);
                let mut c = c64(0.0, 0.0);
                for k in 0..n {
                    r += dot(self.entry(i, k), self.entry(j, k));
                    c += dot(self.entry(k, j), self.entry(k, i));
                }
                row[(i, j)] = r;
                col[(i, j)] = c;
            }
        }
        (row, col)
    }

    /// `<X, z>`: the matrix with entries `Σ_r (X_{ij})_r conj(z_r)`.
    pub fn project(&self, z: &[C64]) -> Result<CMatrix> {
        if z.len() != self.d {
            return Err(shape(format!("vector of length {} against d = {}", z.len(), self.d)));
        }
        Ok(CMatrix::from_fn(self.n, self.n, |i, j| dot(self.entry(i, j), z)))
    }

    /// `<X, eps>` for a real sign (or weight) vector.
    pub fn project_real(&self, eps: &[f64]) -> Result<CMatrix> {
        if eps.len() != self.d {
            return Err(shape(format!("vector of length {} against d = {}", eps.len(), self.d)));
        }
        Ok(CMatrix::from_fn(self.n, self.n, |i, j| {
            self.entry(i, j).iter().zip(eps).map(|(x, e)| x * *e).sum()
        }))
    }

    /// Appends `extra` zero coordinates before (`lead`) and after (`trail`) the existing ones.
    pub fn padded(&self, lead: usize, trail: usize) -> Self {
        let d = lead + self.d + trail;
        let mut out = Self::zeros(self.n, d);
        for i in 0..self.n {
            for j in 0..self.n {
                out.entry_mut(i, j)[lead..lead + self.d].copy_from_slice(self.entry(i, j));
            }
        }
        out
    }
}

/// `<x, y> = Σ x_r conj(y_r)`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// Re-expresses `X` and `Y` in an orthonormal basis of the span of all their
/// entries, so every inner product `<X_ij, Y_kl>` (and within each) is kept
/// while `d` drops to at most `2n^2`. Real inputs stay real.
pub fn compress_pair(x: &VecMat, y: &VecMat) -> Result<(VecMat, VecMat)> {
    let n = x.n;
    if y.n != n || y.d != x.d {
        return Err(shape("compress_pair needs matching shapes"));
    }
    let rows = 2 * n * n;
    let mut v = CMatrix::zeros(rows, x.d);
    for (p, chunk) in x.data.chunks(x.d.max(1)).chain(y.data.chunks(y.d.max(1))).enumerate().take(rows) {
        for (r, z) in chunk.iter().enumerate() {
            v[(p, r)] = *z;
        }
    }
    if x.d == 0 {
        return Ok((x.clone(), y.clone()));
    }
    let real = is_real_matrix(&v);
    let d = svd(&v);
    let top = d.s.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..d.s.len()).filter(|&c| d.s[c] > 1e-14 * top && d.s[c] > 0.0).collect();
    let dim = keep.len().max(1);
    let mut data = vec![c64(0.0, 0.0); rows * dim];
    for p in 0..rows {
        for (c, &col) in keep.iter().enumerate() {
            let z = d.l[(p, col)] * d.s[col];
            data[p * dim + c] = if real { c64(z.re, 0.0) } else { z };
        }
    }
    let half = n * n * dim;
    let cx = VecMat::from_raw(n, dim, data[..half].to_vec())?;
    let cy = VecMat::from_raw(n, dim, data[half..].to_vec())?;
    Ok((cx, cy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, MatrixExt};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn components_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = VecMat::random(&mut rng, 3, 4);
        assert_eq!(VecMat::from_components(&x.components()).unwrap(), x);
    }

    #[test]
    fn gram_of_unitary_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = CMatrix::from_fn(3, 3, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let u = svd(&a).unitary();
        let (r, c) = VecMat::from_matrix(&u).gram_products();
        assert!((r - identity(3)).max_abs() < 1e-12);
        assert!((c - identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn gram_matches_component_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = VecMat::random(&mut rng, 3, 5);
        let (r, c) = x.gram_products();
        let mut er = CMatrix::zeros(3, 3);
        let mut ec = CMatrix::zeros(3, 3);
        for xr in x.components() {
            er += &xr * xr.adjoint();
            ec += xr.adjoint() * &xr;
        }
        assert!((&r - er).max_abs() < 1e-12);
        assert!((&c - ec).max_abs() < 1e-12);
        assert!((r.trace() - c.trace()).norm() < 1e-12);
        assert!((r.trace().re - x.squared_norm()).abs() < 1e-12);
    }

    #[test]
    fn compression_keeps_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = VecMat::random(&mut rng, 2, 20);
        let y = VecMat::random(&mut rng, 2, 20);
        let (cx, cy) = compress_pair(&x, &y).unwrap();
        assert!(cx.d() <= 8);
        for (a, b) in [(&x, &cx), (&y, &cy)] {
            let (r0, c0) = a.gram_products();
            let (r1, c1) = b.gram_products();
            assert!((r0 - r1).max_abs() < 1e-12);
            assert!((c0 - c1).max_abs() < 1e-12);
        }
        for (i, j, k, l) in [(0, 0, 1, 1), (0, 1, 1, 0), (1, 1, 0, 1)] {
            assert!((dot(x.entry(i, j), y.entry(k, l)) - dot(cx.entry(i, j), cy.entry(k, l))).norm() < 1e-12);
        }
        let xr = VecMat::random_real(&mut rng, 2, 9);
        let yr = VecMat::random_real(&mut rng, 2, 9);
        let (a, b) = compress_pair(&xr, &yr).unwrap();
        assert!(a.is_real() && b.is_real());
    }
}
