//! Independent reference computations: brute-force optima on tiny groups,
//! exact averages over all rounding vectors, and numerical quadratures.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::linalg::{c64, svd, CMatrix, C64};
use crate::rng::quarter_turn;
use crate::rounding::krivine::{krivine_coeffs, krivine_f, krivine_g};
use crate::tensor::{contract_best_response, Tensor4};
use crate::vecmat::VecMat;

pub fn rotation(theta: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)])
}

pub fn reflection(theta: f64) -> CMatrix {
    let mut r = rotation(theta);
    r.column_mut(1).iter_mut().for_each(|z| *z = -*z);
    r
}

fn o2(reflect: bool, theta: f64) -> CMatrix {
    if reflect {
        reflection(theta)
    } else {
        rotation(theta)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    if fa > fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Lower bound on `Opt_R(M)` for `n ≤ 2`: exact for `n = 1`; for `n = 2` a grid of
/// `grid` angles per O_2 component on each side, refined by 30 sweeps of
/// golden-section coordinate ascent from the best grid points.
pub fn brute_opt_real(m: &Tensor4, grid: usize) -> Result<f64> {
    if !m.is_real() {
        return Err(domain("brute_opt_real needs a real tensor"));
    }
    match m.n() {
        1 => Ok(m.get([0, 0, 0, 0]).re.abs()),
        2 => {
            let grid = grid.max(4);
            let step = 2.0 * PI / grid as f64;
            let value = |ra: bool, ta: f64, rb: bool, tb: f64| {
                m.evaluate_matrices(&o2(ra, ta), &o2(rb, tb)).expect("2x2 shapes").re
            };
            let mut starts: Vec<(f64, bool, f64, bool, f64)> = Vec::new();
            for rb in [false, true] {
                for kb in 0..grid {
                    let tb = kb as f64 * step;
                    let nmat = m.contract_right(&o2(rb, tb))?;
                    for ra in [false, true] {
                        for ka in 0..grid {
                            let ta = ka as f64 * step;
                            let a = o2(ra, ta);
                            let v = a.iter().zip(nmat.iter()).map(|(p, q)| p * q).sum::<C64>().re;
                            starts.push((v, ra, ta, rb, tb));
                        }
                    }
                }
            }
            starts.sort_by(|x, y| y.0.total_cmp(&x.0));
            let mut best = starts[0].0;
            for &(v0, ra, mut ta, rb, mut tb) in starts.iter().take(8) {
                let mut v = v0;
                for _ in 0..30 {
                    let (t, fv) = golden_max(|t| value(ra, t, rb, tb), ta - step, ta + step, 40);
                    if fv > v {
                        ta = t;
                        v = fv;
                    }
                    let (t, fv) = golden_max(|t| value(ra, ta, rb, t), tb - step, tb + step, 40);
                    if fv > v {
                        tb = t;
                        v = fv;
                    }
                }
                best = best.max(v);
            }
            Ok(best)
        }
        n => Err(domain(format!("brute_opt_real supports n <= 2, got {n}"))),
    }
}

/// `max |M_0000 α conj(β)|` over a grid of unit phases `α`, `β`.
pub fn brute_opt_complex_n1(m: &Tensor4, grid: usize) -> Result<f64> {
    if m.n() != 1 {
        return Err(domain("brute_opt_complex_n1 needs n = 1"));
    }
    let v = m.get([0, 0, 0, 0]);
    let grid = grid.max(1);
    let mut best: f64 = 0.0;
    for i in 0..grid {
        for j in 0..grid {
            let a = C64::from_polar(1.0, 2.0 * PI * i as f64 / grid as f64);
            let b = C64::from_polar(1.0, 2.0 * PI * j as f64 / grid as f64);
            best = best.max((v * a * b.conj()).norm());
        }
    }
    Ok(best)
}

/// Lower bound on `Opt_C(M)` by alternating exact best responses from `starts`
/// random unitary starting points.
pub fn local_opt_complex(m: &Tensor4, starts: usize, seed: u64) -> Result<f64> {
    let n = m.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..starts.max(1) {
        let g = CMatrix::from_fn(n, n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut b = svd(&g).unitary();
        let mut last = -1.0;
        for _ in 0..500 {
            let (a, _) = contract_best_response(m, &b)?;
            // M(A, B) = conj(M^†(B, A)) with M^†_{klij} = conj(M_{ijkl}).
            let nb = CMatrix::from_fn(n, n, |k, l| {
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m.get([i, j, k, l]) * a[(i, j)]).sum()
            });
            b = svd(&nb).unitary();
            let v = m.evaluate_matrices(&a, &b)?.norm();
            if v <= last + 1e-13 {
                break;
            }
            last = v;
        }
        best = best.max(last);
    }
    Ok(best)
}

/// Values that can be averaged over an enumeration.
pub trait Mean: Sized + std::ops::AddAssign {
    fn divide(self, count: f64) -> Self;
}

impl Mean for f64 {
    fn divide(self, count: f64) -> Self {
        self / count
    }
}

impl Mean for C64 {
    fn divide(self, count: f64) -> Self {
        self / count
    }
}

impl Mean for CMatrix {
    fn divide(self, count: f64) -> Self {
        self.map(|z| z / count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    /// `(W W^*)^2`
    RowSquare,
    /// `(W^* W)^2`
    ColSquare,
}

fn apply(stat: Statistic, w: &CMatrix) -> CMatrix {
    let g = match stat {
        Statistic::RowSquare => w * w.adjoint(),
        Statistic::ColSquare => w.adjoint() * w,
    };
    &g * &g
}

/// Exact mean of `f(z)` over all `4^d` vectors `z ∈ {1, -1, i, -i}^d`.
pub fn exhaustive_z_mean<T, F>(d: usize, zero: T, f: F) -> Result<T>
where
    T: Mean,
    F: Fn(&[C64]) -> T,
{
    let count = 4usize.checked_pow(d as u32).filter(|&c| c <= 1_000_000).ok_or_else(|| {
        Error::Resource(format!("4^{d} rounding vectors is too many to enumerate"))
    })?;
    let mut acc = zero;
    let mut z = vec![c64(1.0, 0.0); d];
    for code in 0..count {
        let mut c = code;
        for slot in z.iter_mut() {
            *slot = quarter_turn((c & 3) as u8);
            c >>= 2;
        }
        acc += f(&z);
    }
    Ok(acc.divide(count as f64))
}

/// Exact mean of the statistic of `W_z = <W, z>` over all `z`.
pub fn exhaustive_z_expectation(w: &VecMat, stat: Statistic) -> Result<CMatrix> {
    let n = w.n();
    exhaustive_z_mean(w.d(), CMatrix::zeros(n, n), |z| apply(stat, &w.project(z).expect("length d")))
}

/// Exact mean of `f(ε)` over all `2^d` sign vectors.
pub fn exhaustive_sign_mean<T, F>(d: usize, zero: T, f: F) -> Result<T>
where
    T: Mean,
    F: Fn(&[f64]) -> T,
{
    let count = 2usize.checked_pow(d as u32).filter(|&c| c <= 1_000_000).ok_or_else(|| {
        Error::Resource(format!("2^{d} sign vectors is too many to enumerate"))
    })?;
    let mut acc = zero;
    let mut eps = vec![1.0; d];
    for code in 0..count {
        for (r, slot) in eps.iter_mut().enumerate() {
            *slot = if code >> r & 1 == 1 { -1.0 } else { 1.0 };
        }
        acc += f(&eps);
    }
    Ok(acc.divide(count as f64))
}

/// Exact mean of the statistic of `X_ε = <X, ε>` over all sign vectors.
pub fn exhaustive_sign_expectation(x: &VecMat, stat: Statistic) -> Result<CMatrix> {
    if !x.is_real() {
        return Err(domain("sign expectations need a real vector-valued matrix"));
    }
    let n = x.n();
    exhaustive_sign_mean(x.d(), CMatrix::zeros(n, n), |e| apply(stat, &x.project_real(e).expect("length d")))
}

/// Density of the hyperbolic secant law, `sech(πt/2)/2`.
pub fn secant_density(t: f64) -> f64 {
    0.5 / (PI * t / 2.0).cosh()
}

/// `∫ a^{it} φ(t) dt` by composite Simpson on `[-40, 40]`.
pub fn secant_characteristic(a: f64) -> f64 {
    let (lo, hi, steps) = (-40.0, 40.0, 160_000);
    let h = (hi - lo) / steps as f64;
    let la = a.ln();
    let f = |t: f64| (t * la).cos() * secant_density(t);
    let mut s = f(lo) + f(hi);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * h);
    }
    s * h / 3.0
}

/// `√2 Σ_{ℓ≤terms} b_{2ℓ+1} (1/2π) ∫_{-π}^{π} f((2ℓ+1)x − t) g(t − (2ℓ+1)y) dt`
/// by the midpoint rule with `nodes` points; approximates `cos(x − y)`.
pub fn krivine_identity(x: f64, y: f64, terms: usize, nodes: usize) -> f64 {
    let k = krivine_coeffs(terms);
    let h = 2.0 * PI / nodes as f64;
    let mut total = 0.0;
    for ell in 0..=terms {
        let b = k.b[2 * ell + 1];
        if b == 0.0 {
            continue;
        }
        let m = (2 * ell + 1) as f64;
        let integral: f64 = (0..nodes)
            .map(|i| {
                let t = -PI + (i as f64 + 0.5) * h;
                krivine_f(m * x - t) * krivine_g(t - m * y)
            })
            .sum::<f64>()
            * h;
        total += b * integral / (2.0 * PI);
    }
    2f64.sqrt() * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RMatrix;
    use crate::tensor::{grothendieck_embed, Field};

    #[test]
    fn real_brute_force_examples() {
        let one = grothendieck_embed(&RMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(brute_opt_real(&one, 10).unwrap(), 1.0);
        let id = grothendieck_embed(&RMatrix::identity(2, 2)).unwrap();
        assert!((brute_opt_real(&id, 180).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(brute_opt_real(&Tensor4::zeros(2, Field::Real), 30).unwrap(), 0.0);
        assert!(brute_opt_real(&Tensor4::zeros(3, Field::Real), 30).is_err());
    }

    #[test]
    fn hadamard_form_optimum() {
        // Diagonals of orthogonal matrices fill the cube, so this is the sign
        // problem for ((1,1),(1,-1)), with optimum 2.
        let a = RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let m = grothendieck_embed(&a).unwrap();
        let v = brute_opt_real(&m, 180).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn refinement_is_monotone_in_grid() {
        let m = Tensor4::new(2, Field::Real, [([0, 1, 1, 0], c64(1.0, 0.0)), ([1, 1, 0, 1], c64(-0.7, 0.0)), ([0, 0, 1, 1], c64(0.3, 0.0))]).unwrap();
        let coarse = brute_opt_real(&m, 12).unwrap();
        let fine = brute_opt_real(&m, 180).unwrap();
        assert!(coarse <= fine + 2.0 * PI / 12.0);
    }

    #[test]
    fn complex_scalar_oracle() {
        let m = Tensor4::new(1, Field::Complex, [([0, 0, 0, 0], c64(3.0, 4.0))]).unwrap();
        assert!((brute_opt_complex_n1(&m, 16).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(brute_opt_complex_n1(&Tensor4::zeros(1, Field::Complex), 8).unwrap(), 0.0);
    }

    #[test]
    fn z_expectation_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let w = VecMat::random(&mut rng, 3, 1);
        let w1 = w.component(0);
        let expected = apply(Statistic::RowSquare, &w1);
        assert!((exhaustive_z_expectation(&w, Statistic::RowSquare).unwrap() - expected).norm() < 1e-12);
        let zero = VecMat::zeros(2, 2);
        assert_eq!(exhaustive_z_expectation(&zero, Statistic::ColSquare).unwrap(), CMatrix::zeros(2, 2));
        assert!(matches!(exhaustive_z_expectation(&VecMat::zeros(1, 11), Statistic::RowSquare), Err(Error::Resource(_))));
    }

    #[test]
    fn sign_expectation_single_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let x = VecMat::random_real(&mut rng, 3, 1);
        let expected = apply(Statistic::RowSquare, &x.component(0));
        assert!((exhaustive_sign_expectation(&x, Statistic::RowSquare).unwrap() - expected).norm() < 1e-12);
    }

    #[test]
    fn characteristic_at_one() {
        assert!((secant_characteristic(1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn local_complex_oracle_on_haagerup() {
        let v = local_opt_complex(&Tensor4::haagerup(2), 20, 1).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }
}
