//! Deterministic version of the complex rounding: `z` ranges over a 4-wise
//! independent family and `t` over a uniform grid, keeping the best pair.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::linalg::{c64, svd, Svd, C64};
use crate::rounding::complex::{PairKind, RoundedPair};
use crate::rounding::fourwise::fourwise_z_family;
use crate::tensor::Tensor4;
use crate::vecmat::VecMat;

/// The `t` grid: `N = ⌈log(1/ε) · max(1/ε², d/ε)⌉` points spread uniformly
/// over `[-log(1/ε), log(1/ε)]`.
pub fn t_grid(eps: f64, d: usize) -> Vec<f64> {
    let half = (1.0 / eps).ln();
    let count = (half * (1.0 / (eps * eps)).max(d as f64 / eps)).ceil().max(2.0) as usize;
    (0..count).map(|k| -half + 2.0 * half * k as f64 / (count - 1) as f64).collect()
}

fn twisted(d: &Svd, floor: f64, t: f64) -> crate::linalg::CMatrix {
    let mut l = d.l.clone();
    for (j, &s) in d.s.iter().enumerate() {
        let f = C64::from_polar(1.0, t * s.max(floor).ln());
        l.column_mut(j).iter_mut().for_each(|e| *e *= f);
    }
    l * d.r.adjoint()
}

pub fn round_complex_derandomized(m: &Tensor4, x: &VecMat, y: &VecMat, eps: f64) -> Result<RoundedPair> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(domain("derandomized rounding needs 0 < eps < 1/2"));
    }
    if x.n() != y.n() || x.d() != y.d() || x.n() != m.n() {
        return Err(crate::error::shape("derandomized rounding needs matching shapes"));
    }
    let family = fourwise_z_family(x.d());
    let grid = t_grid(eps, x.d());
    let s = c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let best = (0..family.len())
        .into_par_iter()
        .map(|zi| -> Result<(f64, usize, usize)> {
            let z = family.member(zi);
            let dx = svd(&(x.project(&z)? * s));
            let dy = svd(&(y.project(&z)? * s));
            let mut top = (f64::NEG_INFINITY, zi, 0);
            for (k, &t) in grid.iter().enumerate() {
                let b = twisted(&dy, eps, -t);
                let nmat = m.contract_right(&b)?;
                let a = twisted(&dx, eps, t);
                let v = a.iter().zip(nmat.iter()).map(|(p, q)| p * q).sum::<C64>().norm();
                if v > top.0 {
                    top = (v, zi, k);
                }
            }
            Ok(top)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::NEG_INFINITY, 0, 0), |acc, c| if c.0 > acc.0 { c } else { acc });
    let (_, zi, k) = best;
    let z = family.member(zi);
    let a = twisted(&svd(&(x.project(&z)? * s)), eps, grid[k]);
    let b = twisted(&svd(&(y.project(&z)? * s)), eps, -grid[k]);
    RoundedPair::new(m, a, b, PairKind::Unitary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::tensor::Field;

    #[test]
    fn grid_shape() {
        let g = t_grid(0.1, 3);
        assert_eq!(g.len(), (10f64.ln() * 100.0).ceil() as usize);
        assert!((g[0] + 10f64.ln()).abs() < 1e-12);
        assert!((g[g.len() - 1] - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn scalar_instance() {
        let m = Tensor4::new(1, Field::Complex, [([0, 0, 0, 0], c64(1.0, 0.0))]).unwrap();
        let x = VecMat::from_matrix(&identity(1));
        let p = round_complex_derandomized(&m, &x, &x, 0.2).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_eps() {
        let m = Tensor4::haagerup(1);
        let x = VecMat::from_matrix(&identity(1));
        assert!(round_complex_derandomized(&m, &x, &x, 0.5).is_err());
    }
}
