//! Bilinear forms over products of Stiefel-type blocks, reduced to `Opt_R`,
//! and the PCA and Procrustes problems expressed as such forms.

use std::collections::BTreeMap;

use nalgebra::SVD;

use crate::error::{domain, shape, Result};
use crate::linalg::{c64, CMatrix, RMatrix};
use crate::pipeline::{approximate_opt_real, PipelineConfig};
use crate::tensor::{Field, Tensor4};

/// `α_{irs,juv}`: block `i` entry `(r, s)` on the left against block `j`
/// entry `(u, v)` on the right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient {
    pub left: (usize, usize, usize),
    pub right: (usize, usize, usize),
    pub value: f64,
}

/// `f(U, V) = Σ α_{irs,juv} (U_i)_{rs} (V_j)_{uv}` with `U_i` of shape
/// `left[i]` and `V_j` of shape `right[j]`.
#[derive(Clone, Debug)]
pub struct BilinearForm {
    pub left: Vec<(usize, usize)>,
    pub right: Vec<(usize, usize)>,
    pub coeffs: Vec<Coefficient>,
}

fn within(shapes: &[(usize, usize)], (i, r, s): (usize, usize, usize)) -> bool {
    shapes.get(i).is_some_and(|&(m, n)| r < m && s < n)
}

impl BilinearForm {
    pub fn new(left: Vec<(usize, usize)>, right: Vec<(usize, usize)>, coeffs: Vec<Coefficient>) -> Result<Self> {
        for c in &coeffs {
            if !within(&left, c.left) || !within(&right, c.right) {
                return Err(shape(format!("coefficient {c:?} is outside the block shapes")));
            }
            if !c.value.is_finite() {
                return Err(domain("coefficients must be finite"));
            }
        }
        Ok(Self { left, right, coeffs })
    }

    pub fn evaluate(&self, u: &[RMatrix], v: &[RMatrix]) -> f64 {
        self.coeffs
            .iter()
            .map(|c| {
                let (i, r, s) = c.left;
                let (j, p, q) = c.right;
                c.value * u[i][(r, s)] * v[j][(p, q)]
            })
            .sum()
    }

    /// `∂f/∂U_i` for fixed `V`.
    fn left_gradient(&self, v: &[RMatrix]) -> Vec<RMatrix> {
        let mut g: Vec<RMatrix> = self.left.iter().map(|&(m, n)| RMatrix::zeros(m, n)).collect();
        for c in &self.coeffs {
            let (i, r, s) = c.left;
            let (j, p, q) = c.right;
            g[i][(r, s)] += c.value * v[j][(p, q)];
        }
        g
    }

    /// `∂f/∂V_j` for fixed `U`.
    fn right_gradient(&self, u: &[RMatrix]) -> Vec<RMatrix> {
        let mut g: Vec<RMatrix> = self.right.iter().map(|&(m, n)| RMatrix::zeros(m, n)).collect();
        for c in &self.coeffs {
            let (i, r, s) = c.left;
            let (j, p, q) = c.right;
            g[j][(p, q)] += c.value * u[i][(r, s)];
        }
        g
    }
}

/// Top-left corners of each block inside the `t x t` block-diagonal layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMaps {
    pub t: usize,
    pub left: Vec<(usize, usize)>,
    pub right: Vec<(usize, usize)>,
}

fn offsets(shapes: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut at = (0, 0);
    shapes
        .iter()
        .map(|&(m, n)| {
            let here = at;
            at = (at.0 + m, at.1 + n);
            here
        })
        .collect()
}

/// The real tensor `M` on side `t = max(Σm_i, Σn_i, Σp_j, Σq_j)` with
/// `M(U, V) = f(blocks of U, blocks of V)`.
pub fn embed_bilinear(f: &BilinearForm) -> Result<(Tensor4, BlockMaps)> {
    if f.left.is_empty() || f.right.is_empty() {
        return Err(domain("bilinear form needs blocks on both sides"));
    }
    let sum = |s: &[(usize, usize)], k: usize| s.iter().map(|b| if k == 0 { b.0 } else { b.1 }).sum::<usize>();
    let t = [sum(&f.left, 0), sum(&f.left, 1), sum(&f.right, 0), sum(&f.right, 1)].into_iter().max().unwrap_or(0);
    if t == 0 {
        return Err(domain("bilinear form has only empty blocks"));
    }
    let maps = BlockMaps { t, left: offsets(&f.left), right: offsets(&f.right) };
    let mut acc: BTreeMap<[usize; 4], f64> = BTreeMap::new();
    for c in &f.coeffs {
        let (i, r, s) = c.left;
        let (j, p, q) = c.right;
        let (a, b) = maps.left[i];
        let (e, g) = maps.right[j];
        *acc.entry([a + r, b + s, e + p, g + q]).or_default() += c.value;
    }
    let m = Tensor4::new(t, Field::Real, acc.into_iter().filter(|(_, v)| *v != 0.0).map(|(k, v)| (k, c64(v, 0.0))))?;
    Ok((m, maps))
}

fn cut(x: &CMatrix, shapes: &[(usize, usize)], at: &[(usize, usize)]) -> Vec<RMatrix> {
    shapes
        .iter()
        .zip(at)
        .map(|(&(m, n), &(r, c))| RMatrix::from_fn(m, n, |p, q| x[(r + p, c + q)].re))
        .collect()
}

/// Replaces each block by `Σ ±l_k r_kᵀ` over its singular pairs, the sign
/// following the gradient.
fn to_stiefel(blocks: &mut [RMatrix], grads: &[RMatrix]) {
    for (b, g) in blocks.iter_mut().zip(grads) {
        if b.is_empty() {
            continue;
        }
        let d = SVD::new(b.clone(), true, true);
        let (l, rt) = (d.u.expect("requested"), d.v_t.expect("requested"));
        let mut out = RMatrix::zeros(b.nrows(), b.ncols());
        for k in 0..d.singular_values.len() {
            let (lk, rk) = (l.column(k), rt.row(k));
            let slope = (lk.transpose() * g * rk.transpose())[(0, 0)];
            let sign = if slope >= 0.0 { 1.0 } else { -1.0 };
            out += lk * rk * sign;
        }
        *b = out;
    }
}

/// Blocks with orthonormal rows or columns read off `U`, `V`, with `f` no
/// smaller than on the raw blocks.
pub fn extract_blocks(f: &BilinearForm, maps: &BlockMaps, u: &CMatrix, v: &CMatrix) -> Result<(Vec<RMatrix>, Vec<RMatrix>)> {
    if u.shape() != (maps.t, maps.t) || v.shape() != (maps.t, maps.t) {
        return Err(shape("U and V must match the embedding side"));
    }
    let mut us = cut(u, &f.left, &maps.left);
    let mut vs = cut(v, &f.right, &maps.right);
    if f.evaluate(&us, &vs) < 0.0 {
        us.iter_mut().for_each(|b| *b = -b.clone());
    }
    let g = f.left_gradient(&vs);
    to_stiefel(&mut us, &g);
    let h = f.right_gradient(&us);
    to_stiefel(&mut vs, &h);
    Ok((us, vs))
}

/// `max(‖BBᵀ − I‖, ‖BᵀB − I‖)` on the smaller side: zero exactly when `B` has
/// orthonormal rows (wide) or columns (tall).
pub fn stiefel_defect(b: &RMatrix) -> f64 {
    let g = if b.nrows() <= b.ncols() { b * b.transpose() } else { b.transpose() * b };
    let k = g.nrows();
    (g - RMatrix::identity(k, k)).abs().max()
}

#[derive(Clone, Debug)]
pub struct BilinearSolution {
    pub left: Vec<RMatrix>,
    pub right: Vec<RMatrix>,
    pub value: f64,
    pub upper_bound: f64,
}

pub fn solve_bilinear(f: &BilinearForm, config: &PipelineConfig) -> Result<BilinearSolution> {
    let (m, maps) = embed_bilinear(f)?;
    let approx = approximate_opt_real(&m, config)?;
    let (left, right) = extract_blocks(f, &maps, &approx.pair.a, &approx.pair.b)?;
    let value = f.evaluate(&left, &right);
    Ok(BilinearSolution { left, right, value, upper_bound: approx.upper_bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcaVariant {
    /// Sum of Euclidean norms of the projected points.
    R1,
    /// Sum of `ℓ1` norms of the projected points.
    L1,
}

#[derive(Clone, Debug)]
pub struct PcaResult {
    /// `K x n` with orthonormal rows.
    pub y: RMatrix,
    /// Objective recomputed from `y`.
    pub value: f64,
    /// Value of the bilinear surrogate at the extracted blocks.
    pub surrogate: f64,
    pub upper_bound: f64,
}

pub fn pca_value(points: &RMatrix, y: &RMatrix, variant: PcaVariant) -> f64 {
    let proj = points * y.transpose();
    proj.row_iter()
        .map(|row| match variant {
            PcaVariant::R1 => row.norm(),
            PcaVariant::L1 => row.iter().map(|v| v.abs()).sum(),
        })
        .sum()
}

/// `points` holds one point per row.
pub fn pca_form(points: &RMatrix, k: usize, variant: PcaVariant) -> Result<BilinearForm> {
    let (count, n) = points.shape();
    if k == 0 || k > n {
        return Err(domain(format!("need 1 <= K <= n = {n}, got K = {k}")));
    }
    if count == 0 {
        return Err(domain("no points"));
    }
    let right = match variant {
        PcaVariant::R1 => vec![(1, k); count],
        PcaVariant::L1 => vec![(1, 1); count * k],
    };
    let mut coeffs = Vec::new();
    for i in 0..count {
        for row in 0..k {
            for j in 0..n {
                let a = points[(i, j)];
                if a != 0.0 {
                    let right = match variant {
                        PcaVariant::R1 => (i, 0, row),
                        PcaVariant::L1 => (i * k + row, 0, 0),
                    };
                    coeffs.push(Coefficient { left: (0, row, j), right, value: a });
                }
            }
        }
    }
    BilinearForm::new(vec![(k, n)], right, coeffs)
}

pub fn pca(points: &RMatrix, k: usize, variant: PcaVariant, config: &PipelineConfig) -> Result<PcaResult> {
    if points.iter().any(|v| !v.is_finite()) {
        return Err(domain("points must be finite"));
    }
    let f = pca_form(points, k, variant)?;
    if f.coeffs.is_empty() {
        let y = RMatrix::identity(k, points.ncols());
        return Ok(PcaResult { y, value: 0.0, surrogate: 0.0, upper_bound: 0.0 });
    }
    let sol = solve_bilinear(&f, config)?;
    let y = sol.left.into_iter().next().expect("one left block");
    Ok(PcaResult { value: pca_value(points, &y, variant), surrogate: sol.value, upper_bound: sol.upper_bound, y })
}

pub fn r1_pca(points: &RMatrix, k: usize, config: &PipelineConfig) -> Result<PcaResult> {
    pca(points, k, PcaVariant::R1, config)
}

pub fn l1_pca(points: &RMatrix, k: usize, config: &PipelineConfig) -> Result<PcaResult> {
    pca(points, k, PcaVariant::L1, config)
}

#[derive(Clone, Debug)]
pub struct ProcrustesResult {
    /// Orthogonal `d x d` matrices, one per input.
    pub u: Vec<RMatrix>,
    /// `‖Σ U_k A_k‖₂²` recomputed from `u`.
    pub value: f64,
    /// Upper bound on the optimum of `⟨Σ U_k A_k, Σ V_l A_l⟩`, which equals the
    /// Procrustes optimum.
    pub upper_bound: f64,
}

pub fn procrustes_value(mats: &[RMatrix], u: &[RMatrix]) -> f64 {
    let (d, n) = mats[0].shape();
    let sum = u.iter().zip(mats).fold(RMatrix::zeros(d, n), |acc, (q, a)| acc + q * a);
    sum.norm_squared()
}

/// The doubled form `⟨Σ U_k A_k, Σ V_l A_l⟩` over `d x d` blocks.
pub fn procrustes_form(mats: &[RMatrix]) -> Result<BilinearForm> {
    if mats.len() < 2 {
        return Err(domain("Procrustes needs at least two matrices"));
    }
    let (d, n) = mats[0].shape();
    if mats.iter().any(|a| a.shape() != (d, n)) {
        return Err(shape("all Procrustes matrices must have the same shape"));
    }
    let mut coeffs = Vec::new();
    for (k, ak) in mats.iter().enumerate() {
        for (l, al) in mats.iter().enumerate() {
            let cross = ak * al.transpose();
            for r in 0..d {
                for s in 0..d {
                    for v in 0..d {
                        if cross[(s, v)] != 0.0 {
                            coeffs.push(Coefficient { left: (k, r, s), right: (l, r, v), value: cross[(s, v)] });
                        }
                    }
                }
            }
        }
    }
    BilinearForm::new(vec![(d, d); mats.len()], vec![(d, d); mats.len()], coeffs)
}

/// Orthogonal `U_k` approximately maximizing `‖Σ U_k A_k‖₂²`.
pub fn procrustes(mats: &[RMatrix], config: &PipelineConfig) -> Result<ProcrustesResult> {
    let f = procrustes_form(mats)?;
    let d = mats[0].nrows();
    if f.coeffs.is_empty() {
        return Ok(ProcrustesResult { u: vec![RMatrix::identity(d, d); mats.len()], value: 0.0, upper_bound: 0.0 });
    }
    let sol = solve_bilinear(&f, config)?;
    let (vu, vv) = (procrustes_value(mats, &sol.left), procrustes_value(mats, &sol.right));
    let (u, value) = if vv > vu { (sol.right, vv) } else { (sol.left, vu) };
    Ok(ProcrustesResult { u, value, upper_bound: sol.upper_bound })
}
