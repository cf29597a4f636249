//! Primal-dual interior-point method for block-diagonal semidefinite programs
//!
//! ```text
//! maximize <C, X>  subject to  <A_i, X> = b_i,  X = diag(X_1, ..., X_k) ⪰ 0
//! ```
//!
//! where each block is either a dense symmetric PSD block or a nonnegative
//! diagonal (linear) block. Search directions are HKM with Mehrotra's
//! predictor-corrector; the Schur complement is assembled from sparse
//! constraint entries.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Psd(usize),
    Diag(usize),
}

impl Block {
    pub fn size(self) -> usize {
        match self {
            Block::Psd(s) | Block::Diag(s) => s,
        }
    }
}

/// A linear functional `Σ w · X_block[p, q]` on a symmetric block variable.
#[derive(Clone, Debug, Default)]
pub struct Functional {
    terms: BTreeMap<(usize, usize, usize), f64>,
}

impl Functional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, block: usize, p: usize, q: usize, w: f64) {
        if w != 0.0 {
            *self.terms.entry((block, p.min(q), p.max(q))).or_insert(0.0) += w;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.values().all(|&w| w == 0.0)
    }

    /// Symmetric matrix entries, both triangles listed, grouped by block.
    fn expand(&self, nblocks: usize) -> Vec<Vec<(usize, usize, f64)>> {
        let mut out = vec![Vec::new(); nblocks];
        for (&(b, p, q), &w) in &self.terms {
            if w == 0.0 {
                continue;
            }
            if p == q {
                out[b].push((p, p, w));
            } else {
                out[b].push((p, q, 0.5 * w));
                out[b].push((q, p, 0.5 * w));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConicProblem {
    pub blocks: Vec<Block>,
    pub objective: Functional,
    pub constraints: Vec<(Functional, f64)>,
    /// Upper bounds on the trace of each block over the feasible set, used to
    /// turn an approximately dual-feasible point into a valid upper bound.
    pub trace_bounds: Vec<f64>,
}

impl ConicProblem {
    pub fn add_block(&mut self, block: Block, trace_bound: f64) -> usize {
        self.blocks.push(block);
        self.trace_bounds.push(trace_bound);
        self.blocks.len() - 1
    }

    pub fn add_constraint(&mut self, f: Functional, rhs: f64) {
        self.constraints.push((f, rhs));
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-8, gap_tol: 1e-6, max_iter: 200 }
    }
}

#[derive(Clone, Debug)]
pub enum BlockValue {
    Psd(RMatrix),
    Diag(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub x: Vec<BlockValue>,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

#[derive(Clone, Debug)]
enum Bv {
    S(RMatrix),
    D(DVector<f64>),
}

impl Bv {
    fn zeros(b: Block) -> Self {
        match b {
            Block::Psd(s) => Bv::S(RMatrix::zeros(s, s)),
            Block::Diag(s) => Bv::D(DVector::zeros(s)),
        }
    }

    fn identity(b: Block, scale: f64) -> Self {
        match b {
            Block::Psd(s) => Bv::S(RMatrix::identity(s, s) * scale),
            Block::Diag(s) => Bv::D(DVector::from_element(s, scale)),
        }
    }

    fn get(&self, p: usize, q: usize) -> f64 {
        match self {
            Bv::S(m) => m[(p, q)],
            Bv::D(v) => {
                if p == q {
                    v[p]
                } else {
                    0.0
                }
            }
        }
    }

    fn add_at(&mut self, p: usize, q: usize, w: f64) {
        match self {
            Bv::S(m) => m[(p, q)] += w,
            Bv::D(v) => v[p] += w,
        }
    }

    fn dot(&self, other: &Bv) -> f64 {
        match (self, other) {
            (Bv::S(a), Bv::S(b)) => a.dot(b),
            (Bv::D(a), Bv::D(b)) => a.dot(b),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    fn axpy(&mut self, alpha: f64, other: &Bv) {
        match (self, other) {
            (Bv::S(a), Bv::S(b)) => a.zip_apply(b, |p, q| *p += alpha * q),
            (Bv::D(a), Bv::D(b)) => a.axpy(alpha, b, 1.0),
            _ => unreachable!("block kinds always match"),
        }
    }

    fn sub(&self, other: &Bv) -> Bv {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    fn into_value(self) -> BlockValue {
        match self {
            Bv::S(m) => BlockValue::Psd(m),
            Bv::D(v) => BlockValue::Diag(v.iter().copied().collect()),
        }
    }

    fn min_eigenvalue(&self) -> f64 {
        match self {
            Bv::S(m) => {
                if m.nrows() == 0 {
                    return 0.0;
                }
                let s = (m + m.transpose()) * 0.5;
                s.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
            }
            Bv::D(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

fn sym(m: RMatrix) -> RMatrix {
    (&m + m.transpose()) * 0.5
}

type Sparse = Vec<(usize, usize, f64)>;

struct Data {
    blocks: Vec<Block>,
    c: Vec<Bv>,
    /// `cons[i][block]` lists the symmetric entries of `A_i` in that block.
    cons: Vec<Vec<Sparse>>,
    b: DVector<f64>,
}

impl Data {
    fn apply(&self, x: &[Bv]) -> DVector<f64> {
        DVector::from_iterator(
            self.cons.len(),
            self.cons.iter().map(|per_block| {
                per_block
                    .iter()
                    .enumerate()
                    .map(|(blk, e)| e.iter().map(|&(p, q, a)| a * x[blk].get(p, q)).sum::<f64>())
                    .sum::<f64>()
            }),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<Bv> {
        let mut out: Vec<Bv> = self.blocks.iter().map(|&b| Bv::zeros(b)).collect();
        for (i, per_block) in self.cons.iter().enumerate() {
            for (blk, e) in per_block.iter().enumerate() {
                for &(p, q, a) in e {
                    out[blk].add_at(p, q, a * y[i]);
                }
            }
        }
        out
    }

    fn schur(&self, x: &[Bv], zinv: &[Bv]) -> DMatrix<f64> {
        let m = self.cons.len();
        let mut h = DMatrix::zeros(m, m);
        for blk in 0..self.blocks.len() {
            let active: Vec<usize> = (0..m).filter(|&i| !self.cons[i][blk].is_empty()).collect();
            match (&x[blk], &zinv[blk]) {
                (Bv::S(xm), Bv::S(zm)) => {
                    for (ai, &i) in active.iter().enumerate() {
                        let ei = &self.cons[i][blk];
                        for &j in &active[ai..] {
                            let ej = &self.cons[j][blk];
                            let mut acc = 0.0;
                            for &(p, q, a) in ei {
                                for &(r, s, c) in ej {
                                    acc += a * c * xm[(q, r)] * zm[(s, p)];
                                }
                            }
                            h[(i, j)] += acc;
                            if i != j {
                                h[(j, i)] += acc;
                            }
                        }
                    }
                }
                (Bv::D(xv), Bv::D(zv)) => {
                    for (ai, &i) in active.iter().enumerate() {
                        let ei = &self.cons[i][blk];
                        for &j in &active[ai..] {
                            let ej = &self.cons[j][blk];
                            let mut acc = 0.0;
                            for &(p, _, a) in ei {
                                for &(r, _, c) in ej {
                                    if p == r {
                                        acc += a * c * xv[p] * zv[p];
                                    }
                                }
                            }
                            h[(i, j)] += acc;
                            if i != j {
                                h[(j, i)] += acc;
                            }
                        }
                    }
                }
                _ => unreachable!("block kinds always match"),
            }
        }
        h
    }
}

fn total_dot(a: &[Bv], b: &[Bv]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.dot(q)).sum()
}

fn total_norm(a: &[Bv]) -> f64 {
    a.iter().map(Bv::norm_sq).sum::<f64>().sqrt()
}

fn inverse(x: &Bv) -> Option<Bv> {
    match x {
        Bv::S(m) => m.clone().cholesky().map(|c| Bv::S(sym(c.inverse()))),
        Bv::D(v) => {
            if v.iter().all(|&e| e > 0.0) {
                Some(Bv::D(v.map(|e| 1.0 / e)))
            } else {
                None
            }
        }
    }
}

/// Largest `alpha` with `x + alpha * dx ⪰ 0` (infinite if unbounded).
fn max_step(x: &Bv, dx: &Bv) -> f64 {
    match (x, dx) {
        (Bv::S(xm), Bv::S(dm)) => {
            if xm.nrows() == 0 {
                return f64::INFINITY;
            }
            let Some(chol) = xm.clone().cholesky() else {
                return 0.0;
            };
            let l = chol.l();
            let Some(w) = l.solve_lower_triangular(dm) else {
                return 0.0;
            };
            let Some(w) = l.solve_lower_triangular(&w.transpose()) else {
                return 0.0;
            };
            let lmin = sym(w).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            }
        }
        (Bv::D(xv), Bv::D(dv)) => xv
            .iter()
            .zip(dv.iter())
            .filter(|(_, &d)| d < 0.0)
            .map(|(&x, &d)| -x / d)
            .fold(f64::INFINITY, f64::min),
        _ => unreachable!("block kinds always match"),
    }
}

fn step_length(x: &[Bv], dx: &[Bv], gamma: f64) -> f64 {
    let raw = x.iter().zip(dx).map(|(a, b)| max_step(a, b)).fold(f64::INFINITY, f64::min);
    (gamma * raw).min(1.0)
}

struct Solved {
    factor: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl Solved {
    fn new(h: DMatrix<f64>) -> Self {
        if let Some(c) = h.clone().cholesky() {
            return Self { factor: Some(c), lu: None };
        }
        let scale = h.diagonal().iter().copied().fold(0.0, f64::max).max(1.0);
        let mut reg = h.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-13 * scale;
        }
        if let Some(c) = reg.cholesky() {
            return Self { factor: Some(c), lu: None };
        }
        Self { factor: None, lu: Some(h.lu()) }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match (&self.factor, &self.lu) {
            (Some(c), _) => Some(c.solve(rhs)),
            (None, Some(lu)) => lu.solve(rhs),
            _ => None,
        }
    }
}

/// `X A Z^{-1}`-type products for each block (`a` may be unsymmetric).
fn triple(x: &Bv, a: &Bv, zinv: &Bv) -> Bv {
    match (x, a, zinv) {
        (Bv::S(x), Bv::S(a), Bv::S(z)) => Bv::S(x * a * z),
        (Bv::D(x), Bv::D(a), Bv::D(z)) => Bv::D(x.component_mul(a).component_mul(z)),
        _ => unreachable!("block kinds always match"),
    }
}

fn product(a: &Bv, b: &Bv) -> Bv {
    match (a, b) {
        (Bv::S(a), Bv::S(b)) => Bv::S(a * b),
        (Bv::D(a), Bv::D(b)) => Bv::D(a.component_mul(b)),
        _ => unreachable!("block kinds always match"),
    }
}

fn symmetrized(a: Bv) -> Bv {
    match a {
        Bv::S(m) => Bv::S(sym(m)),
        d => d,
    }
}

pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    let nb = problem.blocks.len();
    let m = problem.constraints.len();
    let mut c: Vec<Bv> = problem.blocks.iter().map(|&b| Bv::zeros(b)).collect();
    for (blk, e) in problem.objective.expand(nb).into_iter().enumerate() {
        for (p, q, a) in e {
            c[blk].add_at(p, q, a);
        }
    }
    let data = Data {
        blocks: problem.blocks.clone(),
        c,
        cons: problem.constraints.iter().map(|(f, _)| f.expand(nb)).collect(),
        b: DVector::from_iterator(m, problem.constraints.iter().map(|(_, r)| *r)),
    };
    let dim: usize = problem.blocks.iter().map(|b| b.size()).sum();
    let bnorm = data.b.norm();
    let cnorm = total_norm(&data.c);

    let mut x = Vec::with_capacity(nb);
    let mut z = Vec::with_capacity(nb);
    for (blk, &b) in problem.blocks.iter().enumerate() {
        let s = b.size() as f64;
        let mut xi: f64 = 10f64.max(s.sqrt());
        let mut eta: f64 = 10f64.max(s.sqrt()).max(data.c[blk].norm_sq().sqrt());
        for (i, per_block) in data.cons.iter().enumerate() {
            let an = per_block[blk].iter().map(|e| e.2 * e.2).sum::<f64>().sqrt();
            if an > 0.0 {
                xi = xi.max(s * (1.0 + data.b[i].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
        }
        x.push(Bv::identity(b, xi));
        z.push(Bv::identity(b, eta));
    }
    let mut y = DVector::zeros(m);

    let mut last = (0.0, 0.0);
    for iter in 0..opts.max_iter {
        let rp = &data.b - data.apply(&x);
        let aty = data.adjoint(&y);
        let rd: Vec<Bv> = (0..nb)
            .map(|k| {
                let mut r = data.c[k].sub(&aty[k]);
                r.axpy(1.0, &z[k]);
                r
            })
            .collect();
        let pobj = total_dot(&data.c, &x);
        let dobj = data.b.dot(&y);
        last = (pobj, dobj);
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = total_norm(&rd) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if !(pobj.is_finite() && dobj.is_finite()) {
            break;
        }
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && gap <= opts.gap_tol {
            return Ok(finish(&data, problem, x, y, iter, pinf, dinf));
        }

        let mu = total_dot(&x, &z) / dim as f64;
        let Some(zinv) = z.iter().map(inverse).collect::<Option<Vec<_>>>() else {
            break;
        };
        let schur = Solved::new(data.schur(&x, &zinv));

        let x_rd_zinv: Vec<Bv> = (0..nb).map(|k| triple(&x[k], &rd[k], &zinv[k])).collect();
        let direction = |r: &[Bv], extra: &dyn Fn(usize) -> Option<Bv>, sigma_mu: f64| -> Option<(Vec<Bv>, DVector<f64>, Vec<Bv>)> {
            let dy = schur.solve(&(data.apply(r) - &rp))?;
            let atdy = data.adjoint(&dy);
            let dz: Vec<Bv> = (0..nb).map(|k| atdy[k].sub(&rd[k])).collect();
            let dx: Vec<Bv> = (0..nb)
                .map(|k| {
                    let mut d = zinv[k].clone();
                    match &mut d {
                        Bv::S(mm) => *mm *= sigma_mu,
                        Bv::D(v) => *v *= sigma_mu,
                    }
                    d.axpy(-1.0, &x[k]);
                    d.axpy(-1.0, &triple(&x[k], &dz[k], &zinv[k]));
                    if let Some(e) = extra(k) {
                        d.axpy(-1.0, &e);
                    }
                    symmetrized(d)
                })
                .collect();
            Some((dx, dy, dz))
        };

        let r_aff: Vec<Bv> = (0..nb)
            .map(|k| {
                let mut r = x_rd_zinv[k].clone();
                r.axpy(-1.0, &x[k]);
                r
            })
            .collect();
        let Some((dxa, _, dza)) = direction(&r_aff, &|_| None, 0.0) else {
            break;
        };
        let ap = step_length(&x, &dxa, 1.0);
        let ad = step_length(&z, &dza, 1.0);
        let mut xa = x.clone();
        let mut za = z.clone();
        for k in 0..nb {
            xa[k].axpy(ap, &dxa[k]);
            za[k].axpy(ad, &dza[k]);
        }
        let mu_aff = total_dot(&xa, &za) / dim as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let corr: Vec<Bv> = (0..nb).map(|k| product(&dxa[k], &product(&dza[k], &zinv[k]))).collect();
        let r_cor: Vec<Bv> = (0..nb)
            .map(|k| {
                let mut r = zinv[k].clone();
                match &mut r {
                    Bv::S(mm) => *mm *= sigma * mu,
                    Bv::D(v) => *v *= sigma * mu,
                }
                r.axpy(-1.0, &x[k]);
                r.axpy(1.0, &x_rd_zinv[k]);
                r.axpy(-1.0, &corr[k]);
                r
            })
            .collect();
        let Some((dx, dy, dz)) = direction(&r_cor, &|k| Some(corr[k].clone()), sigma * mu) else {
            break;
        };
        let ap = step_length(&x, &dx, 0.95);
        let ad = step_length(&z, &dz, 0.95);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        for k in 0..nb {
            x[k].axpy(ap, &dx[k]);
            z[k].axpy(ad, &dz[k]);
        }
        y.axpy(ad, &dy, 1.0);
    }
    Err(Error::Convergence { iterations: opts.max_iter, primal_objective: last.0, dual_objective: last.1 })
}

fn finish(
    data: &Data,
    problem: &ConicProblem,
    x: Vec<Bv>,
    y: DVector<f64>,
    iterations: usize,
    pinf: f64,
    dinf: f64,
) -> ConicSolution {
    let aty = data.adjoint(&y);
    let dual_objective = data.b.dot(&y);
    let mut upper_bound = dual_objective;
    for k in 0..data.blocks.len() {
        let slack = aty[k].sub(&data.c[k]);
        let lmin = slack.min_eigenvalue();
        if lmin < 0.0 {
            upper_bound += -lmin * problem.trace_bounds.get(k).copied().unwrap_or(f64::INFINITY);
        }
    }
    ConicSolution {
        primal_objective: total_dot(&data.c, &x),
        x: x.into_iter().map(Bv::into_value).collect(),
        y: y.iter().copied().collect(),
        dual_objective,
        upper_bound,
        iterations,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
    }
}
