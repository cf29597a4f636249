//! Gram-matrix relaxations of `Opt_C`, `Opt_R` and the nc norm, their
//! solution, and recovery of vector-valued witnesses.

pub mod ipm;

use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Result};
use crate::linalg::{c64, hermitian_eigen, phase, CMatrix, MatrixExt, C64};
use crate::tensor::Tensor4;
use crate::vecmat::{compress_pair, VecMat};

pub use ipm::{Block, BlockValue, ConicProblem, ConicSolution, Functional, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationMode {
    UnitaryComplex,
    UnitaryReal,
    NcNorm,
}

/// Gram-product infeasibility of each witness: `max(‖XX*−I‖, ‖X*X−I‖)` in the
/// unitary modes and `max(0, ‖XX*‖+‖X*X‖−2)` in nc mode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug)]
pub struct GramSolution {
    pub mode: RelaxationMode,
    pub x: VecMat,
    pub y: VecMat,
    /// `M(X, Y)`, real and nonnegative after a phase rotation of `X`.
    pub value: f64,
    pub upper_bound: f64,
    pub primal_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

/// A complex Hermitian matrix variable stored realified as
/// `((Re H, −Im H), (Im H, Re H))`, or a real symmetric one stored as is.
#[derive(Clone, Copy, Debug)]
pub(crate) struct HermVar {
    pub block: usize,
    pub side: usize,
    pub complex: bool,
}

impl HermVar {
    pub fn realified_side(self) -> usize {
        if self.complex {
            2 * self.side
        } else {
            self.side
        }
    }

    /// Adds `Re(c · H[a, b])` to `f`.
    pub fn add_re(self, f: &mut Functional, a: usize, b: usize, c: C64) {
        if self.complex {
            let n = self.side;
            f.add(self.block, a, b, 0.5 * c.re);
            f.add(self.block, n + a, n + b, 0.5 * c.re);
            f.add(self.block, n + a, b, -0.5 * c.im);
            f.add(self.block, a, n + b, 0.5 * c.im);
        } else {
            f.add(self.block, a, b, c.re);
        }
    }

    /// Adds `Im(c · H[a, b])` to `f`.
    pub fn add_im(self, f: &mut Functional, a: usize, b: usize, c: C64) {
        self.add_re(f, a, b, c64(c.im, -c.re));
    }

    pub fn extract(self, value: &BlockValue) -> CMatrix {
        let BlockValue::Psd(z) = value else {
            unreachable!("Hermitian variables live in PSD blocks")
        };
        let n = self.side;
        if self.complex {
            CMatrix::from_fn(n, n, |a, b| {
                c64(0.5 * (z[(a, b)] + z[(n + a, n + b)]), 0.5 * (z[(n + a, b)] - z[(a, n + b)]))
            })
        } else {
            CMatrix::from_fn(n, n, |a, b| c64(0.5 * (z[(a, b)] + z[(b, a)]), 0.0))
        }
    }
}

pub(crate) type Term = (HermVar, usize, usize, C64);

/// Imposes the Hermitian `n x n` matrix equation
/// `Σ terms(i, j) + δ_ij Σ lp(i) = δ_ij · diag_rhs`, one real equation per
/// independent real entry. `skip_diag` drops one diagonal equation.
pub(crate) fn hermitian_equation(
    problem: &mut ConicProblem,
    n: usize,
    complex: bool,
    terms: &dyn Fn(usize, usize) -> Vec<Term>,
    lp: &[(usize, usize, f64)],
    diag_rhs: f64,
    skip_diag: Option<usize>,
) {
    for i in 0..n {
        for j in i..n {
            if i == j {
                if skip_diag == Some(i) {
                    continue;
                }
                let mut f = Functional::new();
                for (v, a, b, c) in terms(i, j) {
                    v.add_re(&mut f, a, b, c);
                }
                for &(blk, p, w) in lp {
                    f.add(blk, p, p, w);
                }
                problem.add_constraint(f, diag_rhs);
            } else {
                let t = terms(i, j);
                let mut f = Functional::new();
                for &(v, a, b, c) in &t {
                    v.add_re(&mut f, a, b, c);
                }
                problem.add_constraint(f, 0.0);
                if complex {
                    let mut g = Functional::new();
                    for &(v, a, b, c) in &t {
                        v.add_im(&mut g, a, b, c);
                    }
                    problem.add_constraint(g, 0.0);
                }
            }
        }
    }
}

pub(crate) fn x_index(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

pub(crate) fn y_index(n: usize, k: usize, l: usize) -> usize {
    n * n + k * n + l
}

/// `(XX^*)_{ij}` and `(X^*X)_{ij}` as Gram entries, with `offset` selecting X or Y.
fn row_gram(g: HermVar, n: usize, offset: usize) -> impl Fn(usize, usize) -> Vec<Term> {
    move |i, j| (0..n).map(|k| (g, offset + i * n + k, offset + j * n + k, c64(1.0, 0.0))).collect()
}

fn col_gram(g: HermVar, n: usize, offset: usize) -> impl Fn(usize, usize) -> Vec<Term> {
    move |i, j| (0..n).map(|k| (g, offset + k * n + j, offset + k * n + i, c64(1.0, 0.0))).collect()
}

fn build(m: &Tensor4, mode: RelaxationMode) -> (ConicProblem, HermVar) {
    let n = m.n();
    let side = 2 * n * n;
    let complex = mode != RelaxationMode::UnitaryReal;
    let nf = n as f64;
    let mut p = ConicProblem::default();
    let gram_trace = match mode {
        RelaxationMode::UnitaryComplex => 4.0 * nf,
        RelaxationMode::UnitaryReal => 2.0 * nf,
        RelaxationMode::NcNorm => 8.0 * nf,
    };
    let g = HermVar { block: 0, side, complex };
    p.add_block(Block::Psd(g.realified_side()), gram_trace);
    for &([i, j, k, l], v) in m.entries() {
        g.add_re(&mut p.objective, x_index(n, i, j), y_index(n, k, l), v);
    }
    match mode {
        RelaxationMode::UnitaryComplex | RelaxationMode::UnitaryReal => {
            for offset in [0, n * n] {
                hermitian_equation(&mut p, n, complex, &row_gram(g, n, offset), &[], 1.0, None);
                // Tr XX* = Tr X*X makes one diagonal equation redundant.
                hermitian_equation(&mut p, n, complex, &col_gram(g, n, offset), &[], 1.0, Some(n - 1));
            }
        }
        RelaxationMode::NcNorm => {
            let slack: Vec<HermVar> = (0..4)
                .map(|_| HermVar { block: p.add_block(Block::Psd(2 * n), 4.0 * nf), side: n, complex: true })
                .collect();
            let lp = p.add_block(Block::Diag(2), 4.0);
            for (v, offset) in [0, n * n].into_iter().enumerate() {
                let s_row = slack[2 * v];
                let s_col = slack[2 * v + 1];
                let rows = row_gram(g, n, offset);
                let cols = col_gram(g, n, offset);
                let with_slack = |base: &dyn Fn(usize, usize) -> Vec<Term>, s: HermVar, i: usize, j: usize| {
                    let mut t = base(i, j);
                    t.push((s, i, j, c64(1.0, 0.0)));
                    t
                };
                // XX* + S = s I  and  X*X + S' + s I = 2 I.
                hermitian_equation(&mut p, n, true, &|i, j| with_slack(&rows, s_row, i, j), &[(lp, v, -1.0)], 0.0, None);
                hermitian_equation(&mut p, n, true, &|i, j| with_slack(&cols, s_col, i, j), &[(lp, v, 1.0)], 2.0, None);
            }
        }
    }
    (p, g)
}

/// Factors a PSD Gram matrix `G = V V^*`, dropping eigenvalues below
/// `1e-10 · λ_max`; row `a` of `V` is the vector for Gram index `a`.
fn factor_gram(g: &CMatrix, n: usize) -> (VecMat, VecMat) {
    let (values, u) = hermitian_eigen(g);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..values.len()).filter(|&c| values[c] > 1e-10 * top && values[c] > 0.0).collect();
    let d = keep.len().max(1);
    let mut data = vec![c64(0.0, 0.0); 2 * n * n * d];
    for a in 0..2 * n * n {
        for (r, &c) in keep.iter().enumerate() {
            data[a * d + r] = u[(a, c)] * values[c].sqrt();
        }
    }
    let half = n * n * d;
    (
        VecMat::from_raw(n, d, data[..half].to_vec()).expect("sized above"),
        VecMat::from_raw(n, d, data[half..].to_vec()).expect("sized above"),
    )
}

fn gram_norms(x: &VecMat) -> (f64, f64) {
    let (r, c) = x.gram_products();
    (r.op_norm(), c.op_norm())
}

pub fn residual(mode: RelaxationMode, x: &VecMat) -> f64 {
    let (r, c) = x.gram_products();
    match mode {
        RelaxationMode::NcNorm => (r.op_norm() + c.op_norm() - 2.0).max(0.0),
        _ => {
            let id = CMatrix::identity(x.n(), x.n());
            (r - &id).op_norm().max((c - id).op_norm())
        }
    }
}

pub fn solve_relaxation(m: &Tensor4, mode: RelaxationMode, opts: &SolverOptions) -> Result<GramSolution> {
    if mode == RelaxationMode::UnitaryReal && !m.is_real() {
        return Err(domain("the real relaxation needs a real tensor"));
    }
    let n = m.n();
    let (problem, g) = build(m, mode);
    let sol = ipm::solve(&problem, opts)?;
    let gram = g.extract(&sol.x[0]);
    let (mut x, mut y) = factor_gram(&gram, n);
    match mode {
        RelaxationMode::NcNorm => {
            for v in [&mut x, &mut y] {
                let (a, b) = gram_norms(v);
                if a + b > 2.0 {
                    *v = v.scaled(c64((2.0 / (a + b)).sqrt(), 0.0));
                }
            }
        }
        _ => {
            for v in [&mut x, &mut y] {
                let (a, b) = gram_norms(v);
                let s = a.max(b).max(1.0);
                *v = v.scaled(c64(1.0 / s.sqrt(), 0.0));
            }
            let (r, s) = embed_to_exact_unitary(&x, &y, opts.feas_tol)?;
            (x, y) = compress_pair(&r, &s)?;
        }
    }
    let raw = m.evaluate(&x, &y)?;
    let rot = phase(raw).conj();
    let x = if mode == RelaxationMode::UnitaryReal { x.scaled(c64(rot.re.signum(), 0.0)) } else { x.scaled(rot) };
    let value = m.evaluate(&x, &y)?.re.max(0.0);
    Ok(GramSolution {
        mode,
        residuals: Residuals { x: residual(mode, &x), y: residual(mode, &y) },
        x,
        y,
        value,
        upper_bound: sol.upper_bound,
        primal_objective: sol.primal_objective,
        iterations: sol.iterations,
    })
}

fn clip_to_contraction(x: &VecMat, tol: f64) -> Result<VecMat> {
    let (a, b) = gram_norms(x);
    let worst = a.max(b);
    if worst > 1.0 + tol {
        return Err(domain(format!("Gram product norm {worst} exceeds 1 + {tol}")));
    }
    Ok(if worst > 1.0 { x.scaled(c64(1.0 / worst.sqrt(), 0.0)) } else { x.clone() })
}

/// Components `√(λ_i μ_j / σ) u_i v_j^*` that fill the deficits `I − XX^*` and `I − X^*X`.
fn padding(x: &VecMat) -> Vec<CMatrix> {
    let n = x.n();
    let (r, c) = x.gram_products();
    let id = CMatrix::identity(n, n);
    let (lam, u) = hermitian_eigen(&(&id - r));
    let (mu, v) = hermitian_eigen(&(id - c));
    let lam: Vec<f64> = lam.into_iter().map(|l| l.max(0.0)).collect();
    let mu: Vec<f64> = mu.into_iter().map(|l| l.max(0.0)).collect();
    let sigma = 0.5 * (lam.iter().sum::<f64>() + mu.iter().sum::<f64>());
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let w = if sigma > 0.0 { (lam[i] * mu[j] / sigma).sqrt() } else { 0.0 };
            out.push(u.column(i) * v.column(j).adjoint() * c64(w, 0.0));
        }
    }
    out
}

/// Extends contractions `X`, `Y` to exact vector-valued unitaries `R`, `S` of
/// dimension `d + 2n^2` with `<R_ij, S_kl> = <X_ij, Y_kl>`.
pub fn embed_to_exact_unitary(x: &VecMat, y: &VecMat, tol: f64) -> Result<(VecMat, VecMat)> {
    let n = x.n();
    if y.n() != n || y.d() != x.d() {
        return Err(shape("embed_to_exact_unitary needs matching shapes"));
    }
    let x = clip_to_contraction(x, tol)?;
    let y = clip_to_contraction(y, tol)?;
    let zeros = vec![CMatrix::zeros(n, n); n * n];
    let mut r = x.components();
    r.extend(padding(&x));
    r.extend(zeros.iter().cloned());
    let mut s = y.components();
    s.extend(zeros);
    s.extend(padding(&y));
    Ok((VecMat::from_components(&r)?, VecMat::from_components(&s)?))
}
