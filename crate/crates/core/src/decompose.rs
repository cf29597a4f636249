//! Greedy decomposition `M = Σ α_t conj(A_t) ⊗ B_t + E` by repeated
//! solve-and-round, and an exhaustive-search approximation scheme for dense
//! tiny instances built on it.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::linalg::{c64, CMatrix, MatrixExt, C64};
use crate::pipeline::{approximate_opt_complex, approximate_opt_real, Approximation, PipelineConfig};
use crate::sdp::{hermitian_equation, ipm, Block, ConicProblem, Functional, HermVar, SolverOptions};
use crate::tensor::{contract_best_response, contract_best_response_right, Tensor4};

#[derive(Clone, Debug)]
pub struct Term {
    pub alpha: C64,
    pub a: CMatrix,
    pub b: CMatrix,
}

/// Relaxation upper bound and rounded value for one step, with `‖M_τ‖₂²`
/// before the step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub terms: Vec<Term>,
    pub residual: Tensor4,
    pub certificates: Vec<Certificate>,
    /// Rounded lower bound on the optimum of the input.
    pub lower_bound: f64,
    /// Relaxation upper bound on the optimum of `residual`.
    pub residual_upper_bound: f64,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ α_t conj(A_t) ⊗ B_t + E`.
    pub fn reconstruct(&self) -> Result<Tensor4> {
        let mut m = self.residual.clone();
        for t in &self.terms {
            m = m.minus_product(-t.alpha, &t.a, &t.b)?;
        }
        Ok(m)
    }

    /// `⌈4n²‖M‖₂²/(ε(1−ε)·LB₀)²⌉`, the step bound implied by the energy decrement.
    pub fn step_bound(n: usize, frobenius: f64, eps: f64, lower_bound: f64) -> f64 {
        let n2 = (n * n) as f64;
        (4.0 * n2 * frobenius.powi(2) / (eps * (1.0 - eps) * lower_bound).powi(2)).ceil()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecomposeMode {
    /// Unitary terms, bounding `Opt_C` of the residual.
    Complex,
    /// Orthogonal terms for real tensors, bounding `Opt_R` of the residual.
    Real,
}

#[derive(Clone, Debug)]
pub struct DecomposeConfig {
    pub pipeline: PipelineConfig,
    pub mode: DecomposeMode,
    pub max_terms: usize,
    /// Rounding attempts per step before accepting a value below the target.
    pub attempts: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { pipeline: PipelineConfig::default(), mode: DecomposeMode::Complex, max_terms: 500, attempts: 4 }
    }
}

fn round_step(m: &Tensor4, eps: f64, config: &DecomposeConfig, step: usize) -> Result<Approximation> {
    let target = match config.mode {
        DecomposeMode::Complex => (1.0 - eps) / 2.0,
        DecomposeMode::Real => (1.0 - eps) / (2.0 * SQRT_2),
    };
    let mut best: Option<Approximation> = None;
    for attempt in 0..config.attempts.max(1) {
        let mut pipeline = config.pipeline.clone();
        pipeline.seed = config.pipeline.seed.wrapping_add((step * config.attempts.max(1) + attempt) as u64);
        let approx = match config.mode {
            DecomposeMode::Complex => approximate_opt_complex(m, &pipeline)?,
            DecomposeMode::Real => approximate_opt_real(m, &pipeline)?,
        };
        let done = approx.pair.value >= target * approx.upper_bound;
        if best.as_ref().is_none_or(|b| approx.pair.value > b.pair.value) {
            best = Some(approx);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one attempt"))
}

/// Peels rank-one terms off `M` until the relaxation certifies that the
/// residual's optimum is at most `ε` times the first rounded value.
pub fn decompose(m: &Tensor4, eps: f64, config: &DecomposeConfig) -> Result<Decomposition> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(domain(format!("decompose needs 0 < eps <= 1/2, got {eps}")));
    }
    if m.nnz() == 0 {
        return Err(domain("decompose needs a nonzero tensor"));
    }
    if config.mode == DecomposeMode::Real && !m.is_real() {
        return Err(domain("real decomposition needs a real tensor"));
    }
    let n2 = (m.n() * m.n()) as f64;
    let mut dec = Decomposition {
        terms: Vec::new(),
        residual: m.clone(),
        certificates: Vec::new(),
        lower_bound: 0.0,
        residual_upper_bound: f64::INFINITY,
    };
    let fail = |dec: Decomposition, e: Error| Error::Decomposition { partial: Box::new(dec), source: Box::new(e) };
    loop {
        let step = dec.terms.len();
        let approx = match round_step(&dec.residual, eps, config, step) {
            Ok(a) => a,
            Err(e) => return Err(fail(dec, e)),
        };
        if step == 0 {
            dec.lower_bound = approx.pair.value;
            if dec.lower_bound <= 0.0 {
                return Err(fail(dec, domain("rounding found no positive value")));
            }
        }
        dec.residual_upper_bound = approx.upper_bound;
        if approx.upper_bound <= eps * dec.lower_bound {
            return Ok(dec);
        }
        if step >= config.max_terms {
            let e = Error::Resource(format!("more than {} terms needed", config.max_terms));
            return Err(fail(dec, e));
        }
        let pair = approx.pair;
        let v = dec.residual.evaluate_matrices(&pair.a, &pair.b)?;
        if v.norm() == 0.0 {
            return Err(fail(dec, domain("rounding made no progress")));
        }
        let alpha = v / n2;
        let energy = dec.residual.frobenius().powi(2);
        dec.residual = dec.residual.minus_product(alpha, &pair.a, &pair.b)?;
        dec.certificates.push(Certificate { upper_bound: approx.upper_bound, lower_bound: v.norm(), energy });
        dec.terms.push(Term { alpha, a: pair.a, b: pair.b });
    }
}

#[derive(Clone, Debug)]
pub struct PtasConfig {
    pub decompose: DecomposeConfig,
    pub max_tuples: usize,
    pub max_feasibility_checks: usize,
}

impl Default for PtasConfig {
    fn default() -> Self {
        Self { decompose: DecomposeConfig::default(), max_tuples: 2_000_000, max_feasibility_checks: 5_000 }
    }
}

#[derive(Clone, Debug)]
pub struct PtasOutcome {
    /// `|M(A, B)|` for the returned unitaries.
    pub value: f64,
    pub a: CMatrix,
    pub b: CMatrix,
    /// `|Σ α_t a_t b_t|` at the best feasible grid tuple.
    pub grid_value: f64,
    pub terms: usize,
    pub feasibility_checks: usize,
}

/// Grid points `δ(p + iq)` whose cells meet the disc of radius `r`.
fn disc_grid(r: f64, delta: f64) -> Vec<C64> {
    let k = (r / delta).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for p in -k..=k {
        for q in -k..=k {
            let z = c64(p as f64 * delta, q as f64 * delta);
            if z.norm() <= r + delta / SQRT_2 {
                pts.push(z);
            }
        }
    }
    pts
}

/// Looks for a contraction `X` with `Tr(A_t* X)` in the square cell of side
/// `δ` around `targets[t]`, minimizing a uniform violation `ν`.
fn feasible_contraction(terms: &[Term], targets: &[C64], delta: f64) -> Result<Option<CMatrix>> {
    let n = terms[0].a.nrows();
    let mut problem = ConicProblem::default();
    let var = HermVar { block: 0, side: 2 * n, complex: true };
    problem.add_block(Block::Psd(4 * n), 4.0 * n as f64);
    let lp = problem.add_block(Block::Diag(1 + 4 * terms.len()), 4.0 * n as f64 * (1.0 + 4.0 * terms.len() as f64));
    let diag_block = |offset: usize| {
        move |i: usize, j: usize| vec![(var, offset + i, offset + j, c64(1.0, 0.0))]
    };
    hermitian_equation(&mut problem, n, true, &diag_block(0), &[], 1.0, None);
    hermitian_equation(&mut problem, n, true, &diag_block(n), &[], 1.0, None);
    for (t, (term, target)) in terms.iter().zip(targets).enumerate() {
        for (part, center) in [(0usize, target.re), (1, target.im)] {
            for (side, sign) in [(0usize, 1.0), (1, -1.0)] {
                // sign·(part of Tr(A* X) − center) + s − ν = δ/2
                let mut f = Functional::new();
                for i in 0..n {
                    for j in 0..n {
                        let c = term.a[(i, j)].conj() * sign;
                        if part == 0 {
                            var.add_re(&mut f, i, n + j, c);
                        } else {
                            var.add_im(&mut f, i, n + j, c);
                        }
                    }
                }
                let slack = 1 + 4 * t + 2 * part + side;
                f.add(lp, slack, slack, 1.0);
                f.add(lp, 0, 0, -1.0);
                problem.add_constraint(f, delta / 2.0 + sign * center);
            }
        }
    }
    problem.objective.add(lp, 0, 0, -1.0);
    let sol = ipm::solve(&problem, &SolverOptions { gap_tol: 1e-9, ..SolverOptions::default() })?;
    let nu = match &sol.x[lp] {
        ipm::BlockValue::Diag(v) => v[0],
        ipm::BlockValue::Psd(_) => unreachable!("LP block"),
    };
    if nu > 1e-3 * delta {
        return Ok(None);
    }
    let h = var.extract(&sol.x[0]);
    Ok(Some(CMatrix::from_fn(n, n, |i, j| h[(i, n + j)])))
}

/// Approximates `Opt_C(M)` for dense tiny instances, where the rounded
/// optimum is at least `κ n ‖M‖₂`.
pub fn ptas_dense(m: &Tensor4, kappa: f64, eps: f64, config: &PtasConfig) -> Result<PtasOutcome> {
    if !(kappa > 0.0) {
        return Err(domain("kappa must be positive"));
    }
    let n = m.n();
    let mut dcfg = config.decompose.clone();
    dcfg.mode = DecomposeMode::Complex;
    let dec = decompose(m, eps, &dcfg)?;
    let nf = n as f64;
    if dec.lower_bound < kappa * nf * m.frobenius() * (1.0 - 1e-6) {
        return Err(domain(format!(
            "instance is not dense: lower bound {:.6e} is below kappa*n*|M|_2 = {:.6e}",
            dec.lower_bound,
            kappa * nf * m.frobenius()
        )));
    }
    let terms = dec.terms;
    let t = terms.len();
    let delta = eps * kappa * nf / t as f64;
    let grid = disc_grid(nf, delta);
    let count = (grid.len() as f64).powi(t as i32);
    if count > config.max_tuples as f64 {
        return Err(Error::Resource(format!("{count:.3e} grid tuples exceed the budget of {}", config.max_tuples)));
    }
    let b_value = |a: &[C64]| -> f64 {
        let mut c = CMatrix::zeros(n, n);
        for (term, &at) in terms.iter().zip(a) {
            c += &term.b * (term.alpha * at);
        }
        c.nuclear_norm()
    };
    let mut tuples: Vec<(f64, usize)> = (0..count as usize)
        .into_par_iter()
        .map(|code| {
            let a = decode(code, grid.len(), t).map(|g| grid[g]).collect::<Vec<_>>();
            (b_value(&a), code)
        })
        .collect();
    tuples.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut checks = 0;
    for &(grid_value, code) in &tuples {
        if checks >= config.max_feasibility_checks {
            return Err(Error::Resource(format!("no feasible tuple within {checks} feasibility checks")));
        }
        checks += 1;
        let targets: Vec<C64> = decode(code, grid.len(), t).map(|g| grid[g]).collect();
        let Some(x) = feasible_contraction(&terms, &targets, delta)? else {
            continue;
        };
        let (b, _) = contract_best_response_right(m, &x)?;
        let (a, value) = contract_best_response(m, &b)?;
        return Ok(PtasOutcome { value, a, b, grid_value, terms: t, feasibility_checks: checks });
    }
    Err(Error::Resource("no feasible grid tuple".into()))
}

fn decode(mut code: usize, base: usize, len: usize) -> impl Iterator<Item = usize> {
    (0..len).map(move |_| {
        let g = code % base;
        code /= base;
        g
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;
    use crate::tensor::tests::{random_matrix, random_tensor};
    use crate::tensor::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        svd(&random_matrix(rng, n)).unitary()
    }

    fn fast() -> DecomposeConfig {
        DecomposeConfig { pipeline: PipelineConfig { trials: 64, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn rank_one_tensor_takes_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let (a, b) = (unitary(&mut rng, 2), unitary(&mut rng, 2));
        let alpha = c64(0.6, -0.8);
        let m = Tensor4::rank_one(alpha, &a, &b).unwrap();
        let dec = decompose(&m, 0.3, &fast()).unwrap();
        assert_eq!(dec.len(), 1);
        assert!((dec.terms[0].alpha.norm() - 1.0).abs() < 1e-6);
        assert!(dec.residual.frobenius() < 1e-2 * m.frobenius(), "{}", dec.residual.frobenius());
        assert!((dec.reconstruct().unwrap().to_dense().iter().zip(m.to_dense()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)) < 1e-12);
    }

    #[test]
    fn random_decomposition_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let m = random_tensor(&mut rng, 2, Field::Complex);
        let eps = 0.3;
        let dec = decompose(&m, eps, &fast()).unwrap();
        assert!(dec.residual_upper_bound <= eps * dec.lower_bound);
        let back = dec.reconstruct().unwrap();
        let err = back.to_dense().iter().zip(m.to_dense()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8);
        for t in &dec.terms {
            assert!(t.a.is_unitary(1e-8) && t.b.is_unitary(1e-8));
        }
        let mut energies: Vec<f64> = dec.certificates.iter().map(|c| c.energy).collect();
        energies.push(dec.residual.frobenius().powi(2));
        assert!(energies.windows(2).all(|w| w[1] < w[0]));
        assert!(dec.len() as f64 <= Decomposition::step_bound(2, m.frobenius(), eps, dec.lower_bound));
    }

    #[test]
    fn real_mode_gives_orthogonal_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let m = random_tensor(&mut rng, 2, Field::Real);
        let cfg = DecomposeConfig { mode: DecomposeMode::Real, ..fast() };
        let dec = decompose(&m, 0.5, &cfg).unwrap();
        assert!(dec.residual.is_real());
        for t in &dec.terms {
            assert!(t.a.is_real_orthogonal(1e-8) && t.b.is_real_orthogonal(1e-8));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = Tensor4::haagerup(2);
        assert!(decompose(&m, 0.0, &fast()).is_err());
        assert!(decompose(&m, 0.6, &fast()).is_err());
        assert!(decompose(&Tensor4::zeros(2, Field::Real), 0.3, &fast()).is_err());
    }

    #[test]
    fn ptas_on_scalar_is_exact() {
        let m = Tensor4::new(1, Field::Complex, [([0, 0, 0, 0], c64(1.0, -2.0))]).unwrap();
        let cfg = PtasConfig { decompose: fast(), ..Default::default() };
        let out = ptas_dense(&m, 1.0, 0.3, &cfg).unwrap();
        assert!((out.value - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(out.terms, 1);
    }

    #[test]
    fn ptas_on_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let (a, b) = (unitary(&mut rng, 2), unitary(&mut rng, 2));
        let m = Tensor4::rank_one(c64(0.0, 2.0), &a, &b).unwrap();
        let cfg = PtasConfig { decompose: fast(), ..Default::default() };
        let out = ptas_dense(&m, 1.0, 0.3, &cfg).unwrap();
        assert!((out.value - 8.0).abs() < 0.3 * 8.0);
        assert!(out.a.is_unitary(1e-9) && out.b.is_unitary(1e-9));
        assert!(matches!(ptas_dense(&m, 2.0, 0.3, &cfg), Err(Error::Domain(_))));
    }
}
