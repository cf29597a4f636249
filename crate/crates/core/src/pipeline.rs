//! Solve-then-round pipelines returning feasible pairs for `Opt_R` and `Opt_C`.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::linalg::CMatrix;
use crate::reduction::real_to_hermitian_tensor;
use crate::rng::Sampler;
use crate::rounding::complex::{best_pair, round_complex_trials, PairKind, RoundedPair};
use crate::rounding::derandomized::round_complex_derandomized;
use crate::rounding::hermitian::{check_hermitian, round_hermitian_with};
use crate::rounding::krivine::KrivineRounder;
use crate::rounding::real::{orthogonal_pair, round_real_direct};
use crate::sdp::{solve_relaxation, GramSolution, RelaxationMode, SolverOptions};
use crate::tensor::Tensor4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RealRoute {
    /// Round through the Hermitian problem on side `2n`.
    Hermitian,
    /// Round the real relaxation directly.
    Direct,
    /// Run both and keep the better pair.
    Best,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub solver: SolverOptions,
    pub trials: usize,
    pub seed: u64,
    /// Accuracy of the Krivine rounding in the Hermitian route.
    pub krivine_eps: f64,
    pub real_route: RealRoute,
    /// `Best` only takes the Hermitian route up to this side length; its
    /// relaxation has Gram side `8n^2`.
    pub hermitian_route_max_n: usize,
    /// Use the deterministic rounding with this `ε` instead of random trials.
    pub derandomize: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            trials: 256,
            seed: 0,
            krivine_eps: 0.01,
            real_route: RealRoute::Best,
            hermitian_route_max_n: 3,
            derandomize: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Approximation {
    pub pair: RoundedPair,
    /// Upper bound on the optimum from the relaxation.
    pub upper_bound: f64,
    /// Value of every random trial of the chosen route, in trial order; empty
    /// for the derandomized rounding.
    pub trial_values: Vec<f64>,
}

impl Approximation {
    pub fn ratio(&self) -> f64 {
        if self.upper_bound > 0.0 {
            self.pair.value / self.upper_bound
        } else {
            1.0
        }
    }
}

fn block(a: &CMatrix, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| crate::linalg::c64(a[(i, n + j)].re, 0.0))
}

fn best_with_values(pairs: Vec<RoundedPair>) -> (RoundedPair, Vec<f64>) {
    let values = pairs.iter().map(|p| p.value).collect();
    (best_pair(pairs).expect("at least one trial"), values)
}

fn hermitian_route(m: &Tensor4, config: &PipelineConfig) -> Result<(RoundedPair, Vec<f64>)> {
    let n = m.n();
    let lifted = real_to_hermitian_tensor(m)?;
    let sol = solve_relaxation(&lifted, RelaxationMode::UnitaryComplex, &config.solver)?;
    let rounder = KrivineRounder::new(config.krivine_eps)?;
    let pairs = (0..config.trials.max(1) as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = Sampler::stream(config.seed, i);
            let h = round_hermitian_with(&lifted, &sol.x, &sol.y, &rounder, &mut s)?;
            orthogonal_pair(m, &block(&h.a, n), &block(&h.b, n))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(best_with_values(pairs))
}

fn direct_route(m: &Tensor4, config: &PipelineConfig) -> Result<((RoundedPair, Vec<f64>), f64)> {
    let sol = solve_relaxation(m, RelaxationMode::UnitaryReal, &config.solver)?;
    let pairs = (0..config.trials.max(1) as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = Sampler::stream(config.seed, i);
            let r = round_real_direct(m, &sol.x, &sol.y, &mut s)?;
            orthogonal_pair(m, &r.a, &r.b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((best_with_values(pairs), sol.upper_bound))
}

/// Orthogonal `U`, `V` approximately maximizing `M(U, V)` for a real tensor.
pub fn approximate_opt_real(m: &Tensor4, config: &PipelineConfig) -> Result<Approximation> {
    if !m.is_real() {
        return Err(domain("approximate_opt_real needs a real tensor"));
    }
    let (direct, upper_bound) = direct_route(m, config)?;
    let pair = match config.real_route {
        RealRoute::Direct => direct,
        RealRoute::Hermitian => hermitian_route(m, config)?,
        RealRoute::Best if m.n() <= config.hermitian_route_max_n => {
            let h = hermitian_route(m, config)?;
            if h.0.value > direct.0.value {
                h
            } else {
                direct
            }
        }
        RealRoute::Best => direct,
    };
    debug_assert_eq!(pair.0.kind, PairKind::Orthogonal);
    Ok(Approximation { pair: pair.0, upper_bound, trial_values: pair.1 })
}

fn round_unitary(m: &Tensor4, sol: &GramSolution, config: &PipelineConfig) -> Result<Approximation> {
    let (pair, trial_values) = match config.derandomize {
        Some(eps) => (round_complex_derandomized(m, &sol.x, &sol.y, eps)?, Vec::new()),
        None => best_with_values(round_complex_trials(m, &sol.x, &sol.y, config.trials.max(1), config.seed)?),
    };
    Ok(Approximation { pair, upper_bound: sol.upper_bound, trial_values })
}

/// Unitary `A`, `B` approximately maximizing `|M(A, B)|`.
pub fn approximate_opt_complex(m: &Tensor4, config: &PipelineConfig) -> Result<Approximation> {
    let sol = solve_relaxation(m, RelaxationMode::UnitaryComplex, &config.solver)?;
    round_unitary(m, &sol, config)
}

/// As [`approximate_opt_complex`], rounding the nc-norm relaxation; the upper
/// bound is then on the nc norm.
pub fn approximate_nc(m: &Tensor4, config: &PipelineConfig) -> Result<Approximation> {
    let sol = solve_relaxation(m, RelaxationMode::NcNorm, &config.solver)?;
    round_unitary(m, &sol, config)
}

/// Hermitian contractions `A`, `B` approximately maximizing `|M(A, B)|` for a
/// Hermitian tensor.
pub fn approximate_hermitian(m: &Tensor4, config: &PipelineConfig) -> Result<Approximation> {
    check_hermitian(m)?;
    let sol = solve_relaxation(m, RelaxationMode::UnitaryComplex, &config.solver)?;
    let rounder = KrivineRounder::new(config.krivine_eps)?;
    let pairs = (0..config.trials.max(1) as u64)
        .into_par_iter()
        .map(|i| round_hermitian_with(m, &sol.x, &sol.y, &rounder, &mut Sampler::stream(config.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let (pair, trial_values) = best_with_values(pairs);
    Ok(Approximation { pair, upper_bound: sol.upper_bound, trial_values })
}
