//! Rounding procedures that turn relaxed solutions into feasible matrices.

pub mod complex;
pub mod derandomized;
pub mod fourwise;
pub mod hermitian;
pub mod krivine;
pub mod real;

pub use complex::{
    best_pair, round_complex, round_complex_best_of, round_complex_trials, sample_secant, PairKind, RoundedPair,
    RoundingSample,
};
pub use derandomized::round_complex_derandomized;
pub use fourwise::{fourwise_z_family, FourwiseFamily};
pub use hermitian::{round_hermitian, round_hermitian_with};
pub use krivine::{krivine_coeffs, krivine_f, krivine_g, round_2d, KrivineCoefficients, KrivineRounder};
pub use real::{orthogonal_pair, round_real_direct, to_orthogonal, to_orthogonal_traced, TAU};
