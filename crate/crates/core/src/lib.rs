//! Semidefinite relaxations and rounding algorithms for optimizing bilinear
//! and sesquilinear forms over pairs of orthogonal or unitary matrices.

pub mod apps;
pub mod decompose;
pub mod error;
pub mod format;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod reduction;
pub mod rng;
pub mod rounding;
pub mod sdp;
pub mod tensor;
pub mod vecmat;

pub use apps::{embed_bilinear, extract_blocks, l1_pca, procrustes, r1_pca, BilinearForm, BlockMaps, Coefficient};
pub use decompose::{decompose, ptas_dense, DecomposeConfig, DecomposeMode, Decomposition, PtasConfig, Term};
pub use error::{Error, Result};
pub use linalg::{c64, CMatrix, MatrixExt, RMatrix, C64};
pub use pipeline::{approximate_hermitian, approximate_nc, approximate_opt_complex, approximate_opt_real, Approximation, PipelineConfig, RealRoute};
pub use rng::Sampler;
pub use rounding::{PairKind, RoundedPair};
pub use sdp::{embed_to_exact_unitary, solve_relaxation, GramSolution, RelaxationMode, SolverOptions};
pub use tensor::{contract_best_response, grothendieck_embed, Field, Tensor4};
pub use vecmat::VecMat;
