//! Quantum U-statistics on tensor products of finite-dimensional systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`] dense operator algebra on `(C^d)^{⊗n}`: embeddings, site
//!   permutations, symmetrization and the two bilinear forms of a reference
//!   state.
//! * [`hoeffding`] conditional expectations onto site subsets, Hoeffding
//!   projections and kernel components.
//! * [`ustat`] U-statistic assembly (direct subset sum and fluctuation
//!   polynomial), exact variances and centered moments, and a classical
//!   Monte-Carlo oracle for diagonal kernels.
//! * [`ccr`] the limiting CCR structure: ortho-symplectic basis, quasifree
//!   moments (pair partitions and a truncated Fock oracle), Hermite machinery
//!   and the limit polynomial of a degenerate kernel.
//! * [`apps`] goodness-of-fit and homogeneity tests and the metrology overlap.

pub mod apps;
pub mod ccr;
pub mod error;
pub mod hoeffding;
pub mod linalg;
pub mod operator;
pub mod ustat;

pub use error::{Error, Result};
pub use operator::{DensityMatrix, HermitianOperator, Kernel, SiteSubset};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
