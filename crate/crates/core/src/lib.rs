//! Markov products of positive definite kernels on finite labeled sets.
//!
//! The crate builds the Markov product of two kernels glued at a single
//! shared label, certifies positive semidefiniteness through an eigenvalue
//! route and an independent Schur-complement route, and checks the product
//! empirically by sampling two independent Gaussian realizations joined at
//! the shared label.

pub mod cli;
pub mod error;
pub mod io;
pub mod kernel;
pub mod psd;
pub mod realization;
pub mod sampling;
pub mod tree;
pub mod verify;

pub use error::{KernelError, Result};
pub use kernel::{
    make_kernel, markov_product, normalize_at_basepoint, GluePoint, IndexedKernel,
    DEFAULT_BASEPOINT_TOL,
};
pub use psd::{
    certify_matrix, psd_check_eigen, psd_check_schur, schur_reduce, PsdCertificate, SchurSplit,
    DEFAULT_PSD_TOL,
};
pub use realization::{
    glue_realizations, realize_process, GluedRealization, RealizationSpec, Tolerances,
};
pub use sampling::{
    estimate_second_moments, sample_glued, sample_glued_with, sample_realization,
    sample_realization_with, second_moment_statistics, MomentEstimate, SampleBatch, SampleOptions,
    StreamTags,
};
pub use tree::{glue_tree, glue_tree_with, GluingTree, Traversal, TreeEdge};
pub use verify::{verify_realization, VerifyConfig, VerifyReport};
