//! Truncated PCA for very wide sparse datasets.
//!
//! Rows are first pushed through a seeded feature hash `H` (`p -> d`, never
//! materialized), then a two-pass randomized range finder recovers the top
//! `k` principal directions of the hashed covariance. Working storage is
//! `O(d l)` regardless of `n` and `p`.
//!
//! ```no_run
//! use hpca::{fit, parse_libsvm, HashSpec, HpcaConfig};
//!
//! let ds = parse_libsvm("train.svm", None)?;
//! let cfg = HpcaConfig::new(10, HashSpec::new(1 << 16, 1, 2)?).with_oversampling(20);
//! let model = fit(&ds, &cfg)?;
//! let scores = model.project_whitened(&ds.stream_rows().next().unwrap()?)?;
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod diagnostics;
pub mod hashing;
pub mod linalg;
pub mod pca;
pub mod sparse_io;
pub mod splitmix;

pub use diagnostics::{
    canonical_angles, coherence_eta, compare_to_exact, compare_with_reference, gram_perturbation,
    recommended_d, CanonicalAngles, Coherence, DiagnosticsError, DiagnosticsReport, EtaMode,
    ExactReference,
};
pub use hashing::{HashError, HashSpec, HashedVector, Projector};
pub use linalg::{
    gaussian_matrix, gram_schmidt, oracle_svd, pinv_diag, sym_eig, DenseMatrix, EigenDecomposition,
    LinalgError, Svd,
};
pub use pca::{
    fit, fit_transform, hashed_mean, pass, run_pass, transform_rows, Execution, HpcaConfig,
    PassAccumulator, PcaError, PcaModel,
};
pub use sparse_io::{
    parse_libsvm, synth_lowrank, write_libsvm, SparseDataset, SparseIoError, SparseRow, SynthSpec,
};
pub use splitmix::mix64;
