//! Identifiability and stability certificates for sparse linear coding.
//!
//! Given a dictionary `A`, sparse codes `x_i` and a support hypergraph `H`,
//! this crate computes the restricted lower bounds, the stability constants
//! `C1`/`C2` and the noise thresholds under which every alternative
//! factorization `(B, x̄)` of the data must agree with `(A, x_i)` up to a
//! permutation and scaling of columns. It also ships the tooling to check
//! those guarantees numerically on small instances.

pub mod alignment;
pub mod assignment;
pub mod certificate;
pub mod codes;
pub mod combinatorics;
pub mod constants;
pub mod error;
pub mod harness;
pub mod hypergraph;
pub mod io;
pub mod subspace;

pub use alignment::{
    align_dictionaries, align_dictionaries_with_target, code_alignment_error, verify_theorem1,
    AlignmentResult, MatchedPair, Theorem1Report,
};
pub use certificate::{certify, CertificateFlags, CertifyOptions, StabilityCertificate};
pub use codes::{
    general_linear_position, generate_instance, support_index_sets, synthesize_dataset,
    vandermonde_codes, Dataset, NoiseModel, SparseCodeSet,
};
pub use constants::{compute_c1, compute_c2, epsilon_for, sample_size_cor1, sample_size_thm2};
pub use error::{Error, Result};
pub use hypergraph::{Hypergraph, SupportSet};
pub use subspace::{
    friedrichs_angle, intersect, lower_bound_k, orthonormal_basis, restricted_lower_bound,
    spark_condition, spark_polynomial, subspace_distance, xi, Dictionary, Subspace,
    DEFAULT_RANK_TOL,
};
