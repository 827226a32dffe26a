// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Hierarchical lasso for group variable selection.
//!
//! Coefficients are factored as `β_kj = d_k · α_kj`: a non-negative multiplier
//! per group and an L1-penalized effect per variable, so whole groups and
//! individual variables within surviving groups can both be removed.

pub mod engine;
pub mod glm;
pub mod io;
pub mod error;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod simbench;

pub use engine::{
    adaptive_weights, check_lemma1_equivalence, fit_hlasso, fit_hlasso_orthogonal, fit_path, objective_beta,
    recover_d_alpha, FitOptions, GridSpec, InitMode,
};
pub use error::{Error, Result};
pub use model::{
    build_group_structure, destandardize, standardize, GroupStructure, HLassoFit, OriginalScale, PenaltySpec,
    ResponseMode, StandardizedDataset, WeightRecipe,
};
pub use prox::{soft_threshold, SolverOptions};
