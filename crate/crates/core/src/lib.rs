//! Determinant maximization under matroid constraints.
//!
//! Given vectors `v_1..v_n ∈ R^d` and a matroid over their indices, find a
//! basis `S` maximizing `det(Σ_{i∈S} v_i v_iᵀ)`. The solver runs a local
//! search that exchanges along short, strongly negative cycles of an
//! exchange graph, after an optional support-sparsification step.

// `!(a > b)` is used on purpose: NaN must fail the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod checks;
pub mod cli;
pub mod error;
pub mod exact;
pub mod exchange_graph;
pub mod format;
pub mod gen;
pub mod index_set;
pub mod instance;
pub mod linalg;
pub mod local_search;
pub mod matroid;
pub mod oracle;
pub mod sparsify;
mod util;

pub use error::{Error, Result};
pub use index_set::IndexSet;
pub use instance::Instance;
pub use matroid::Matroid;
