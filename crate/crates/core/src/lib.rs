//! A laboratory for quantum representations of binary classification trees.
//!
//! A tree over `k` binary features and `m` binary labels is parameterized by
//! its compressed decision configuration (a tuple of swap indices) and the
//! training data, loaded as a qsample state over `k + m` qubits. Measuring the
//! structure-encoded state performs a probabilistic traversal: the first
//! `d + 1` qubits select a leaf, the last `m` qubits sample its label
//! distribution. On top of that core sit a genetic induction loop, three
//! prediction pathways, a binomial/ratio uncertainty calculus, and an
//! ancilla-indexed forest generalization.
//!
//! Conventions used across every module:
//!
//! - Feature, label, and qubit indices are 1-based.
//! - Bit 1 is the most significant position; the basis index of a feature
//!   vector `x` and label vector `y` is `sum_i x_i 2^(k+m-i) + sum_j y_j 2^(m-j)`.
//! - "Maximum depth `d`" means decision layers `0..=d`; leaves are addressed
//!   by bit strings of length `d + 1`.

pub mod circuit;
pub mod dataset;
mod error;
pub mod estimator;
pub mod forest;
pub mod induction;
pub mod metrics;
pub mod predictor;
pub mod prob;
pub mod statevector;
pub mod tree;
pub mod util;

pub use error::{Error, Result};
