//! Sparse direct and iterative solvers.

mod eigen;
mod gmres;
mod lu;
mod minres;
mod ordering;

pub use eigen::{eig_smallest_nonzero, EigenOptions, EigenResult};
pub use gmres::{gmres, GmresOutcome};
pub use lu::{factorize, factorize_with_ordering, solve_refined, Factorization};
pub use minres::{minres, minres_minnorm, GradientProjector, KrylovOptions, KrylovReport};
pub use ordering::{minimum_degree, ordering_for};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("zero pivot at elimination step {index}")]
    SingularPivot { index: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigen solver breakdown: {0}")]
    Breakdown(String),
}
