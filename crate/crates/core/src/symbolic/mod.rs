//! Exact symbolic algebra over phase-space atoms and the spatial operator ring.

pub mod atom;
pub mod expr;
pub mod kernel;
pub mod matrix;
pub mod op;
pub mod params;

pub use atom::{Atom, AtomKind, Component, Deriv, Mode};
pub use expr::{Axis, Expr, Monomial, RawExpr};
pub use kernel::{Kernel, KernelTerm};
pub use matrix::KernelMatrix;
pub use op::SpatialOp;
pub use params::{fmt_q, q, q_to_f64, qr, Params, Q};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SymError {
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("inverse Laplacian of a mode-independent constant: {0}")]
    NonInvertibleMode(String),
    #[error("nonlinear operation: {0}")]
    Nonlinear(String),
    #[error("no unit pivot available in column {0}")]
    NonUnitPivot(String),
    #[error("matrix is singular (rank {rank} of {size})")]
    Singular { rank: usize, size: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Canonical form of a raw expression tree.
pub fn normalize(raw: &RawExpr) -> Result<Expr, SymError> {
    raw.evaluate()
}

/// Euler-Lagrange derivative of a density with respect to a base atom.
pub fn functional_derivative(density: &Expr, target: &Atom) -> Result<Expr, SymError> {
    density.functional_derivative(target)
}

pub fn apply_inverse_laplacian(e: &Expr) -> Result<Expr, SymError> {
    e.apply_op(&SpatialOp::laplacian(-1))
}

/// A polynomial density is a total derivative exactly when every
/// Euler-Lagrange derivative vanishes and it has no constant part. Densities
/// whose derivatives are nonlocal are never reported as total derivatives.
pub fn is_total_derivative(density: &Expr) -> bool {
    density.terms().all(|(m, _)| m.degree() > 0)
        && density
            .base_atoms()
            .iter()
            .all(|a| density.functional_derivative(a).is_ok_and(|d| d.is_zero()))
}

/// Equality of two densities up to a total derivative.
pub fn equal_mod_divergence(a: &Expr, b: &Expr) -> bool {
    is_total_derivative(&a.sub(b))
}
