use core::fmt;

use crate::expr::EvalError;
use crate::mesh::NormKind;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    /// Half interval count below the supported minimum of 2.
    GridTooCoarse { j: usize },
    GridMismatch,
    NormNotDefined { kind: NormKind, dim: usize },
    LengthMismatch { expected: usize, got: usize },
    NonzeroBoundary { index: usize, value: f64 },
    InvalidTimeGrid,
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::GridTooCoarse { j } => write!(f, "J = {j} is too coarse (need J >= 2)"),
            MeshError::GridMismatch => f.write_str("grid functions live on different grids"),
            MeshError::NormNotDefined { kind, dim } => {
                write!(f, "norm {kind:?} is not defined in {dim}D")
            }
            MeshError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} nodal values, got {got}")
            }
            MeshError::NonzeroBoundary { index, value } => {
                write!(f, "boundary node {index} carries nonzero value {value}")
            }
            MeshError::InvalidTimeGrid => f.write_str("time grid needs N >= 1 and T > 0"),
        }
    }
}

impl core::error::Error for MeshError {}

/// Nodal evaluation failure, located at the offending node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleError {
    pub x: f64,
    pub y: Option<f64>,
    pub t: f64,
    pub source: EvalError,
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.y {
            Some(y) => write!(f, "{} at (x={}, y={}, t={})", self.source, self.x, y, self.t),
            None => write!(f, "{} at (x={}, t={})", self.source, self.x, self.t),
        }
    }
}

impl core::error::Error for SampleError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// Banded factorisation met a non-positive pivot.
    NotPositiveDefinite { row: usize, pivot: f64 },
    NoConvergence { iterations: usize, relative_residual: f64 },
    InvalidParameter(&'static str),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NotPositiveDefinite { row, pivot } => {
                write!(f, "step matrix not positive definite (pivot {pivot} at row {row})")
            }
            SolveError::NoConvergence {
                iterations,
                relative_residual,
            } => write!(
                f,
                "conjugate gradient did not converge in {iterations} iterations \
                 (relative residual {relative_residual:e})"
            ),
            SolveError::InvalidParameter(what) => write!(f, "invalid solver parameter: {what}"),
        }
    }
}

impl core::error::Error for SolveError {}

/// Crate-level error for steppers and studies.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Mesh(MeshError),
    Sample(SampleError),
    Solve(SolveError),
    Eval(EvalError),
    /// Problem data violating a structural requirement (e.g. `u0` depends on `t`).
    InvalidProblem(&'static str),
    /// Explicit reference integrator blew up.
    Unstable { time: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Mesh(e) => e.fmt(f),
            Error::Sample(e) => e.fmt(f),
            Error::Solve(e) => e.fmt(f),
            Error::Eval(e) => e.fmt(f),
            Error::InvalidProblem(msg) => write!(f, "invalid problem: {msg}"),
            Error::Unstable { time } => write!(
                f,
                "reference integrator became non-finite at t = {time}; reduce the step size"
            ),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Mesh(e) => Some(e),
            Error::Sample(e) => Some(e),
            Error::Solve(e) => Some(e),
            Error::Eval(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MeshError> for Error {
    fn from(e: MeshError) -> Self {
        Error::Mesh(e)
    }
}

impl From<SampleError> for Error {
    fn from(e: SampleError) -> Self {
        Error::Sample(e)
    }
}

impl From<SolveError> for Error {
    fn from(e: SolveError) -> Self {
        Error::Solve(e)
    }
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        Error::Eval(e)
    }
}
