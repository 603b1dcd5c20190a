//! Compact finite difference schemes for the Euler–Bernoulli beam (1D) and
//! plate (2D) equations with nonlinear nonlocal strong damping
//!
//! ```text
//! u_tt + P(∫|Δu|²) u_t + Δ²u = f   on (0,1)^d,   u = Δu = 0 on the boundary
//! ```
//!
//! The fourth-order operator is reduced through `v = Δu`, space is discretised
//! with the fourth-order compact operator `(u_{j-1} + 10 u_j + u_{j+1}) / 12`
//! and time with a three-level implicit scheme. The damping integral is
//! evaluated by composite Simpson rules, which coincide with the weighted
//! discrete norms `‖·‖_B` (1D) and `‖·‖_F` (2D).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and parallel study drivers live in the `damped-eb` crate.

#![no_std]
#![deny(rustdoc::broken_intra_doc_links)]

extern crate alloc;

pub mod damping;
pub mod error;
pub mod expr;
pub mod harness;
pub mod mesh;
pub mod operators;
pub mod stepper1d;
pub mod stepper2d;

mod math;

pub use damping::DampingLaw;
pub use error::Error;
pub use expr::Expression;
pub use mesh::{Grid1D, Grid2D, GridFn1D, GridFn2D, NormKind, TimeGrid};
