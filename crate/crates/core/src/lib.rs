//! Exactly solvable one-dimensional Schrödinger models, their spectral
//! intertwining and ladder operators, and a harness that certifies the
//! operator identities numerically against closed forms and an independent
//! finite-difference eigensolver.

pub mod diffop;
pub mod error;
pub mod jet;
pub mod models;
pub mod operators;
pub mod oracle;
pub mod quadrature;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
