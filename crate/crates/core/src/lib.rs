//! Self-testing of trusted-trine steering configurations.
//!
//! One party holds three trusted trine measurements on a qubit; the other holds three
//! uncharacterised three-outcome measurements. The crate evaluates the steering functional
//! `W = 3 − Σ p(a,a|x,x)`, bounds it over local-hidden-state models, certifies that maximal
//! violation pins down the state and measurements up to a local unitary, and analyses the
//! noise robustness of the ideal configuration.

pub mod certifier;
pub mod cli;
pub mod error;
pub mod lhs;
pub mod linalg;
pub mod parallel;
pub mod povm;
pub mod robustness;
pub mod scenario;
pub mod tolerance;

pub use error::{Error, Result};
