//! Exact evolutionary-stable-strategy analysis and the clique reduction built on it.
//!
//! All arithmetic is over arbitrary-precision rationals. Irrational bounds are
//! carried as directed rational enclosures so membership decisions stay exact.

pub mod clique;
pub mod error;
pub mod ess;
pub mod game;
pub mod graph;
pub mod linalg;
pub mod qp;
pub mod rational;
pub mod reduction;
pub mod robust;
pub mod search;

pub use error::{Error, Result};
pub use game::{expected_payoff, MixedStrategy, SymmetricGame};
pub use graph::Graph;
pub use rational::Rational;
