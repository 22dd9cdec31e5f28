//! Block-coordinate projection-free minimization over products of standard simplices.
//!
//! The outer loop ([`solver`]) selects blocks with a parallel, Gauss-Southwell or
//! random rule and updates each selected block with a short step chain ([`ssc`]):
//! a sequence of Frank-Wolfe-type steps ([`directions`]) that reuse one frozen
//! gradient inside a two-ball trust region. Around it sit a Multi-StQP instance
//! generator ([`problems`]), multistart and monotonic basin hopping drivers
//! ([`globalopt`]), and post-processing for support identification and rates
//! ([`diagnostics`]).
//!
//! The crate is `no_std` and needs only `alloc`. File formats, timing and the
//! command line live in the companion `blockfw` crate.
#![no_std]
// `!(x <= t)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod blockvec;
pub mod diagnostics;
pub mod directions;
pub mod domain;
mod error;
pub mod globalopt;
pub mod problems;
pub mod rng;
pub mod solver;
pub mod ssc;

pub use blockvec::{BlockLayout, BlockVector};
pub use directions::{Direction, DirectionKind, Method};
pub use domain::{ProductSimplexDomain, SupportSet};
pub use error::Error;
pub use problems::QuadraticProblem;
pub use solver::{RunResult, SolverConfig, Strategy};

pub type Result<T> = core::result::Result<T, Error>;
