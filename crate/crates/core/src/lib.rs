//! Sparse semidefinite programming by chordal decomposition and ADMM on the
//! homogeneous self-dual embedding.
//!
//! The pipeline is: parse an SDPA file ([`sdpa`]), decompose the PSD cone
//! over the maximal cliques of a chordal extension of the aggregate
//! sparsity pattern ([`decompose`]), then run the operator-splitting solver
//! ([`hsde`]) and emit a [`report::SolverReport`].

pub mod chordal;
pub mod decompose;
pub mod error;
pub mod hsde;
pub mod report;
pub mod sdpa;
pub mod sparse;
pub mod symmat;

pub use decompose::{decompose, decompose_with, DecomposeMode, DecomposedProblem};
pub use error::{Error, Result};
pub use hsde::{solve, Solver, SolverSettings};
pub use report::{emit_report, SolverReport, Status};
pub use sdpa::{parse_sdpa, read_sdpa_file, SdpProblem};
