//! Solver report document. Serialized as pretty-printed JSON with a fixed
//! field order; the schema lives in `docs/report.schema.json`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxItersReached,
}

impl Status {
    /// Optimal or a verified infeasibility certificate.
    pub fn is_conclusive(self) -> bool {
        !matches!(self, Status::MaxItersReached)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "Optimal",
            Status::PrimalInfeasible => "PrimalInfeasible",
            Status::DualInfeasible => "DualInfeasible",
            Status::MaxItersReached => "MaxItersReached",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Wall-clock seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub setup: f64,
    pub iteration: f64,
    pub total: f64,
}

/// One entry of a block matrix; indices are 1-based as in SDPA files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Primal matrix on the aggregate sparsity pattern (upper triangle).
    pub x: Vec<MatrixEntry>,
    pub y: Vec<f64>,
    /// Dual slack `Z = Σ_k H_kᵀ v_k` on the chordal extension (upper triangle).
    pub z: Vec<MatrixEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProblemStats {
    pub n: usize,
    pub m: usize,
    pub cliques: usize,
    pub max_clique: usize,
    pub min_clique: usize,
    pub decomposed_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: Status,
    /// Primal objective in the problem's reporting convention.
    pub objective_primal: Option<f64>,
    pub objective_dual: Option<f64>,
    pub iterations: usize,
    /// Residuals of the reported iterate; absent when `τ` was too small to
    /// form one.
    pub residuals: Option<Residuals>,
    pub timing: Timing,
    pub tau: f64,
    pub kappa: f64,
    pub problem: ProblemStats,
    /// Dimensions of every matrix factorized during setup.
    pub factorization_dims: Vec<usize>,
    pub solution: Option<Solution>,
    /// `y` with `bᵀy = 1`, `Aᵀy + Hᵀv ≈ 0`, `v ⪰ 0`.
    pub primal_certificate: Option<Vec<f64>>,
    /// `x` with `cᵀx = −1`, `Ax ≈ 0`, `Hx ⪰ 0`, on the aggregate pattern.
    pub dual_certificate: Option<Vec<MatrixEntry>>,
}

pub fn emit_report(r: &SolverReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report<W: Write>(mut w: W, r: &SolverReport) -> Result<()> {
    w.write_all(emit_report(r)?.as_bytes())?;
    Ok(())
}

pub fn read_report(text: &str) -> Result<SolverReport> {
    Ok(serde_json::from_str(text)?)
}
