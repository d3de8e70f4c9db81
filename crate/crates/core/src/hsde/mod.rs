//! Homogeneous self-dual embedding of the decomposed problem and the ADMM
//! iteration that solves it.
//!
//! The embedding couples `u = (x, s, y, v, τ)` and `w = (h, z, r, w, κ)`
//! through `w = Q u` with
//!
//! ```text
//!       [  0   0  -Aᵀ  -Hᵀ   c ]
//!       [  0   0   0    I    0 ]
//!   Q = [  A   0   0    0   -b ]
//!       [  H  -I   0    0    0 ]
//!       [ -cᵀ  0   bᵀ   0    0 ]
//! ```
//!
//! and asks for `u ∈ K`, `w ∈ K*` where `K` is free in `x`, `y`, `v`, PSD per
//! clique in `s` and nonnegative in `τ`.

mod kkt;
mod solver;

pub use kkt::KktCache;
pub use solver::{solve, Solver, SolverSettings, TraceRecord};

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::decompose::{Clique, DecomposedProblem};
use crate::error::Result;
use crate::symmat::project_psd_in_place;

/// Block sizes of an HSDE vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HsdeDims {
    pub nx: usize,
    pub nd: usize,
    pub m: usize,
}

impl HsdeDims {
    pub fn of(dp: &DecomposedProblem) -> Self {
        Self {
            nx: dp.nx,
            nd: dp.n_d,
            m: dp.m,
        }
    }

    /// Length of `u` (and of `w`).
    pub fn len(&self) -> usize {
        self.nx + 2 * self.nd + self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self) -> Range<usize> {
        0..self.nx
    }

    pub fn s(&self) -> Range<usize> {
        self.nx..self.nx + self.nd
    }

    pub fn y(&self) -> Range<usize> {
        let o = self.nx + self.nd;
        o..o + self.m
    }

    pub fn v(&self) -> Range<usize> {
        let o = self.nx + self.nd + self.m;
        o..o + self.nd
    }

    pub fn tau(&self) -> usize {
        self.len() - 1
    }
}

/// The cone `K` of the embedding.
#[derive(Debug, Clone)]
pub struct Cone {
    pub dims: HsdeDims,
    /// `(offset into s, clique size)` per PSD block.
    pub blocks: Vec<(usize, usize)>,
}

impl Cone {
    pub fn of(dp: &DecomposedProblem) -> Self {
        Self {
            dims: HsdeDims::of(dp),
            blocks: dp.cliques.iter().map(|c: &Clique| (c.s_offset, c.size())).collect(),
        }
    }
}

/// `Q` as a matrix-free operator.
#[derive(Debug, Clone, Copy)]
pub struct HsdeOperator<'a> {
    dp: &'a DecomposedProblem,
    dims: HsdeDims,
}

pub fn build_hsde(dp: &DecomposedProblem) -> (HsdeOperator<'_>, Cone) {
    (
        HsdeOperator {
            dp,
            dims: HsdeDims::of(dp),
        },
        Cone::of(dp),
    )
}

impl HsdeOperator<'_> {
    pub fn dims(&self) -> HsdeDims {
        self.dims
    }

    /// `out = Q u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let d = self.dims;
        let dp = self.dp;
        let (x, s, y, v, tau) = (&u[d.x()], &u[d.s()], &u[d.y()], &u[d.v()], u[d.tau()]);
        out.iter_mut().for_each(|o| *o = 0.0);

        let h = &mut out[d.x()];
        for (hi, ci) in h.iter_mut().zip(&dp.c) {
            *hi = ci * tau;
        }
        dp.a.mul_t_vec_add(-1.0, y, h);
        dp.scatter_add(-1.0, v, h);

        out[d.s()].copy_from_slice(v);

        let r = &mut out[d.y()];
        dp.a.mul_vec(x, r);
        for (ri, bi) in r.iter_mut().zip(&dp.b) {
            *ri -= bi * tau;
        }

        let w = &mut out[d.v()];
        dp.gather(x, w);
        for (wi, si) in w.iter_mut().zip(s) {
            *wi -= si;
        }

        out[d.tau()] = -dot(&dp.c, x) + dot(&dp.b, y);
    }

    /// Dense `Q`; for tests and small diagnostics only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dims;
        let dp = self.dp;
        let n = d.len();
        let mut q = DMatrix::zeros(n, n);
        let (xo, so, yo, vo, t) = (d.x().start, d.s().start, d.y().start, d.v().start, d.tau());
        for i in 0..d.m {
            for (j, a) in dp.a.row(i) {
                q[(xo + j, yo + i)] = -a;
                q[(yo + i, xo + j)] = a;
            }
            q[(yo + i, t)] = -dp.b[i];
            q[(t, yo + i)] = dp.b[i];
        }
        for cl in &dp.cliques {
            for (k, &l) in cl.x_indices.iter().enumerate() {
                q[(xo + l, vo + cl.s_offset + k)] = -1.0;
                q[(vo + cl.s_offset + k, xo + l)] = 1.0;
            }
        }
        for k in 0..d.nd {
            q[(so + k, vo + k)] = 1.0;
            q[(vo + k, so + k)] = -1.0;
        }
        for (j, &c) in dp.c.iter().enumerate() {
            q[(xo + j, t)] = c;
            q[(t, xo + j)] = -c;
        }
        q
    }
}

/// Projects `u` onto `K` in place: PSD per clique block of `s`, `τ ≥ 0`,
/// everything else free. Clique blocks are projected in parallel.
pub fn project_cone(cone: &Cone, u: &mut [f64]) -> Result<()> {
    let d = cone.dims;
    let t = d.tau();
    u[t] = u[t].max(0.0);
    let mut rest = &mut u[d.s()];
    let mut parts = Vec::with_capacity(cone.blocks.len());
    for &(_, size) in &cone.blocks {
        let (head, tail) = rest.split_at_mut(size * size);
        parts.push((size, head));
        rest = tail;
    }
    parts
        .into_par_iter()
        .with_min_len(8)
        .try_for_each(|(size, blk)| project_psd_in_place(size, blk))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
