//! Cached factorization for the affine step `(I + Q) û = w`.
//!
//! Writing `u₁ = (x, s)`, `u₂ = (y, v)` the system is
//!
//! ```text
//!   [  I   Âᵀ  ĉ ] [u₁]   [ω₁]        Â = [ -A  0 ]
//!   [ -Â   I   b̂ ] [u₂] = [ω₂],           [ -H  I ],
//!   [ -ĉᵀ -b̂ᵀ  1 ] [u₃]   [ω₃]        ĉ = (c, 0), b̂ = (−b, 0).
//! ```
//!
//! `u₃` is eliminated with a rank-one update of `M = [I Âᵀ; −Â I]`. Solving
//! with `M` eliminates `u₂ = ω₂ + Â u₁`, which leaves `(I + ÂᵀÂ) u₁ =
//! ω₁ − Âᵀω₂` with `I + ÂᵀÂ = [I + D + AᵀA, −Hᵀ; −H, 2I]`. Removing the
//! `s` block gives `(I + D/2 + AᵀA) x = rhs`, a diagonal plus low rank
//! matrix inverted through the `m x m` matrix `I + A P⁻¹ Aᵀ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{dot, HsdeDims};
use crate::decompose::DecomposedProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KktCache {
    dims: HsdeDims,
    /// Diagonal of `P⁻¹`, `P = I + D/2`.
    p_inv: Vec<f64>,
    schur: Cholesky<f64, Dyn>,
    /// `M⁻¹ζ` over `(x, s, y, v)`.
    minv_zeta: Vec<f64>,
    /// `1 + ζᵀM⁻¹ζ`.
    zeta_scale: f64,
    factorization_dims: Vec<usize>,
}

impl KktCache {
    pub fn new(dp: &DecomposedProblem) -> Result<Self> {
        let dims = HsdeDims::of(dp);
        let p_inv: Vec<f64> = dp.d.iter().map(|d| 1.0 / (1.0 + 0.5 * d)).collect();

        let m = dp.m;
        let mut s = DMatrix::<f64>::identity(m, m);
        for (l, col) in dp.a.columns().into_iter().enumerate() {
            let pl = p_inv[l];
            for &(i, ai) in &col {
                for &(j, aj) in &col {
                    s[(i, j)] += ai * aj * pl;
                }
            }
        }
        let schur = Cholesky::new(s).ok_or_else(|| Error::FactorizationFailure {
            dim: m,
            reason: "I + A P⁻¹ Aᵀ is not numerically positive definite; check A for NaN or huge entries".into(),
        })?;

        let mut cache = Self {
            dims,
            p_inv,
            schur,
            minv_zeta: Vec::new(),
            zeta_scale: 1.0,
            factorization_dims: vec![m],
        };
        let mut zeta = vec![0.0; dims.len() - 1];
        zeta[dims.x()].copy_from_slice(&dp.c);
        for (z, b) in zeta[dims.y()].iter_mut().zip(&dp.b) {
            *z = -b;
        }
        let mut mz = vec![0.0; zeta.len()];
        cache.solve_inner_into(dp, &zeta, &mut mz);
        cache.zeta_scale = 1.0 + dot(&zeta, &mz);
        cache.minv_zeta = mz;
        Ok(cache)
    }

    pub fn dims(&self) -> HsdeDims {
        self.dims
    }

    pub fn zeta_scale(&self) -> f64 {
        self.zeta_scale
    }

    pub fn minv_zeta(&self) -> &[f64] {
        &self.minv_zeta
    }

    /// Sizes of every matrix factorized so far.
    pub fn factorization_dims(&self) -> &[usize] {
        &self.factorization_dims
    }

    /// `(P + AᵀA)⁻¹ r`, overwriting `r`.
    pub fn solve_reduced(&self, dp: &DecomposedProblem, r: &mut [f64]) {
        for (ri, pi) in r.iter_mut().zip(&self.p_inv) {
            *ri *= pi;
        }
        let mut q = DVector::zeros(dp.m);
        dp.a.mul_vec(r, q.as_mut_slice());
        self.schur.solve_mut(&mut q);
        let mut back = vec![0.0; r.len()];
        dp.a.mul_t_vec_add(1.0, q.as_slice(), &mut back);
        for ((ri, bi), pi) in r.iter_mut().zip(&back).zip(&self.p_inv) {
            *ri -= pi * bi;
        }
    }

    /// Solves `M (u₁, u₂) = (ω₁, ω₂)`, both given as one `(x, s, y, v)` vector.
    pub fn solve_inner_into(&self, dp: &DecomposedProblem, rhs: &[f64], out: &mut [f64]) {
        let d = self.dims;
        let (rx, rs, ry, rv) = (&rhs[d.x()], &rhs[d.s()], &rhs[d.y()], &rhs[d.v()]);

        // rhs_x = ω_x + Aᵀω_y + Hᵀω_v + ½Hᵀ(ω_s − ω_v)
        let mut sv: Vec<f64> = rs.iter().zip(rv).map(|(s, v)| 0.5 * (s + v)).collect();
        let x = &mut out[d.x()];
        x.copy_from_slice(rx);
        dp.a.mul_t_vec_add(1.0, ry, x);
        dp.scatter_add(1.0, &sv, x);
        self.solve_reduced(dp, x);

        // s = (ω_s − ω_v + Hx)/2, y = ω_y − Ax, v = ω_v − Hx + s
        let (head, tail) = out.split_at_mut(d.nx);
        let x = &*head;
        dp.gather(x, &mut sv);
        let (s, tail) = tail.split_at_mut(d.nd);
        let (y, v) = tail.split_at_mut(d.m);
        for (k, hx) in sv.iter().enumerate() {
            s[k] = 0.5 * (rs[k] - rv[k] + hx);
            v[k] = rv[k] - hx + s[k];
        }
        dp.a.mul_vec(x, y);
        for (yi, ri) in y.iter_mut().zip(ry) {
            *yi = ri - *yi;
        }
    }

    pub fn solve_inner(&self, dp: &DecomposedProblem, w1: &[f64], w2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let rhs: Vec<f64> = w1.iter().chain(w2).copied().collect();
        let mut out = vec![0.0; rhs.len()];
        self.solve_inner_into(dp, &rhs, &mut out);
        let u2 = out.split_off(w1.len());
        (out, u2)
    }

    /// Solves `(I + Q) û = w` into `out`.
    pub fn affine_project_into(&self, dp: &DecomposedProblem, w: &[f64], out: &mut [f64]) {
        let d = self.dims;
        let t = d.tau();
        let w3 = w[t];
        let mut rho = w[..t].to_vec();
        for (r, c) in rho[d.x()].iter_mut().zip(&dp.c) {
            *r -= w3 * c;
        }
        for (r, b) in rho[d.y()].iter_mut().zip(&dp.b) {
            *r += w3 * b;
        }
        let (u12, u3) = out.split_at_mut(t);
        self.solve_inner_into(dp, &rho, u12);
        let zt = (dot(&dp.c, &u12[d.x()]) - dot(&dp.b, &u12[d.y()])) / self.zeta_scale;
        for (u, mz) in u12.iter_mut().zip(&self.minv_zeta) {
            *u -= zt * mz;
        }
        u3[0] = w3 + dot(&dp.c, &u12[d.x()]) - dot(&dp.b, &u12[d.y()]);
    }

    pub fn affine_project(&self, dp: &DecomposedProblem, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        self.affine_project_into(dp, w, &mut out);
        out
    }
}
