//! ADMM driver: iteration, termination, and recovery of solutions or
//! infeasibility certificates.

use std::time::Instant;

use super::{dot, norm, project_cone, Cone, HsdeDims, KktCache};
use crate::decompose::{decompose_with, DecomposeMode, DecomposedProblem};
use crate::error::{Error, Result};
use crate::report::{MatrixEntry, Residuals, Solution, SolverReport, Status, Timing};
use crate::sdpa::SdpProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Relative tolerance on primal, dual and gap residuals.
    pub tol: f64,
    pub max_iters: usize,
    /// Over-relaxation; 1.0 is plain ADMM.
    pub alpha: f64,
    pub infeas_tau_tol: f64,
    pub infeas_kappa_tol: f64,
    /// Residuals are evaluated every `check_interval` iterations.
    pub check_interval: usize,
    /// Split the PSD cones over the cliques of a chordal extension.
    pub decompose: bool,
    /// Normalize the rows of `A` (and `b`) to unit length. Off by default.
    pub equilibrate: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iters: 2000,
            alpha: 1.0,
            infeas_tau_tol: 1e-9,
            infeas_kappa_tol: 1e-6,
            check_interval: 20,
            decompose: true,
            equilibrate: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidSettings(s.into()));
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(1.0..2.0).contains(&self.alpha) {
            return bad("alpha must lie in [1, 2)");
        }
        if self.check_interval == 0 {
            return bad("check_interval must be at least 1");
        }
        if !(self.infeas_tau_tol >= 0.0 && self.infeas_kappa_tol >= 0.0) {
            return bad("infeasibility thresholds must be nonnegative");
        }
        Ok(())
    }
}

/// One line of the convergence trace. Residuals are NaN when `τ` is too
/// small to normalize by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub tau: f64,
    pub kappa: f64,
}

impl std::fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:6} {:10.3e} {:10.3e} {:10.3e} {:10.3e} {:10.3e}",
            self.iter, self.primal, self.dual, self.gap, self.tau, self.kappa
        )
    }
}

/// Watches the fixed-point residual `‖Δu‖ + ‖Δw‖` and warns when its mean
/// over a window exceeds the previous window's.
#[derive(Debug, Clone, Default)]
struct MeritTracker {
    sum: f64,
    count: usize,
    previous: Option<f64>,
    warnings: usize,
}

impl MeritTracker {
    const WINDOW: usize = 50;

    fn push(&mut self, iter: usize, value: f64) {
        self.sum += value;
        self.count += 1;
        if self.count < Self::WINDOW {
            return;
        }
        let mean = self.sum / self.count as f64;
        if let Some(prev) = self.previous {
            if mean > prev * (1.0 + 1e-9) {
                self.warnings += 1;
                log::warn!("fixed-point residual rose over the window ending at iteration {iter}: {prev:.3e} -> {mean:.3e}");
            }
        }
        self.previous = Some(mean);
        self.sum = 0.0;
        self.count = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Optimal,
    Infeasible { primal: bool, dual: bool },
}

pub struct Solver {
    dp: DecomposedProblem,
    cone: Cone,
    cache: KktCache,
    settings: SolverSettings,
    dims: HsdeDims,
    /// Per-row factors applied to `A` and `b` by equilibration.
    row_scale: Vec<f64>,
    b_norm: f64,
    c_norm: f64,
    u: Vec<f64>,
    w: Vec<f64>,
    buf: Vec<f64>,
    uhat: Vec<f64>,
    iter: usize,
    merit: MeritTracker,
    last_residuals: Option<Residuals>,
    best: Option<(Residuals, Vec<f64>)>,
    outcome: Option<Outcome>,
    setup_time: f64,
    iter_time: f64,
}

impl Solver {
    pub fn new(p: &SdpProblem, settings: SolverSettings) -> Result<Self> {
        settings.validate()?;
        let start = Instant::now();
        let mode = if settings.decompose {
            DecomposeMode::Chordal
        } else {
            DecomposeMode::None
        };
        let dp = decompose_with(p, mode)?;
        let mut solver = Self::from_decomposed(dp, settings)?;
        solver.setup_time = start.elapsed().as_secs_f64();
        Ok(solver)
    }

    pub fn from_decomposed(mut dp: DecomposedProblem, settings: SolverSettings) -> Result<Self> {
        settings.validate()?;
        let start = Instant::now();
        let b_norm = norm(&dp.b);
        let c_norm = norm(&dp.c);
        let row_scale: Vec<f64> = if settings.equilibrate {
            (0..dp.m)
                .map(|i| match dp.a.row_norm(i) {
                    r if r > 0.0 => 1.0 / r,
                    _ => 1.0,
                })
                .collect()
        } else {
            vec![1.0; dp.m]
        };
        if settings.equilibrate {
            dp.a.scale_rows(&row_scale);
            for (b, f) in dp.b.iter_mut().zip(&row_scale) {
                *b *= f;
            }
        }
        let cache = KktCache::new(&dp)?;
        let cone = Cone::of(&dp);
        let dims = HsdeDims::of(&dp);
        let n = dims.len();
        let mut u = vec![0.0; n];
        let mut w = vec![0.0; n];
        u[dims.tau()] = 1.0;
        w[dims.tau()] = 1.0;
        Ok(Self {
            dp,
            cone,
            cache,
            settings,
            dims,
            row_scale,
            b_norm,
            c_norm,
            u,
            w,
            buf: vec![0.0; n],
            uhat: vec![0.0; n],
            iter: 0,
            merit: MeritTracker::default(),
            last_residuals: None,
            best: None,
            outcome: None,
            setup_time: start.elapsed().as_secs_f64(),
            iter_time: 0.0,
        })
    }

    pub fn problem(&self) -> &DecomposedProblem {
        &self.dp
    }

    pub fn cache(&self) -> &KktCache {
        &self.cache
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn dims(&self) -> HsdeDims {
        self.dims
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    /// Current `(u, w)`.
    pub fn state(&self) -> (&[f64], &[f64]) {
        (&self.u, &self.w)
    }

    pub fn set_state(&mut self, u: Vec<f64>, w: Vec<f64>) -> Result<()> {
        let n = self.dims.len();
        for len in [u.len(), w.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        self.u = u;
        self.w = w;
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.u[self.dims.tau()]
    }

    pub fn kappa(&self) -> f64 {
        self.w[self.dims.tau()]
    }

    /// Number of windows over which the fixed-point residual increased.
    pub fn merit_warnings(&self) -> usize {
        self.merit.warnings
    }

    /// One ADMM sweep; returns the fixed-point residual `‖Δu‖ + ‖Δw‖`.
    pub fn step(&mut self) -> Result<f64> {
        let alpha = self.settings.alpha;
        for ((b, u), w) in self.buf.iter_mut().zip(&self.u).zip(&self.w) {
            *b = u + w;
        }
        self.cache.affine_project_into(&self.dp, &self.buf, &mut self.uhat);
        if alpha != 1.0 {
            for (h, u) in self.uhat.iter_mut().zip(&self.u) {
                *h = alpha * *h + (1.0 - alpha) * u;
            }
        }
        // uhat <- p = ũ − w; the new w is Π_K(p) − p, which keeps its free
        // blocks exactly zero and κ exactly nonnegative.
        for ((b, h), w) in self.buf.iter_mut().zip(self.uhat.iter_mut()).zip(&self.w) {
            *h -= w;
            *b = *h;
        }
        project_cone(&self.cone, &mut self.buf)?;
        let mut du = 0.0;
        let mut dw = 0.0;
        for (((w, p), b), u) in self.w.iter_mut().zip(&self.uhat).zip(&self.buf).zip(&self.u) {
            let next = b - p;
            dw += (next - *w) * (next - *w);
            *w = next;
            du += (b - u) * (b - u);
        }
        std::mem::swap(&mut self.u, &mut self.buf);
        self.iter += 1;
        let merit = du.sqrt() + dw.sqrt();
        self.merit.push(self.iter, merit);
        Ok(merit)
    }

    /// Residuals of the normalized iterate `u / τ`.
    pub fn residuals(&self) -> Result<Residuals> {
        let tau = self.tau();
        if tau <= self.settings.infeas_tau_tol {
            return Err(Error::TauZero { tau });
        }
        Ok(self.residuals_of(&self.u))
    }

    fn residuals_of(&self, u: &[f64]) -> Residuals {
        let d = self.dims;
        let dp = &self.dp;
        let tau = u[d.tau()];
        let (x, s, y, v) = (&u[d.x()], &u[d.s()], &u[d.y()], &u[d.v()]);

        let mut ax = vec![0.0; d.m];
        dp.a.mul_vec(x, &mut ax);
        let pres_a = ax
            .iter()
            .zip(&dp.b)
            .zip(&self.row_scale)
            .map(|((ax, b), f)| ((ax - b * tau) / (f * tau)).powi(2))
            .sum::<f64>()
            .sqrt();
        let mut hx = vec![0.0; d.nd];
        dp.gather(x, &mut hx);
        let cons = hx.iter().zip(s).map(|(h, s)| (h - s).powi(2)).sum::<f64>().sqrt() / tau;
        let s_norm = norm(s) / tau;
        let primal = (pres_a / (1.0 + self.b_norm)).max(cons / (1.0 + s_norm));

        let mut g: Vec<f64> = dp.c.iter().map(|c| -c * tau).collect();
        dp.a.mul_t_vec_add(1.0, y, &mut g);
        dp.scatter_add(1.0, v, &mut g);
        let dual = norm(&g) / tau / (1.0 + self.c_norm);

        let cx = dot(&dp.c, x) / tau;
        let by = dot(&dp.b, y) / tau;
        let gap = (cx - by).abs() / (1.0 + cx.abs() + by.abs());
        Residuals { primal, dual, gap }
    }

    /// `(y, ‖Aᵀy + Hᵀz‖ / bᵀy)` when `bᵀy > 0`; `z` is the PSD dual block.
    fn primal_certificate(&self) -> Option<(Vec<f64>, f64)> {
        let d = self.dims;
        let y = &self.u[d.y()];
        let by = dot(&self.dp.b, y);
        if !(by > 0.0) {
            return None;
        }
        let mut g = vec![0.0; d.nx];
        self.dp.a.mul_t_vec_add(1.0, y, &mut g);
        self.dp.scatter_add(1.0, &self.w[d.s()], &mut g);
        let cert = y.iter().zip(&self.row_scale).map(|(y, f)| y * f / by).collect();
        Some((cert, norm(&g) / by))
    }

    /// `(x, max(‖Ax‖, ‖Hx − s‖) / −cᵀx)` when `cᵀx < 0`.
    fn dual_certificate(&self) -> Option<(Vec<f64>, f64)> {
        let d = self.dims;
        let x = &self.u[d.x()];
        let cx = dot(&self.dp.c, x);
        if !(cx < 0.0) {
            return None;
        }
        let mut ax = vec![0.0; d.m];
        self.dp.a.mul_vec(x, &mut ax);
        let ax_norm = ax.iter().zip(&self.row_scale).map(|(a, f)| (a / f).powi(2)).sum::<f64>().sqrt();
        let mut hx = vec![0.0; d.nd];
        self.dp.gather(x, &mut hx);
        let cons = hx.iter().zip(&self.u[d.s()]).map(|(h, s)| (h - s).powi(2)).sum::<f64>().sqrt();
        let cert = x.iter().map(|x| x / -cx).collect();
        Some((cert, ax_norm.max(cons) / -cx))
    }

    /// Verified certificates `(primal, dual)` at the current iterate.
    pub fn certificates(&self) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
        let tol = self.settings.tol;
        let ok = |c: Option<(Vec<f64>, f64)>| c.filter(|(_, q)| *q <= tol).map(|(v, _)| v);
        (ok(self.primal_certificate()), ok(self.dual_certificate()))
    }

    /// True once a termination criterion has been met.
    pub fn finished(&self) -> bool {
        self.outcome.is_some()
    }

    /// Evaluates termination at the current iterate. [`Solver::run`] calls
    /// this every `check_interval` iterations.
    pub fn check(&mut self) -> TraceRecord {
        let (tau, kappa) = (self.tau(), self.kappa());
        let mut rec = TraceRecord {
            iter: self.iter,
            primal: f64::NAN,
            dual: f64::NAN,
            gap: f64::NAN,
            tau,
            kappa,
        };
        if let Ok(r) = self.residuals() {
            rec.primal = r.primal;
            rec.dual = r.dual;
            rec.gap = r.gap;
            self.last_residuals = Some(r);
            if self.best.as_ref().is_none_or(|(b, _)| r.max() < b.max()) {
                self.best = Some((r, self.u.clone()));
            }
            if r.max() <= self.settings.tol {
                self.outcome = Some(Outcome::Optimal);
                return rec;
            }
        }
        if tau <= self.settings.infeas_tau_tol && kappa > self.settings.infeas_kappa_tol {
            let (p, d) = self.certificates();
            if p.is_some() || d.is_some() {
                self.outcome = Some(Outcome::Infeasible {
                    primal: p.is_some(),
                    dual: d.is_some(),
                });
            }
        }
        rec
    }

    /// Iterates until termination or `max_iters`, calling `observer` at
    /// every residual check.
    pub fn run(&mut self, mut observer: impl FnMut(&TraceRecord)) -> Result<SolverReport> {
        let start = Instant::now();
        while self.outcome.is_none() && self.iter < self.settings.max_iters {
            self.step()?;
            if self.iter % self.settings.check_interval == 0 || self.iter == self.settings.max_iters {
                let rec = self.check();
                log::debug!("{rec}");
                observer(&rec);
            }
        }
        self.iter_time += start.elapsed().as_secs_f64();
        Ok(self.report())
    }

    /// Builds the report for the current state.
    pub fn report(&self) -> SolverReport {
        let sign = self.dp.objective_sign;
        let d = self.dims;
        let mut report = SolverReport {
            status: Status::MaxItersReached,
            objective_primal: None,
            objective_dual: None,
            iterations: self.iter,
            residuals: None,
            timing: Timing {
                setup: self.setup_time,
                iteration: self.iter_time,
                total: self.setup_time + self.iter_time,
            },
            tau: self.tau(),
            kappa: self.kappa(),
            problem: self.dp.stats(),
            factorization_dims: self.cache.factorization_dims().to_vec(),
            solution: None,
            primal_certificate: None,
            dual_certificate: None,
        };
        let with_solution = |report: &mut SolverReport, u: &[f64], r: Residuals| {
            let tau = u[d.tau()];
            report.objective_primal = Some(sign * dot(&self.dp.c, &u[d.x()]) / tau);
            report.objective_dual = Some(sign * dot(&self.dp.b, &u[d.y()]) / tau);
            report.residuals = Some(r);
            report.solution = Some(self.solution(u));
        };
        match self.outcome {
            Some(Outcome::Optimal) => {
                report.status = Status::Optimal;
                with_solution(&mut report, &self.u, self.residuals_of(&self.u));
            }
            Some(Outcome::Infeasible { primal, dual }) => {
                report.status = if primal {
                    Status::PrimalInfeasible
                } else {
                    Status::DualInfeasible
                };
                let (p, dc) = self.certificates();
                report.primal_certificate = p.filter(|_| primal);
                report.dual_certificate = dc.filter(|_| dual).map(|x| self.pattern_entries(&x, false));
                report.residuals = self.last_residuals;
            }
            None => {
                if let Some((r, u)) = &self.best {
                    with_solution(&mut report, u, *r);
                }
            }
        }
        report
    }

    fn solution(&self, u: &[f64]) -> Solution {
        let d = self.dims;
        let tau = u[d.tau()];
        let x: Vec<f64> = u[d.x()].iter().map(|v| v / tau).collect();
        let y = u[d.y()].iter().zip(&self.row_scale).map(|(y, f)| y * f / tau).collect();
        let mut z = vec![0.0; d.nx];
        self.dp.scatter_add(1.0 / tau, &u[d.v()], &mut z);
        Solution {
            x: self.pattern_entries(&x, false),
            y,
            z: self.pattern_entries(&z, true),
        }
    }

    /// Upper-triangle entries of a stacked `vec` on the aggregate pattern,
    /// or on the chordal extension when `extended`.
    fn pattern_entries(&self, x: &[f64], extended: bool) -> Vec<MatrixEntry> {
        let mut out = Vec::new();
        for (bi, lay) in self.dp.blocks.iter().enumerate() {
            let n = lay.dim;
            let g = if extended {
                self.dp.decompositions[bi].extended_pattern()
            } else {
                &self.dp.aggregate[bi]
            };
            let xb = &x[lay.x_offset..lay.x_offset + n * n];
            let entry = |i: usize, j: usize| MatrixEntry {
                block: lay.source_block,
                row: lay.source_offset + i + 1,
                col: lay.source_offset + j + 1,
                value: 0.5 * (xb[j * n + i] + xb[i * n + j]),
            };
            let mut coords: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).chain(g.edges()).collect();
            coords.sort_by_key(|&(i, j)| (j, i));
            out.extend(coords.into_iter().map(|(i, j)| entry(i, j)));
        }
        out
    }
}

/// Decomposes, sets up and solves `p`.
pub fn solve(p: &SdpProblem, settings: SolverSettings) -> Result<SolverReport> {
    Solver::new(p, settings)?.run(|_| {})
}
