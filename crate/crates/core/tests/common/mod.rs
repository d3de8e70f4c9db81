//! Test support: random problem generators and a dense, independently
//! assembled copy of the embedding used as an oracle.
#![allow(dead_code)]

use chordal_sdp::decompose::DecomposedProblem;
use chordal_sdp::symmat::SymMatrix;
use chordal_sdp::SdpProblem;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

/// Random symmetric matrix on the given off-diagonal edges plus the diagonal.
pub fn random_on_pattern(n: usize, edges: &[(usize, usize)], rng: &mut impl Rng) -> SymMatrix {
    let mut e: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, rng.gen_range(-1.0..1.0))).collect();
    e.extend(edges.iter().map(|&(i, j)| (i, j, rng.gen_range(-1.0..1.0))));
    SymMatrix::from_entries(n, e).unwrap()
}

pub fn random_edges(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.gen_bool(p) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Single-block problem with random data on a random pattern. When
/// `feasible`, `X = I` is primal and `Z = I` dual strictly feasible.
pub fn random_problem(n: usize, m: usize, density: f64, feasible: bool, rng: &mut impl Rng) -> SdpProblem {
    let edges = random_edges(n, density, rng);
    let a: Vec<SymMatrix> = (0..m).map(|_| random_on_pattern(n, &edges, rng)).collect();
    let (b, c) = if feasible {
        let b = a.iter().map(|ai| (0..n).map(|i| ai.get(i, i)).sum()).collect();
        let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut c = DMatrix::<f64>::identity(n, n);
        for (ai, yi) in a.iter().zip(&y0) {
            c += ai.to_dense() * *yi;
        }
        (b, dense_to_sym(&c))
    } else {
        let b = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (b, random_on_pattern(n, &edges, rng))
    };
    SdpProblem::new(vec![n as i64], b, vec![c], a.into_iter().map(|m| vec![m]).collect()).unwrap()
}

pub fn dense_to_sym(m: &DMatrix<f64>) -> SymMatrix {
    let n = m.nrows();
    let mut e = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            if m[(i, j)] != 0.0 {
                e.push((i, j, m[(i, j)]));
            }
        }
    }
    SymMatrix::from_entries(n, e).unwrap()
}

/// The embedding assembled densely from the raw problem blocks and the
/// clique lists, following the block matrix literally.
pub struct DenseHsde {
    pub nx: usize,
    pub nd: usize,
    pub m: usize,
    pub a: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub b: DVector<f64>,
    pub q: DMatrix<f64>,
    /// `(offset in s, size)` per clique.
    pub cliques: Vec<(usize, usize)>,
}

fn dense_vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

impl DenseHsde {
    /// Only positive (dense) blocks are supported.
    pub fn new(p: &SdpProblem, dp: &DecomposedProblem) -> Self {
        assert!(p.blocks.iter().all(|&b| b > 0));
        let dims: Vec<usize> = p.blocks.iter().map(|&b| b as usize).collect();
        let offsets: Vec<usize> = dims
            .iter()
            .scan(0, |acc, d| {
                let o = *acc;
                *acc += d * d;
                Some(o)
            })
            .collect();
        let nx: usize = dims.iter().map(|d| d * d).sum();
        let m = p.m;

        let mut c = DVector::zeros(nx);
        for (k, ck) in p.c.iter().enumerate() {
            c.rows_mut(offsets[k], dims[k] * dims[k]).copy_from(&dense_vec(&ck.to_dense()));
        }
        let mut a = DMatrix::zeros(m, nx);
        for (i, ai) in p.a.iter().enumerate() {
            for (k, aik) in ai.iter().enumerate() {
                let v = dense_vec(&aik.to_dense());
                for (l, val) in v.iter().enumerate() {
                    a[(i, offsets[k] + l)] = *val;
                }
            }
        }

        let mut hs = Vec::new();
        let mut cliques = Vec::new();
        let mut nd = 0;
        for cl in &dp.cliques {
            let nb = dims[cl.block];
            let mut e = DMatrix::zeros(cl.members.len(), nb);
            for (r, &v) in cl.members.iter().enumerate() {
                e[(r, v)] = 1.0;
            }
            let hk = e.kronecker(&e);
            let mut full = DMatrix::zeros(hk.nrows(), nx);
            full.view_mut((0, offsets[cl.block]), (hk.nrows(), hk.ncols())).copy_from(&hk);
            cliques.push((nd, cl.members.len()));
            nd += hk.nrows();
            hs.push(full);
        }
        let mut h = DMatrix::zeros(nd, nx);
        let mut row = 0;
        for hk in &hs {
            h.view_mut((row, 0), (hk.nrows(), nx)).copy_from(hk);
            row += hk.nrows();
        }

        let b = DVector::from_column_slice(&p.b);
        let total = nx + 2 * nd + m + 1;
        let (xo, so, yo, vo, t) = (0, nx, nx + nd, nx + nd + m, total - 1);
        let mut q = DMatrix::zeros(total, total);
        q.view_mut((xo, yo), (nx, m)).copy_from(&(-a.transpose()));
        q.view_mut((xo, vo), (nx, nd)).copy_from(&(-h.transpose()));
        q.view_mut((xo, t), (nx, 1)).copy_from(&c);
        q.view_mut((so, vo), (nd, nd)).copy_from(&DMatrix::identity(nd, nd));
        q.view_mut((yo, xo), (m, nx)).copy_from(&a);
        q.view_mut((yo, t), (m, 1)).copy_from(&(-&b));
        q.view_mut((vo, xo), (nd, nx)).copy_from(&h);
        q.view_mut((vo, so), (nd, nd)).copy_from(&(-DMatrix::identity(nd, nd)));
        q.view_mut((t, xo), (1, nx)).copy_from(&(-c.transpose()));
        q.view_mut((t, yo), (1, m)).copy_from(&b.transpose());

        Self {
            nx,
            nd,
            m,
            a,
            h,
            c,
            b,
            q,
            cliques,
        }
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    /// `Â = [−A 0; −H I]`.
    pub fn a_hat(&self) -> DMatrix<f64> {
        let (nx, nd, m) = (self.nx, self.nd, self.m);
        let mut ah = DMatrix::zeros(m + nd, nx + nd);
        ah.view_mut((0, 0), (m, nx)).copy_from(&(-&self.a));
        ah.view_mut((m, 0), (nd, nx)).copy_from(&(-&self.h));
        ah.view_mut((m, nx), (nd, nd)).copy_from(&DMatrix::identity(nd, nd));
        ah
    }

    /// `M = [I Âᵀ; −Â I]`.
    pub fn m_matrix(&self) -> DMatrix<f64> {
        let ah = self.a_hat();
        let (r, c) = ah.shape();
        let mut mm = DMatrix::identity(r + c, r + c);
        mm.view_mut((0, c), (c, r)).copy_from(&ah.transpose());
        mm.view_mut((c, 0), (r, c)).copy_from(&(-ah));
        mm
    }

    pub fn solve_i_plus_q(&self, w: &[f64]) -> DVector<f64> {
        let n = self.len();
        let lhs = DMatrix::identity(n, n) + &self.q;
        lhs.lu().solve(&DVector::from_column_slice(w)).unwrap()
    }

    pub fn project(&self, u: &mut DVector<f64>) {
        let n = self.len();
        u[n - 1] = u[n - 1].max(0.0);
        for &(off, size) in &self.cliques {
            let start = self.nx + off;
            let blk = DMatrix::from_column_slice(size, size, &u.as_slice()[start..start + size * size]);
            let sym = (&blk + blk.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let mut lam = eig.eigenvalues.clone();
            lam.iter_mut().for_each(|l| *l = l.max(0.0));
            let p = &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose();
            u.rows_mut(start, size * size).copy_from_slice(p.as_slice());
        }
    }

    /// Plain ADMM (`alpha = 1`) on the dense system from the standard start.
    pub fn admm(&self, iters: usize) -> (DVector<f64>, DVector<f64>) {
        let n = self.len();
        let lhs = (DMatrix::identity(n, n) + &self.q).lu();
        let mut u = DVector::zeros(n);
        let mut w = DVector::zeros(n);
        u[n - 1] = 1.0;
        w[n - 1] = 1.0;
        for _ in 0..iters {
            let uh = lhs.solve(&(&u + &w)).unwrap();
            let mut un = &uh - &w;
            self.project(&mut un);
            w = &w - &uh + &un;
            u = un;
        }
        (u, w)
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// SDPA text for the Lovász theta SDP of a graph in SDPLIB's form:
/// `max ⟨J, X⟩ s.t. tr X = 1, X_ij = 0 on edges`.
pub fn theta_sdpa(n: usize, edges: &[(usize, usize)]) -> String {
    let m = 1 + edges.len();
    let mut s = format!("\"theta\n{m}\n1\n{n}\n");
    s.push_str(&std::iter::once("1.0").chain(edges.iter().map(|_| "0.0")).collect::<Vec<_>>().join(" "));
    s.push('\n');
    for j in 1..=n {
        for i in 1..=j {
            s.push_str(&format!("0 1 {i} {j} 1.0\n"));
        }
    }
    for i in 1..=n {
        s.push_str(&format!("1 1 {i} {i} 1.0\n"));
    }
    for (k, &(i, j)) in edges.iter().enumerate() {
        s.push_str(&format!("{} 1 {} {} 1.0\n", k + 2, i + 1, j + 1));
    }
    s
}

/// SDPA text for the max-cut relaxation `max ⟨L/4, X⟩ s.t. diag(X) = 1`.
pub fn maxcut_sdpa(n: usize, edges: &[(usize, usize)]) -> String {
    let mut deg = vec![0usize; n];
    for &(i, j) in edges {
        deg[i] += 1;
        deg[j] += 1;
    }
    let mut s = format!("{n}\n1\n{n}\n{}\n", vec!["1"; n].join(" "));
    for (i, d) in deg.iter().enumerate() {
        s.push_str(&format!("0 1 {0} {0} {1}\n", i + 1, *d as f64 / 4.0));
    }
    for &(i, j) in edges {
        let (a, b) = (i.min(j), i.max(j));
        s.push_str(&format!("0 1 {} {} -0.25\n", a + 1, b + 1));
    }
    for i in 1..=n {
        s.push_str(&format!("{i} 1 {i} {i} 1.0\n"));
    }
    s
}

pub fn cycle(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

pub fn petersen() -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
    e.extend((0..5).map(|i| (5 + i, 5 + (i + 2) % 5)));
    e.extend((0..5).map(|i| (i, i + 5)));
    e
}

use chordal_sdp::chordal::{maximal_cliques, SparsityPattern};
use chordal_sdp::decompose::decompose;
use chordal_sdp::hsde::KktCache;

/// Random chordal graph: a random graph made chordal by eliminating its
/// vertices in a random order and joining each vertex's later neighbours.
pub fn random_chordal_pattern(n: usize, density: f64, rng: &mut impl Rng) -> SparsityPattern {
    let mut adj = vec![vec![false; n]; n];
    for (i, j) in random_edges(n, density, rng) {
        adj[i][j] = true;
        adj[j][i] = true;
    }
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut done = vec![false; n];
    for &v in &order {
        let later: Vec<usize> = (0..n).filter(|&u| adj[v][u] && !done[u]).collect();
        for &a in &later {
            for &b in &later {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
        done[v] = true;
    }
    let edges = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).filter(|&(i, j)| adj[i][j]);
    SparsityPattern::from_edges(n, edges.collect::<Vec<_>>()).unwrap()
}

fn psd_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let lam = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose()
}

/// Numerical PSD-completion search by alternating projections between the
/// matrices agreeing with `partial` on the pattern and the PSD cone.
/// Returns the final distance between the two sets' iterates.
pub fn completion_distance(g: &SparsityPattern, partial: &DMatrix<f64>, iters: usize) -> f64 {
    let n = g.node_count();
    let fixed = |i: usize, j: usize| g.has_edge(i, j);
    let mut x = partial.clone();
    let mut dist = f64::INFINITY;
    for _ in 0..iters {
        let p = psd_part(&x);
        for j in 0..n {
            for i in 0..n {
                x[(i, j)] = if fixed(i, j) { partial[(i, j)] } else { p[(i, j)] };
            }
        }
        dist = (&x - &p).norm();
        if dist < 1e-10 {
            break;
        }
    }
    dist
}

/// One Grone trial on a random chordal pattern. Returns
/// `(clique test says completable, completion search says completable)`.
pub fn grone_trial(rng: &mut impl Rng) -> (bool, bool) {
    let n = rng.gen_range(2..=8);
    let g = random_chordal_pattern(n, rng.gen_range(0.2..0.7), rng);
    let dec = maximal_cliques(&g).unwrap();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = rng.gen_range(-1.0..1.0);
    }
    for (i, j) in g.edges() {
        let v = rng.gen_range(-1.0..1.0);
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    let clique_min = |m: &DMatrix<f64>| {
        dec.cliques()
            .iter()
            .map(|c| {
                let sub = DMatrix::from_fn(c.len(), c.len(), |a, b| m[(c[a], c[b])]);
                SymmetricEigen::new(sub).eigenvalues.min()
            })
            .fold(f64::INFINITY, f64::min)
    };
    // shift the diagonal so the smallest clique eigenvalue sits at ±margin
    let margin = rng.gen_range(0.02..0.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let shift = margin - clique_min(&m);
    for i in 0..n {
        m[(i, i)] += shift;
    }
    let by_cliques = clique_min(&m) >= 0.0;
    let by_search = completion_distance(&g, &m, 20_000) < 1e-4;
    (by_cliques, by_search)
}

/// One Agler trial: a sum of random PSD clique blocks is PSD and supported
/// on the pattern.
pub fn agler_trial(rng: &mut impl Rng) -> bool {
    let n = rng.gen_range(2..=8);
    let g = random_chordal_pattern(n, rng.gen_range(0.2..0.7), rng);
    let dec = maximal_cliques(&g).unwrap();
    let mut z = vec![0.0; n * n];
    for k in 0..dec.len() {
        let s = dec.cliques()[k].len();
        let b = DMatrix::from_fn(s, s, |_, _| rng.gen_range(-1.0..1.0));
        let zk = &b * b.transpose();
        let lifted = dec.selector_adjoint(k, zk.as_slice()).unwrap();
        for (a, v) in z.iter_mut().zip(lifted) {
            *a += v;
        }
    }
    let zm = DMatrix::from_column_slice(n, n, &z);
    let psd = SymmetricEigen::new(zm.clone()).eigenvalues.min() >= -1e-12 * (1.0 + zm.norm());
    let supported = (0..n).all(|j| (0..n).all(|i| g.has_edge(i, j) || zm[(i, j)] == 0.0));
    psd && supported
}

/// One block-elimination trial on a random toy instance with at most
/// three cliques. Returns the relative errors of the affine projection
/// against a dense `(I + Q)` solve and of the inner solve against a dense
/// `M` solve.
pub fn block_elimination_trial(rng: &mut impl Rng) -> (f64, f64) {
    loop {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=4);
        let p = random_problem(n, m, rng.gen_range(0.1..0.8), false, rng);
        let dp = decompose(&p).unwrap();
        if dp.cliques.len() > 3 {
            continue;
        }
        let oracle = DenseHsde::new(&p, &dp);
        let cache = KktCache::new(&dp).unwrap();
        let w: Vec<f64> = (0..oracle.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let affine = rel_err(&cache.affine_project(&dp, &w), oracle.solve_i_plus_q(&w).as_slice());
        let k = dp.nx + dp.n_d;
        let rhs = &w[..w.len() - 1];
        let (u1, u2) = cache.solve_inner(&dp, &rhs[..k], &rhs[k..]);
        let got: Vec<f64> = u1.into_iter().chain(u2).collect();
        let want = oracle.m_matrix().lu().solve(&DVector::from_column_slice(rhs)).unwrap();
        return (affine, rel_err(&got, want.as_slice()));
    }
}
