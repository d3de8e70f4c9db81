//! Graph machinery for chordal sparsity: chordality testing, chordal
//! extension by fill-reducing symbolic elimination, maximal clique
//! enumeration and the entry-selector maps of each clique.

use crate::error::{Error, Result};
use crate::symmat::VecMatrix;

/// Undirected graph on `0..n`. Self-loops are implicit on every node and
/// are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl SparsityPattern {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![Vec::new(); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        Self {
            n,
            adj: (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect(),
        }
    }

    /// Builds a pattern from unordered pairs. Self-loops and repeated pairs
    /// are ignored.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange {
                    row: i,
                    col: j,
                    dim: n,
                });
            }
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { n, adj })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted neighbours of `v` (excluding `v`).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i == j || self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn is_subgraph_of(&self, other: &SparsityPattern) -> bool {
        self.n == other.n && self.edges().all(|(i, j)| other.has_edge(i, j))
    }
}

/// Elimination order: `order[k]` is the node eliminated at step `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrdering {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl EliminationOrdering {
    pub fn new(order: Vec<usize>) -> Self {
        let mut position = vec![usize::MAX; order.len()];
        for (k, &v) in order.iter().enumerate() {
            position[v] = k;
        }
        Self { order, position }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    /// Neighbours of `v` eliminated after it.
    fn later_neighbors(&self, g: &SparsityPattern, v: usize) -> Vec<usize> {
        let pv = self.position[v];
        g.neighbors(v)
            .iter()
            .copied()
            .filter(|&u| self.position[u] > pv)
            .collect()
    }

    /// The earliest-eliminated later neighbour of `v`.
    fn follower(&self, later: &[usize]) -> Option<usize> {
        later.iter().copied().min_by_key(|&u| self.position[u])
    }
}

/// Maximum cardinality search. The returned ordering is the reverse of the
/// visit order, which is a perfect elimination ordering whenever `g` is
/// chordal.
pub fn maximum_cardinality_search(g: &SparsityPattern) -> EliminationOrdering {
    let n = g.n;
    let mut weight = vec![0usize; n];
    let mut numbered = vec![false; n];
    let mut buckets: Vec<Vec<usize>> = vec![(0..n).rev().collect()];
    let mut top = 0usize;
    let mut visit = Vec::with_capacity(n);
    while visit.len() < n {
        let v = loop {
            match buckets[top].pop() {
                Some(v) if !numbered[v] && weight[v] == top => break v,
                Some(_) => continue,
                None => top -= 1,
            }
        };
        numbered[v] = true;
        visit.push(v);
        for &u in g.neighbors(v) {
            if !numbered[u] {
                weight[u] += 1;
                let w = weight[u];
                if buckets.len() <= w {
                    buckets.resize_with(w + 1, Vec::new);
                }
                buckets[w].push(u);
                top = top.max(w);
            }
        }
    }
    visit.reverse();
    EliminationOrdering::new(visit)
}

pub fn is_perfect_elimination_ordering(g: &SparsityPattern, ord: &EliminationOrdering) -> bool {
    (0..g.n).all(|v| {
        let later = ord.later_neighbors(g, v);
        match ord.follower(&later) {
            None => true,
            Some(f) => later.iter().all(|&u| u == f || g.has_edge(f, u)),
        }
    })
}

/// Returns a verified perfect elimination ordering, or `None` if `g` is not
/// chordal.
pub fn perfect_elimination_ordering(g: &SparsityPattern) -> Option<EliminationOrdering> {
    let ord = maximum_cardinality_search(g);
    is_perfect_elimination_ordering(g, &ord).then_some(ord)
}

pub fn is_chordal(g: &SparsityPattern) -> bool {
    perfect_elimination_ordering(g).is_some()
}

/// Approximate minimum degree ordering of the pattern.
pub fn amd_ordering(g: &SparsityPattern) -> EliminationOrdering {
    let n = g.n;
    if n == 0 {
        return EliminationOrdering::new(Vec::new());
    }
    let mut col_ptr: Vec<i64> = Vec::with_capacity(n + 1);
    let mut row_idx: Vec<i64> = Vec::with_capacity(2 * g.edge_count() + n);
    col_ptr.push(0);
    for v in 0..n {
        // Column v holds its neighbours plus the diagonal, sorted.
        let mut placed_diag = false;
        for &u in g.neighbors(v) {
            if !placed_diag && u > v {
                row_idx.push(v as i64);
                placed_diag = true;
            }
            row_idx.push(u as i64);
        }
        if !placed_diag {
            row_idx.push(v as i64);
        }
        col_ptr.push(row_idx.len() as i64);
    }
    let control = amd::Control::default();
    match amd::order(n as i64, &col_ptr, &row_idx, &control) {
        Ok((perm, _, _)) => EliminationOrdering::new(perm.into_iter().map(|p| p as usize).collect()),
        // The pattern is always valid CSC; fall back to natural order defensively.
        Err(_) => EliminationOrdering::new((0..n).collect()),
    }
}

/// Filled graph of `g` under symbolic elimination in the given order.
pub fn symbolic_elimination(g: &SparsityPattern, ord: &EliminationOrdering) -> SparsityPattern {
    let n = g.n;
    let mut structs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut mark = vec![usize::MAX; n];
    let mut adj = g.adj.clone();
    for k in 0..n {
        let v = ord.order[k];
        let mut s = Vec::new();
        mark[k] = k;
        for &u in g.neighbors(v) {
            let pu = ord.position[u];
            if pu > k && mark[pu] != k {
                mark[pu] = k;
                s.push(pu);
            }
        }
        for c in std::mem::take(&mut children[k]) {
            for &q in &structs[c] {
                if mark[q] != k {
                    mark[q] = k;
                    s.push(q);
                }
            }
            structs[c] = Vec::new();
        }
        for &q in &s {
            let u = ord.order[q];
            adj[v].push(u);
            adj[u].push(v);
        }
        if let Some(&parent) = s.iter().min() {
            children[parent].push(k);
        }
        structs[k] = s;
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    SparsityPattern { n, adj }
}

/// Chordal supergraph of `g`. Chordal inputs are returned unchanged;
/// otherwise fill-in from approximate-minimum-degree symbolic elimination
/// is added.
pub fn chordal_extend(g: &SparsityPattern) -> SparsityPattern {
    if is_chordal(g) {
        return g.clone();
    }
    symbolic_elimination(g, &amd_ordering(g))
}

/// Maximal cliques of a chordal graph together with their entry selectors
/// in an ambient `n x n` column-stacked vectorization.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueDecomposition {
    dim: usize,
    cliques: Vec<Vec<usize>>,
    extended_pattern: SparsityPattern,
    selector_maps: Vec<Vec<usize>>,
}

impl CliqueDecomposition {
    /// Assembles a decomposition from known cliques. Cliques are sorted
    /// internally and ordered by their smallest member.
    pub fn from_cliques(extended_pattern: SparsityPattern, mut cliques: Vec<Vec<usize>>) -> Self {
        let dim = extended_pattern.node_count();
        for c in &mut cliques {
            c.sort_unstable();
            c.dedup();
        }
        cliques.sort();
        let selector_maps = cliques.iter().map(|c| selector_indices(dim, c)).collect();
        Self {
            dim,
            cliques,
            extended_pattern,
            selector_maps,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn extended_pattern(&self) -> &SparsityPattern {
        &self.extended_pattern
    }

    pub fn selector_map(&self, k: usize) -> &[usize] {
        &self.selector_maps[k]
    }

    /// `Σ_k |C_k|²`.
    pub fn decomposed_dim(&self) -> usize {
        self.cliques.iter().map(|c| c.len() * c.len()).sum()
    }

    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// `H_k x`: the column-stacked clique submatrix `E_k X E_kᵀ`.
    pub fn selector_apply(&self, k: usize, x: &VecMatrix) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let data = x.as_slice();
        Ok(self.selector_maps[k].iter().map(|&l| data[l]).collect())
    }

    /// `H_kᵀ xk`: scatters a clique block into an `n²` vector.
    pub fn selector_adjoint(&self, k: usize, xk: &[f64]) -> Result<Vec<f64>> {
        let map = &self.selector_maps[k];
        if xk.len() != map.len() {
            return Err(Error::DimensionMismatch {
                expected: map.len(),
                found: xk.len(),
            });
        }
        let mut out = vec![0.0; self.dim * self.dim];
        for (&l, &v) in map.iter().zip(xk) {
            out[l] = v;
        }
        Ok(out)
    }

    /// Diagonal of `Σ_k H_kᵀ H_k`: how many cliques cover each vec index.
    pub fn cover_counts(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim * self.dim];
        for map in &self.selector_maps {
            for &l in map {
                d[l] += 1.0;
            }
        }
        d
    }
}

/// Flat vec-indices selected by `E_C ⊗ E_C` in row order.
pub fn selector_indices(n: usize, clique: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(clique.len() * clique.len());
    for &col in clique {
        for &row in clique {
            out.push(col * n + row);
        }
    }
    out
}

/// Exact maximal cliques of a chordal graph, read off a perfect elimination
/// ordering: each node's closed later-neighbourhood is a clique, and it is
/// non-maximal exactly when some node whose follower is this node has a
/// later-neighbourhood one larger.
pub fn maximal_cliques(g: &SparsityPattern) -> Result<CliqueDecomposition> {
    let ord = perfect_elimination_ordering(g).ok_or(Error::NotChordal)?;
    let n = g.n;
    let later: Vec<Vec<usize>> = (0..n).map(|v| ord.later_neighbors(g, v)).collect();
    let mut maximal = vec![true; n];
    for u in 0..n {
        if let Some(f) = ord.follower(&later[u]) {
            if later[u].len() == later[f].len() + 1 {
                maximal[f] = false;
            }
        }
    }
    let cliques = (0..n)
        .filter(|&v| maximal[v])
        .map(|v| {
            let mut c = later[v].clone();
            c.push(v);
            c
        })
        .collect();
    Ok(CliqueDecomposition::from_cliques(g.clone(), cliques))
}
