//! Vectorized, clique-decomposed form of an [`SdpProblem`].
//!
//! Each PSD block is vectorized separately and the vectors are stacked, so
//! `x` has length `Σ_b n_b²`. A diagonal block of size `d` becomes `d`
//! independent `1 x 1` blocks. Per block the aggregate pattern is chordal
//! extended and its maximal cliques become the small cones; the consensus
//! constraints `x_k = H_k x` are never materialized and `H` only appears
//! through the selector index lists and the cover counts `D = HᵀH`.

use crate::chordal::{chordal_extend, maximal_cliques, CliqueDecomposition, SparsityPattern};
use crate::error::Result;
use crate::report::ProblemStats;
use crate::sdpa::SdpProblem;
use crate::sparse::CsrMatrix;
use crate::symmat::SymMatrix;

/// How the PSD cones are split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecomposeMode {
    /// Maximal cliques of a chordal extension of the aggregate pattern.
    #[default]
    Chordal,
    /// One clique per block: the undecomposed problem.
    None,
}

/// A dense PSD block of the vectorized problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub dim: usize,
    /// Start of `vec(X_b)` inside `x`.
    pub x_offset: usize,
    /// 1-based SDPA block index.
    pub source_block: usize,
    /// Offset of this block's first row/column within the SDPA block.
    pub source_offset: usize,
}

/// A clique cone, addressed in global coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Clique {
    /// Index into [`DecomposedProblem::blocks`].
    pub block: usize,
    /// Sorted members, local to the block.
    pub members: Vec<usize>,
    /// Positions in `x` selected by `H_k`, in clique column-stacked order.
    pub x_indices: Vec<usize>,
    /// Start of this clique's `|C_k|²` slice in `s`, `z` and `v`.
    pub s_offset: usize,
}

impl Clique {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct DecomposedProblem {
    /// Cone size `Σ |blocks|`.
    pub n: usize,
    pub m: usize,
    /// Length of `x`.
    pub nx: usize,
    /// `Σ_k |C_k|²`.
    pub n_d: usize,
    pub c: Vec<f64>,
    /// Rows are `vec(A_i)ᵀ`.
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub blocks: Vec<BlockLayout>,
    /// Aggregate sparsity pattern per block.
    pub aggregate: Vec<SparsityPattern>,
    /// Clique decomposition per block.
    pub decompositions: Vec<CliqueDecomposition>,
    pub cliques: Vec<Clique>,
    /// Diagonal of `D = HᵀH`.
    pub d: Vec<f64>,
    pub objective_sign: f64,
}

impl DecomposedProblem {
    pub fn stats(&self) -> ProblemStats {
        ProblemStats {
            n: self.n,
            m: self.m,
            cliques: self.cliques.len(),
            max_clique: self.cliques.iter().map(Clique::size).max().unwrap_or(0),
            min_clique: self.cliques.iter().map(Clique::size).min().unwrap_or(0),
            decomposed_dim: self.n_d,
        }
    }

    /// `s = H x`.
    pub fn gather(&self, x: &[f64], s: &mut [f64]) {
        for cl in &self.cliques {
            let out = &mut s[cl.s_offset..cl.s_offset + cl.x_indices.len()];
            for (o, &l) in out.iter_mut().zip(&cl.x_indices) {
                *o = x[l];
            }
        }
    }

    /// `x += alpha * Hᵀ s`.
    pub fn scatter_add(&self, alpha: f64, s: &[f64], x: &mut [f64]) {
        for cl in &self.cliques {
            let src = &s[cl.s_offset..cl.s_offset + cl.x_indices.len()];
            for (&v, &l) in src.iter().zip(&cl.x_indices) {
                x[l] += alpha * v;
            }
        }
    }
}

/// One PSD block of the problem data, before layout.
struct PsdBlock<'a> {
    dim: usize,
    source_block: usize,
    source_offset: usize,
    c: Option<&'a SymMatrix>,
    a: Vec<Option<&'a SymMatrix>>,
    /// For split diagonal blocks: the diagonal index to read.
    diag: Option<usize>,
}

impl PsdBlock<'_> {
    /// Upper-triangle coordinates of a data matrix restricted to this block.
    fn coords<'m>(&self, mat: &'m SymMatrix) -> Box<dyn Iterator<Item = (usize, usize, f64)> + 'm> {
        match self.diag {
            None => Box::new(mat.entries().iter().copied()),
            Some(i) => {
                let v = mat.entries().binary_search_by(|e| (e.0, e.1).cmp(&(i, i)));
                Box::new(v.ok().map(|k| (0, 0, mat.entries()[k].2)).into_iter())
            }
        }
    }

    fn matrices(&self) -> impl Iterator<Item = &SymMatrix> {
        self.c.into_iter().chain(self.a.iter().flatten().copied())
    }
}

fn psd_blocks(p: &SdpProblem) -> Vec<PsdBlock<'_>> {
    let mut out = Vec::new();
    for (k, &size) in p.blocks.iter().enumerate() {
        let dim = size.unsigned_abs() as usize;
        let c = Some(&p.c[k]);
        let a: Vec<_> = p.a.iter().map(|ai| Some(&ai[k])).collect();
        if size > 0 {
            out.push(PsdBlock {
                dim,
                source_block: k + 1,
                source_offset: 0,
                c,
                a,
                diag: None,
            });
        } else {
            for i in 0..dim {
                out.push(PsdBlock {
                    dim: 1,
                    source_block: k + 1,
                    source_offset: i,
                    c,
                    a: a.clone(),
                    diag: Some(i),
                });
            }
        }
    }
    out
}

fn block_pattern(block: &PsdBlock<'_>) -> SparsityPattern {
    let edges = block
        .matrices()
        .flat_map(|m| block.coords(m))
        .filter(|&(i, j, _)| i != j)
        .map(|(i, j, _)| (i, j));
    SparsityPattern::from_edges(block.dim, edges).expect("entries validated against block size")
}

/// Union of the nonzero patterns of `C` and every `A_i`, with blocks placed
/// along the diagonal of the full `n x n` index space.
pub fn aggregate_pattern(p: &SdpProblem) -> SparsityPattern {
    let mut edges = Vec::new();
    let mut offset = 0;
    for block in psd_blocks(p) {
        let g = block_pattern(&block);
        edges.extend(g.edges().map(|(i, j)| (i + offset, j + offset)));
        offset += block.dim;
    }
    SparsityPattern::from_edges(offset, edges).expect("offsets stay within n")
}

pub fn decompose(p: &SdpProblem) -> Result<DecomposedProblem> {
    decompose_with(p, DecomposeMode::Chordal)
}

pub fn decompose_with(p: &SdpProblem, mode: DecomposeMode) -> Result<DecomposedProblem> {
    let blocks = psd_blocks(p);
    let mut layout = Vec::with_capacity(blocks.len());
    let mut aggregate = Vec::with_capacity(blocks.len());
    let mut decompositions = Vec::with_capacity(blocks.len());
    let mut cliques = Vec::new();
    let mut x_offset = 0;
    let mut s_offset = 0;
    for (bi, block) in blocks.iter().enumerate() {
        let g = block_pattern(block);
        let dec = match mode {
            DecomposeMode::Chordal => maximal_cliques(&chordal_extend(&g))?,
            DecomposeMode::None => CliqueDecomposition::from_cliques(
                SparsityPattern::complete(block.dim),
                vec![(0..block.dim).collect()],
            ),
        };
        for (k, members) in dec.cliques().iter().enumerate() {
            let x_indices: Vec<usize> = dec.selector_map(k).iter().map(|&l| l + x_offset).collect();
            let len = x_indices.len();
            cliques.push(Clique {
                block: bi,
                members: members.clone(),
                x_indices,
                s_offset,
            });
            s_offset += len;
        }
        layout.push(BlockLayout {
            dim: block.dim,
            x_offset,
            source_block: block.source_block,
            source_offset: block.source_offset,
        });
        x_offset += block.dim * block.dim;
        aggregate.push(g);
        decompositions.push(dec);
    }
    let nx = x_offset;

    let mut c = vec![0.0; nx];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.m];
    for (block, lay) in blocks.iter().zip(&layout) {
        let n = lay.dim;
        let off = lay.x_offset;
        if let Some(cm) = block.c {
            for (i, j, v) in block.coords(cm) {
                c[off + j * n + i] = v;
                c[off + i * n + j] = v;
            }
        }
        for (row, am) in rows.iter_mut().zip(&block.a) {
            if let Some(am) = am {
                for (i, j, v) in block.coords(am) {
                    row.push((off + j * n + i, v));
                    if i != j {
                        row.push((off + i * n + j, v));
                    }
                }
            }
        }
    }
    let a = CsrMatrix::from_rows(nx, rows);

    let mut d = vec![0.0; nx];
    for cl in &cliques {
        for &l in &cl.x_indices {
            d[l] += 1.0;
        }
    }

    Ok(DecomposedProblem {
        n: p.n(),
        m: p.m,
        nx,
        n_d: s_offset,
        c,
        a,
        b: p.b.clone(),
        blocks: layout,
        aggregate,
        decompositions,
        cliques,
        d,
        objective_sign: p.objective_sign,
    })
}
