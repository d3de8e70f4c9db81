//! Reader for the SDPA sparse format (`.dat-s`) used by SDPLIB.
//!
//! SDPA states its problems as
//!
//! ```text
//!   (P)  min  Σ cᵢ xᵢ   s.t.  Σ Fᵢ xᵢ − F₀ ⪰ 0
//!   (D)  max  ⟨F₀, Y⟩   s.t.  ⟨Fᵢ, Y⟩ = cᵢ,  Y ⪰ 0
//! ```
//!
//! The solver works with `min ⟨C, X⟩ s.t. ⟨Aᵢ, X⟩ = bᵢ, X ⪰ 0`, so SDPA's
//! (D) is read as `Aᵢ = Fᵢ`, `b = c` and `C = −F₀`. Reported objectives are
//! multiplied by [`SdpProblem::objective_sign`] (−1 for SDPA input) so they
//! follow the SDPLIB convention of quoting `⟨F₀, Y⟩`.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

/// An SDP in block-diagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    /// Number of affine constraints.
    pub m: usize,
    /// Block sizes; negative values are diagonal blocks of that magnitude.
    pub blocks: Vec<i64>,
    pub b: Vec<f64>,
    /// Objective matrix, one entry per block.
    pub c: Vec<SymMatrix>,
    /// `a[i][k]` is block `k` of constraint matrix `Aᵢ`.
    pub a: Vec<Vec<SymMatrix>>,
    /// Sign applied to internal objective values when reporting.
    pub objective_sign: f64,
}

impl SdpProblem {
    /// Validates and assembles a minimization-form problem.
    pub fn new(blocks: Vec<i64>, b: Vec<f64>, c: Vec<SymMatrix>, a: Vec<Vec<SymMatrix>>) -> Result<Self> {
        let p = Self {
            m: b.len(),
            blocks,
            b,
            c,
            a,
            objective_sign: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let nb = self.blocks.len();
        if self.a.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: self.a.len(),
            });
        }
        for mats in std::iter::once(&self.c).chain(self.a.iter()) {
            if mats.len() != nb {
                return Err(Error::DimensionMismatch {
                    expected: nb,
                    found: mats.len(),
                });
            }
            for (k, mat) in mats.iter().enumerate() {
                let size = self.blocks[k];
                let dim = size.unsigned_abs() as usize;
                if size == 0 || mat.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: mat.dim(),
                    });
                }
                if size < 0 {
                    if let Some(&(i, j, _)) = mat.entries().iter().find(|e| e.0 != e.1) {
                        return Err(Error::IndexOutOfRange { row: i, col: j, dim });
                    }
                }
            }
        }
        Ok(())
    }

    /// Total cone size `Σ |blocks|`.
    pub fn n(&self) -> usize {
        self.blocks.iter().map(|b| b.unsigned_abs() as usize).sum()
    }

    /// Stored entries across `C` and every `Aᵢ`.
    pub fn nnz(&self) -> usize {
        self.c.iter().chain(self.a.iter().flatten()).map(SymMatrix::nnz).sum()
    }
}

pub fn read_sdpa_file(path: impl AsRef<Path>) -> Result<SdpProblem> {
    let text = std::fs::read_to_string(path)?;
    parse_sdpa(&text)
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')')
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(is_separator).filter(|t| !t.is_empty())
}

fn parse_f64(tok: &str) -> Option<f64> {
    tok.parse::<f64>()
        .ok()
        .or_else(|| tok.replace(['D', 'd'], "e").parse::<f64>().ok())
        .filter(|v| v.is_finite())
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Header reader that skips comment lines and tracks 1-based line numbers.
struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('"') || t.starts_with('*') {
                continue;
            }
            return Some((i + 1, t));
        }
        None
    }

    fn leading_count(&mut self, what: &str) -> Result<usize> {
        let (ln, line) = self
            .next_content()
            .ok_or_else(|| parse_error(self.last, format!("missing {what}")))?;
        tokens(line)
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| parse_error(ln, format!("expected {what}")))
    }

    /// Reads `count` numbers, possibly spread over several lines; trailing
    /// non-numeric text on a line is treated as a comment.
    fn numbers(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let (ln, line) = self
                .next_content()
                .ok_or_else(|| parse_error(self.last, format!("missing {what}")))?;
            let before = out.len();
            for tok in tokens(line) {
                if out.len() == count {
                    break;
                }
                match parse_f64(tok) {
                    Some(v) => out.push(v),
                    None => break,
                }
            }
            if out.len() == before {
                return Err(parse_error(ln, format!("expected {what}")));
            }
        }
        Ok(out)
    }
}

pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let m = lines.leading_count("number of constraints")?;
    let nblocks = lines.leading_count("number of blocks")?;
    if nblocks == 0 {
        return Err(parse_error(lines.last, "number of blocks must be positive"));
    }
    let block_line = lines.last + 1;
    let blocks: Vec<i64> = lines
        .numbers(nblocks, "block sizes")?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || v == 0.0 {
                Err(parse_error(block_line, format!("invalid block size {v}")))
            } else {
                Ok(v as i64)
            }
        })
        .collect::<Result<_>>()?;
    let b = lines.numbers(m, "right-hand side vector")?;

    // entries[matno][block] -> coordinates
    let mut entries: Vec<Vec<Vec<(usize, usize, f64)>>> = vec![vec![Vec::new(); nblocks]; m + 1];
    let mut seen = HashSet::new();
    while let Some((ln, line)) = lines.next_content() {
        let toks: Vec<&str> = tokens(line).take(5).collect();
        if toks.len() < 5 {
            return Err(parse_error(ln, "entry line needs `matno blkno i j value`"));
        }
        let int = |t: &str, what: &str| {
            t.parse::<usize>()
                .map_err(|_| parse_error(ln, format!("malformed {what} `{t}`")))
        };
        let matno = int(toks[0], "matrix number")?;
        let blk = int(toks[1], "block number")?;
        let i = int(toks[2], "row index")?;
        let j = int(toks[3], "column index")?;
        let value = parse_f64(toks[4]).ok_or_else(|| parse_error(ln, format!("malformed value `{}`", toks[4])))?;
        if matno > m {
            return Err(parse_error(ln, format!("matrix number {matno} exceeds {m}")));
        }
        if blk == 0 || blk > nblocks {
            return Err(parse_error(ln, format!("block number {blk} out of range 1..={nblocks}")));
        }
        let size = blocks[blk - 1];
        let dim = size.unsigned_abs() as usize;
        if i == 0 || j == 0 || i > dim || j > dim {
            return Err(parse_error(ln, format!("index ({i}, {j}) outside block of size {dim}")));
        }
        if size < 0 && i != j {
            return Err(parse_error(ln, format!("off-diagonal entry ({i}, {j}) in diagonal block")));
        }
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        if !seen.insert((matno, blk, r, c)) {
            return Err(Error::DuplicateEntry {
                line: ln,
                matno,
                block: blk,
                row: r,
                col: c,
            });
        }
        entries[matno][blk - 1].push((r - 1, c - 1, value));
    }

    let mut mats = entries.into_iter().map(|per_block| {
        per_block
            .into_iter()
            .zip(&blocks)
            .map(|(e, &size)| SymMatrix::from_entries(size.unsigned_abs() as usize, e))
            .collect::<Result<Vec<_>>>()
    });
    let f0 = mats.next().unwrap()?;
    let c = f0
        .into_iter()
        .map(|mat| SymMatrix::from_entries(mat.dim(), mat.entries().iter().map(|&(i, j, v)| (i, j, -v))))
        .collect::<Result<Vec<_>>>()?;
    let a = mats.collect::<Result<Vec<_>>>()?;
    let mut p = SdpProblem::new(blocks, b, c, a)?;
    p.objective_sign = -1.0;
    Ok(p)
}
