//! LMI problem representation.
//!
//! A problem is a list of blocks `F_0 + Σ_j y_j F_j ⪰ 0` over a flat decision
//! vector `y`, with an optional linear cost `cᵀy` to minimize.

use nalgebra::DMatrix;

use crate::error::{Result, SdpError};

pub const MAX_BLOCK_SIZE: usize = 64;
pub const MAX_VARS: usize = 2000;

/// Symmetric matrix stored as its upper-triangle nonzeros (`row <= col`, 0-based).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymSparse {
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new() -> Self {
        Self::default()
    }

    /// `v·I` of dimension `n`.
    pub fn identity(n: usize, v: f64) -> Self {
        let mut m = Self::new();
        for i in 0..n {
            m.add(i, i, v);
        }
        m.canonicalize();
        m
    }

    /// Accumulates `v` into entry `(i, j)` (and by symmetry `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((r, c, v));
    }

    /// Sorts entries, merges duplicates and drops exact zeros.
    pub fn canonicalize(&mut self) {
        self.entries
            .sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(i, j, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => out.push((i, j, v)),
            }
        }
        out.retain(|e| e.2 != 0.0);
        self.entries = out;
    }

    /// Upper-triangle nonzeros of a dense matrix; the lower triangle is ignored.
    pub fn from_dense_upper(m: &DMatrix<f64>) -> Self {
        let mut s = Self::new();
        for j in 0..m.ncols() {
            for i in 0..=j.min(m.nrows().saturating_sub(1)) {
                let v = m[(i, j)];
                if v != 0.0 {
                    s.entries.push((i, j, v));
                }
            }
        }
        s
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        self.add_to_dense(&mut m, 1.0);
        m
    }

    pub fn add_to_dense(&self, m: &mut DMatrix<f64>, scale: f64) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += scale * v;
            if i != j {
                m[(j, i)] += scale * v;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for e in &mut self.entries {
            e.2 *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, e| a.max(e.2.abs()))
    }
}

/// One linear matrix inequality `constant + Σ y_j F_j ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub size: usize,
    pub constant: SymSparse,
    /// `(variable index, coefficient matrix)`, sorted by variable index.
    pub terms: Vec<(usize, SymSparse)>,
    pub label: String,
}

impl LmiBlock {
    pub fn new(size: usize, label: impl Into<String>) -> Self {
        Self {
            size,
            constant: SymSparse::new(),
            terms: Vec::new(),
            label: label.into(),
        }
    }

    /// Evaluates `F(y)` as a dense symmetric matrix.
    pub fn eval(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense(self.size);
        for (j, f) in &self.terms {
            f.add_to_dense(&mut m, y[*j]);
        }
        m
    }

    /// Sorts terms, merges repeated variables, canonicalizes every matrix and
    /// drops empty terms.
    pub fn canonicalize(&mut self) {
        self.constant.canonicalize();
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, SymSparse)> = Vec::with_capacity(self.terms.len());
        for (j, f) in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1.entries.extend_from_slice(&f.entries),
                _ => merged.push((j, f)),
            }
        }
        for (_, f) in &mut merged {
            f.canonicalize();
        }
        merged.retain(|(_, f)| !f.is_empty());
        self.terms = merged;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub blocks: Vec<LmiBlock>,
    /// Linear cost to minimize; `None` is a pure feasibility problem.
    pub objective: Option<Vec<f64>>,
    /// Diagnostic names, one per variable (may be empty).
    pub var_names: Vec<String>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            blocks: Vec::new(),
            objective: None,
            var_names: Vec::new(),
        }
    }

    pub fn push_block(&mut self, mut block: LmiBlock) {
        block.canonicalize();
        self.blocks.push(block);
    }

    pub fn var_name(&self, j: usize) -> String {
        self.var_names
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("y{j}"))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SdpError::InvalidProblem(msg));
        if self.num_vars == 0 {
            return bad("no decision variables".into());
        }
        if self.num_vars > MAX_VARS {
            return bad(format!("{} variables exceeds limit {MAX_VARS}", self.num_vars));
        }
        if !self.var_names.is_empty() && self.var_names.len() != self.num_vars {
            return bad("variable name table length mismatch".into());
        }
        if let Some(c) = &self.objective {
            if c.len() != self.num_vars {
                return bad(format!("objective has {} entries, expected {}", c.len(), self.num_vars));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return bad("non-finite objective coefficient".into());
            }
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            if blk.size == 0 || blk.size > MAX_BLOCK_SIZE {
                return bad(format!("block {b} ({}) has size {}", blk.label, blk.size));
            }
            let check = |m: &SymSparse| {
                m.entries
                    .iter()
                    .all(|&(i, j, v)| i <= j && j < blk.size && v.is_finite())
            };
            if !check(&blk.constant) {
                return bad(format!("block {b} ({}) constant out of range", blk.label));
            }
            let mut prev = None;
            for (j, f) in &blk.terms {
                if *j >= self.num_vars {
                    return bad(format!("block {b} references variable {j}"));
                }
                if prev.is_some_and(|p| p >= *j) {
                    return bad(format!("block {b} terms not sorted/unique"));
                }
                prev = Some(*j);
                if !check(f) {
                    return bad(format!("block {b} ({}) coefficient of {} out of range", blk.label, self.var_name(*j)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_merges_and_drops_zeros() {
        let mut s = SymSparse::new();
        s.add(1, 0, 2.0);
        s.add(0, 1, -2.0);
        s.add(2, 2, 1.5);
        s.add(2, 2, 1.5);
        s.canonicalize();
        assert_eq!(s.entries(), &[(2, 2, 3.0)]);
    }

    #[test]
    fn eval_is_symmetric() {
        let mut b = LmiBlock::new(2, "t");
        b.constant = SymSparse::identity(2, 1.0);
        let mut f = SymSparse::new();
        f.add(0, 1, 1.0);
        b.terms.push((0, f));
        let m = b.eval(&[0.5]);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let mut p = SdpProblem::new(1);
        let mut b = LmiBlock::new(2, "x");
        let mut f = SymSparse::new();
        f.add(0, 2, 1.0);
        b.terms.push((0, f));
        p.blocks.push(b);
        assert!(p.validate().is_err());

        let mut p = SdpProblem::new(1);
        p.blocks.push(LmiBlock::new(MAX_BLOCK_SIZE + 1, "big"));
        assert!(p.validate().is_err());
    }
}
