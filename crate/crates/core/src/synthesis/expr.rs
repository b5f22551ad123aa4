//! Matrices whose entries are affine in the decision vector.

use nalgebra::DMatrix;

use dsas_sdp::{LmiBlock, SymSparse};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    /// `(variable, coefficient)`, unsorted, may repeat.
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(j: usize) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(j, 1.0)],
        }
    }

    fn add_scaled(&mut self, other: &LinExpr, s: f64) {
        if s == 0.0 {
            return;
        }
        self.constant += s * other.constant;
        self.terms.extend(other.terms.iter().map(|&(j, c)| (j, s * c)));
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |a, &(j, c)| a + c * y[j])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<LinExpr>,
}

impl ExprMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![LinExpr::default(); rows * cols],
        }
    }

    pub fn from_const(m: &DMatrix<f64>) -> Self {
        let mut e = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                e.at_mut(i, j).constant = m[(i, j)];
            }
        }
        e
    }

    /// Entry `(i, j)` is the variable `index(i, j)`.
    pub fn vars(rows: usize, cols: usize, index: impl Fn(usize, usize) -> usize) -> Self {
        let mut e = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                *e.at_mut(i, j) = LinExpr::var(index(i, j));
            }
        }
        e
    }

    pub fn identity_times(n: usize, e: &LinExpr) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = e.clone();
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &LinExpr {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut LinExpr {
        &mut self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        t
    }

    /// `K·self` for a constant `K`.
    pub fn left_mul(k: &DMatrix<f64>, e: &ExprMat) -> Self {
        assert_eq!(k.ncols(), e.rows, "left_mul dimension mismatch");
        let mut out = Self::zeros(k.nrows(), e.cols);
        for i in 0..k.nrows() {
            for j in 0..e.cols {
                let mut acc = LinExpr::default();
                for l in 0..e.rows {
                    acc.add_scaled(e.at(l, j), k[(i, l)]);
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    /// `self·K` for a constant `K`.
    pub fn right_mul(e: &ExprMat, k: &DMatrix<f64>) -> Self {
        assert_eq!(e.cols, k.nrows(), "right_mul dimension mismatch");
        let mut out = Self::zeros(e.rows, k.ncols());
        for i in 0..e.rows {
            for j in 0..k.ncols() {
                let mut acc = LinExpr::default();
                for l in 0..e.cols {
                    acc.add_scaled(e.at(i, l), k[(l, j)]);
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for (o, d) in out.data.iter_mut().zip(&self.data) {
            o.add_scaled(d, s);
        }
        out
    }

    pub fn plus(&self, other: &ExprMat) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "plus dimension mismatch");
        let mut out = self.clone();
        for (o, d) in out.data.iter_mut().zip(&other.data) {
            o.add_scaled(d, 1.0);
        }
        out
    }

    /// Assembles a block matrix; `None` blocks are zero. Block sizes are
    /// taken from `row_sizes` and `col_sizes`.
    pub fn blocks(row_sizes: &[usize], col_sizes: &[usize], blocks: &[Vec<Option<ExprMat>>]) -> Self {
        let rows: usize = row_sizes.iter().sum();
        let cols: usize = col_sizes.iter().sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    assert_eq!((b.rows, b.cols), (row_sizes[bi], col_sizes[bj]), "block ({bi}, {bj}) has wrong size");
                    for i in 0..b.rows {
                        for j in 0..b.cols {
                            *out.at_mut(r0 + i, c0 + j) = b.at(i, j).clone();
                        }
                    }
                }
                c0 += col_sizes[bj];
            }
            r0 += row_sizes[bi];
        }
        out
    }

    /// `self + selfᵀ`.
    pub fn he(&self) -> Self {
        self.plus(&self.transpose())
    }

    pub fn eval(&self, y: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).eval(y))
    }

    /// LMI block `self − margin·I ⪰ 0` from the upper triangle; the matrix is
    /// assumed symmetric as an expression.
    pub fn to_block(&self, margin: f64, label: impl Into<String>) -> LmiBlock {
        assert_eq!(self.rows, self.cols, "LMI block must be square");
        let n = self.rows;
        let mut blk = LmiBlock::new(n, label);
        let mut per_var: std::collections::BTreeMap<usize, SymSparse> = Default::default();
        for i in 0..n {
            for j in i..n {
                let e = self.at(i, j);
                let c = if i == j { e.constant - margin } else { e.constant };
                blk.constant.add(i, j, c);
                for &(v, coef) in &e.terms {
                    per_var.entry(v).or_default().add(i, j, coef);
                }
            }
        }
        blk.terms = per_var.into_iter().collect();
        blk.canonicalize();
        blk
    }
}
