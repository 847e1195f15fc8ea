//! Matrices of operator kernels, with exact inversion and null spaces.
//!
//! Elimination only ever divides by units of the operator ring (a single
//! term without derivatives or fields), so every step is exact. A matrix that
//! would need a non-unit pivot is reported rather than guessed at.

use std::fmt;

use super::kernel::Kernel;
use super::SymError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Kernel>,
}

/// Result of row reduction: pivot columns in order plus the reduced matrix.
struct Reduction {
    pivots: Vec<usize>,
    reduced: KernelMatrix,
}

impl KernelMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        KernelMatrix {
            rows,
            cols,
            entries: vec![Kernel::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Kernel::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Kernel>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged kernel matrix");
            for (j, k) in row.into_iter().enumerate() {
                m.set(i, j, k);
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Kernel {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, k: Kernel) {
        self.entries[i * self.cols + j] = k;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|k| k.is_zero())
    }

    pub fn is_field_independent(&self) -> bool {
        self.entries.iter().all(|k| k.is_field_independent())
    }

    pub fn row(&self, i: usize) -> Vec<Kernel> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Kernel> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn neg(&self) -> Self {
        KernelMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|k| k.neg()).collect(),
        }
    }

    pub fn add(&self, other: &KernelMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        KernelMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &KernelMatrix) -> Self {
        self.add(&other.neg())
    }

    /// Transpose with each entry replaced by its formal adjoint. For a
    /// bilinear form `∫∫ u(x) M(x,y) v(y)` this is the matrix of the form
    /// with arguments swapped.
    pub fn adjoint(&self) -> Result<Self, SymError> {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j).adjoint()?);
            }
        }
        Ok(m)
    }

    pub fn is_antisymmetric(&self) -> Result<bool, SymError> {
        Ok(self.is_square() && self.adjoint()? == self.neg())
    }

    pub fn mul(&self, other: &KernelMatrix) -> Result<Self, SymError> {
        assert_eq!(self.cols, other.rows, "kernel matrix shape mismatch");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Kernel::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.compose(b)?);
                }
                m.set(i, j, acc);
            }
        }
        Ok(m)
    }

    /// Applies the matrix to a column vector of kernels.
    pub fn apply(&self, v: &[Kernel]) -> Result<Vec<Kernel>, SymError> {
        assert_eq!(v.len(), self.cols);
        let col = KernelMatrix::from_rows(v.iter().map(|k| vec![k.clone()]).collect());
        Ok(self.mul(&col)?.column(0))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Self::identity(self.rows)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &KernelMatrix) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        KernelMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        }
    }

    /// Removes the given row and column indices.
    pub fn minor(&self, drop_rows: &[usize], drop_cols: &[usize]) -> Self {
        let rows: Vec<usize> = (0..self.rows).filter(|i| !drop_rows.contains(i)).collect();
        let cols: Vec<usize> = (0..self.cols).filter(|j| !drop_cols.contains(j)).collect();
        KernelMatrix::from_rows(
            rows.iter()
                .map(|&i| cols.iter().map(|&j| self.get(i, j).clone()).collect())
                .collect(),
        )
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Row `target -= factor ∘ row(source)`.
    fn eliminate(&mut self, target: usize, source: usize, factor: &Kernel) -> Result<(), SymError> {
        for j in 0..self.cols {
            let s = self.get(source, j);
            if s.is_zero() {
                continue;
            }
            let v = self.get(target, j).sub(&factor.compose(s)?);
            self.set(target, j, v);
        }
        Ok(())
    }

    fn scale_row(&mut self, i: usize, factor: &Kernel) -> Result<(), SymError> {
        for j in 0..self.cols {
            let v = factor.compose(self.get(i, j))?;
            self.set(i, j, v);
        }
        Ok(())
    }

    /// Gauss-Jordan elimination to reduced row-echelon form, restricted to
    /// the first `limit` columns. Pivots are chosen among unit entries,
    /// constants first; a column whose remaining entries are nonzero but not
    /// units yields [`SymError::NonUnitPivot`].
    fn reduce(&self, limit: usize) -> Result<Reduction, SymError> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..limit {
            if r == m.rows {
                break;
            }
            let candidates: Vec<usize> = (r..m.rows).filter(|&i| m.get(i, c).is_unit()).collect();
            let chosen = candidates
                .iter()
                .copied()
                .find(|&i| m.get(i, c).is_constant())
                .or_else(|| candidates.first().copied());
            let Some(p) = chosen else {
                if (r..m.rows).any(|i| !m.get(i, c).is_zero()) {
                    return Err(SymError::NonUnitPivot(format!("column {c}")));
                }
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).unit_inverse().expect("unit pivot");
            m.scale_row(r, &inv)?;
            for i in 0..m.rows {
                if i != r && !m.get(i, c).is_zero() {
                    let f = m.get(i, c).clone();
                    m.eliminate(i, r, &f)?;
                }
            }
            pivots.push(c);
            r += 1;
        }
        Ok(Reduction { pivots, reduced: m })
    }

    pub fn rank(&self) -> Result<usize, SymError> {
        Ok(self.reduce(self.cols)?.pivots.len())
    }

    /// Exact inverse of a square matrix.
    pub fn invert(&self) -> Result<KernelMatrix, SymError> {
        assert!(self.is_square(), "inverse of a non-square kernel matrix");
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, Kernel::one());
        }
        let red = aug.reduce(n)?;
        if red.pivots.len() < n {
            return Err(SymError::Singular {
                rank: red.pivots.len(),
                size: n,
            });
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, red.reduced.get(i, n + j).clone());
            }
        }
        Ok(inv)
    }

    /// Basis of the right null space `{v : M v = 0}`, one vector per free
    /// column. Each vector has a `1` in its free slot.
    pub fn null_space(&self) -> Result<Vec<Vec<Kernel>>, SymError> {
        let red = self.reduce(self.cols)?;
        let mut out = Vec::new();
        for free in (0..self.cols).filter(|c| !red.pivots.contains(c)) {
            let mut v = vec![Kernel::zero(); self.cols];
            v[free] = Kernel::one();
            for (row, &pc) in red.pivots.iter().enumerate() {
                v[pc] = red.reduced.get(row, free).neg();
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Basis of the left null space: vectors `u` with `Σᵢ uᵢ† ∘ Mᵢⱼ = 0`,
    /// obtained as the right null space of the adjoint.
    pub fn left_null_space(&self) -> Result<Vec<Vec<Kernel>>, SymError> {
        self.adjoint()?.null_space()
    }

    /// Entries rendered as strings, row-major.
    pub fn render(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect())
            .collect()
    }
}

impl fmt::Display for KernelMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells = self.render();
        let width = cells
            .iter()
            .flatten()
            .map(|s| s.chars().count())
            .max()
            .unwrap_or(1);
        for row in cells {
            write!(f, "[")?;
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{c:>width$}")?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}
