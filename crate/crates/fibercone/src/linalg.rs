//! Dense integer matrices with the lattice algorithms the cover machinery
//! needs: Smith normal form with transformation matrices, integer kernels,
//! and canonical reduction of vectors modulo a sublattice.

use crate::scalar::IntScalar;
use num_traits::Zero;

/// Dense row-major matrix over an exact integer scalar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IMat<I> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<I>,
}

impl<I: IntScalar> IMat<I> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![I::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = I::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<I>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter().map(|r| r.iter().map(|&v| I::from_i64_exact(v)).collect()).collect(),
        )
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &I {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut I {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[I] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *t.at_mut(c, r) = self.at(r, c).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let add = a.clone() * other.at(k, c).clone();
                    *out.at_mut(r, c) = out.at(r, c).clone() + add;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.rows == other.rows && self.cols == other.cols);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = a.clone() - b.clone();
        }
        out
    }

    pub fn pow(&self, mut e: u32) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[a] += q * row[b]
    fn add_row(&mut self, a: usize, b: usize, q: &I) {
        for c in 0..self.cols {
            let add = q.clone() * self.at(b, c).clone();
            *self.at_mut(a, c) = self.at(a, c).clone() + add;
        }
    }

    /// col[a] += q * col[b]
    fn add_col(&mut self, a: usize, b: usize, q: &I) {
        for r in 0..self.rows {
            let add = q.clone() * self.at(r, b).clone();
            *self.at_mut(r, a) = self.at(r, a).clone() + add;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            *self.at_mut(r, c) = -self.at(r, c).clone();
        }
    }

    fn negate_col(&mut self, c: usize) {
        for r in 0..self.rows {
            *self.at_mut(r, c) = -self.at(r, c).clone();
        }
    }
}

/// Smith normal form `U * A * V = D` with `U`, `V` unimodular and `D`
/// diagonal, each diagonal entry dividing the next.
#[derive(Clone, Debug)]
pub struct Smith<I> {
    pub u: IMat<I>,
    pub d: IMat<I>,
    pub v: IMat<I>,
}

impl<I: IntScalar> Smith<I> {
    /// Number of zero diagonal entries (free rank of the cokernel).
    pub fn free_rank(&self) -> usize {
        let n = self.d.rows.min(self.d.cols);
        (0..n).filter(|&i| self.d.at(i, i).is_zero()).count() + self.d.rows.saturating_sub(n)
    }

    /// Rows of `U` projecting onto the free part of `coker(A)`.
    ///
    /// `Q * A = 0` exactly, and `Q : Z^cols_of_U -> Z^free_rank` is onto.
    pub fn free_projection(&self) -> IMat<I> {
        let n = self.d.rows.min(self.d.cols);
        let zero_rows: Vec<usize> = (0..self.d.rows)
            .filter(|&i| i >= n || self.d.at(i, i).is_zero())
            .collect();
        let mut q = IMat::zero(zero_rows.len(), self.u.cols);
        for (r, &i) in zero_rows.iter().enumerate() {
            for c in 0..self.u.cols {
                *q.at_mut(r, c) = self.u.at(i, c).clone();
            }
        }
        q
    }
}

/// Smith normal form by gcd-driven row/column elimination.
pub fn smith_normal_form<I: IntScalar>(a: &IMat<I>) -> Smith<I> {
    let mut d = a.clone();
    let mut u = IMat::identity(a.rows);
    let mut v = IMat::identity(a.cols);
    let n = a.rows.min(a.cols);

    for t in 0..n {
        loop {
            // Find a nonzero pivot in the trailing block, smallest |value|.
            let mut pivot: Option<(usize, usize)> = None;
            for r in t..d.rows {
                for c in t..d.cols {
                    if !d.at(r, c).is_zero()
                        && pivot.is_none_or(|(pr, pc)| d.at(r, c).abs() < d.at(pr, pc).abs())
                    {
                        pivot = Some((r, c));
                    }
                }
            }
            let Some((pr, pc)) = pivot else { return Smith { u, d, v } };
            d.swap_rows(t, pr);
            u.swap_rows(t, pr);
            d.swap_cols(t, pc);
            v.swap_cols(t, pc);

            let mut dirty = false;
            for r in t + 1..d.rows {
                if !d.at(r, t).is_zero() {
                    let q = -(d.at(r, t).clone() / d.at(t, t).clone());
                    d.add_row(r, t, &q);
                    u.add_row(r, t, &q);
                    if !d.at(r, t).is_zero() {
                        dirty = true;
                    }
                }
            }
            for c in t + 1..d.cols {
                if !d.at(t, c).is_zero() {
                    let q = -(d.at(t, c).clone() / d.at(t, t).clone());
                    d.add_col(c, t, &q);
                    v.add_col(c, t, &q);
                    if !d.at(t, c).is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue;
            }
            // Divisibility sweep: pivot must divide the rest of the block.
            let mut fixed = true;
            'outer: for r in t + 1..d.rows {
                for c in t + 1..d.cols {
                    if !(d.at(r, c).clone() % d.at(t, t).clone()).is_zero() {
                        let one = I::one();
                        d.add_row(t, r, &one);
                        u.add_row(t, r, &one);
                        fixed = false;
                        break 'outer;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        if d.at(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    Smith { u, d, v }
}

/// Integer kernel basis of a single row vector, via unimodular column ops.
///
/// Returns `cols x (cols-1)`-many basis columns when the row is nonzero
/// (as a list of vectors), or the standard basis for the zero row.
pub fn row_kernel_basis<I: IntScalar>(row: &[I]) -> Vec<Vec<I>> {
    let n = row.len();
    let mut r: Vec<I> = row.to_vec();
    let mut v = IMat::<I>::identity(n);
    // Column-reduce the row to (g, 0, ..., 0).
    loop {
        let mut pivot: Option<usize> = None;
        for (c, val) in r.iter().enumerate() {
            if !val.is_zero() && pivot.is_none_or(|p| val.abs() < r[p].abs()) {
                pivot = Some(c);
            }
        }
        let Some(p) = pivot else {
            return (0..n).map(|c| (0..n).map(|i| v.at(i, c).clone()).collect()).collect();
        };
        if p != 0 {
            r.swap(0, p);
            v.swap_cols(0, p);
        }
        let mut done = true;
        for c in 1..n {
            if !r[c].is_zero() {
                let q = -(r[c].clone() / r[0].clone());
                let add = q.clone() * r[0].clone();
                r[c] = r[c].clone() + add;
                v.add_col(c, 0, &q);
                if !r[c].is_zero() {
                    done = false;
                }
            }
        }
        if done {
            break;
        }
    }
    if r[0].is_negative() {
        v.negate_col(0);
    }
    (1..n).map(|c| (0..n).map(|i| v.at(i, c).clone()).collect()).collect()
}

/// Canonical representative of `x` modulo the lattice spanned by `basis`
/// (columns). Reduction is greedy along a column Hermite form, so equal
/// cosets give equal representatives.
pub fn reduce_mod_lattice<I: IntScalar>(x: &[I], basis: &[Vec<I>]) -> Vec<I> {
    let n = x.len();
    let mut cols: Vec<Vec<I>> = basis.to_vec();
    // Column HNF: echelonize top-down.
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut col_start = 0usize;
    for row in 0..n {
        if col_start >= cols.len() {
            break;
        }
        loop {
            let mut pivot: Option<usize> = None;
            for (c, col) in cols.iter().enumerate().skip(col_start) {
                if !col[row].is_zero() && pivot.is_none_or(|p: usize| col[row].abs() < cols[p][row].abs())
                {
                    pivot = Some(c);
                }
            }
            let Some(p) = pivot else { break };
            cols.swap(col_start, p);
            let mut done = true;
            for c in col_start + 1..cols.len() {
                if !cols[c][row].is_zero() {
                    let q = cols[c][row].clone() / cols[col_start][row].clone();
                    for i in 0..n {
                        let sub = q.clone() * cols[col_start][i].clone();
                        cols[c][i] = cols[c][i].clone() - sub;
                    }
                    if !cols[c][row].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                if cols[col_start][row].is_negative() {
                    for i in 0..n {
                        cols[col_start][i] = -cols[col_start][i].clone();
                    }
                }
                pivots.push((row, col_start));
                col_start += 1;
                break;
            }
        }
    }
    // Greedy top-down reduction of x by the echelon columns.
    let mut out: Vec<I> = x.to_vec();
    for &(row, col) in &pivots {
        let p = &cols[col][row];
        let q = out[row].div_floor(p);
        if !q.is_zero() {
            for i in 0..n {
                let sub = q.clone() * cols[col][i].clone();
                out[i] = out[i].clone() - sub;
            }
        }
    }
    out
}
