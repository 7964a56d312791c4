//! Compressed-row complex matrices with a canonical layout: rows in order,
//! columns sorted within each row, duplicates summed, exact zeros dropped.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C>,
}

impl SparseOperator {
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != C::new(0.0, 0.0)).collect();
        let mut k = 0;
        let mut rows2 = Vec::with_capacity(rows.len());
        for i in 0..rows.len() {
            if keep[i] {
                rows2.push(rows[i]);
                cols[k] = cols[i];
                vals[k] = vals[i];
                k += 1;
            }
        }
        cols.truncate(k);
        vals.truncate(k);
        for r in rows2 {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { dim, row_ptr, cols, vals }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseOperator { dim, row_ptr: vec![0; dim + 1], cols: vec![], vals: vec![] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, v)| (i, i, C::new(*v, 0.0))).collect())
    }

    pub fn from_dense(m: &DMatrix<C>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                t.push((r, c, m[(r, c)]));
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        (0..self.dim).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C::new(0.0, 0.0),
        }
    }

    /// y = A x, rows computed in parallel; each row sums in column order.
    pub fn matvec_into(&self, x: &[C], y: &mut [C]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let mut s = C::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yr = s;
        });
    }

    pub fn apply(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn scale(&self, a: C) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, v * a)).collect())
    }

    /// a·self + b·other.
    pub fn lin_comb(&self, a: C, other: &Self, b: C) -> Self {
        assert_eq!(self.dim, other.dim);
        let t = self.triplets().map(|(r, c, v)| (r, c, v * a)).chain(other.triplets().map(|(r, c, v)| (r, c, v * b)));
        Self::from_triplets(self.dim, t.collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(C::new(1.0, 0.0), other, C::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(C::new(1.0, 0.0), other, C::new(-1.0, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.dim, t)
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |A − A†|.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() < 1e-13
    }

    /// Largest entry of the restriction to rows and columns where `keep` holds.
    pub fn max_abs_restricted(&self, keep_row: impl Fn(usize) -> bool, keep_col: impl Fn(usize) -> bool) -> f64 {
        self.triplets()
            .filter(|(r, c, _)| keep_row(*r) && keep_col(*c))
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Debug dump: a `# dim=N` line, a header, then `row,col,re,im` per entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dim={}", self.dim)?;
        writeln!(w, "row,col,re,im")?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r},{c},{:.17e},{:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

pub fn norm(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_layout_sums_duplicates() {
        let a = SparseOperator::from_triplets(
            3,
            vec![(2, 0, C::new(1.0, 0.0)), (0, 1, C::new(2.0, 0.0)), (2, 0, C::new(0.5, 1.0)), (1, 1, C::new(0.0, 0.0))],
        );
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(2, 0), C::new(1.5, 1.0));
        assert_eq!(a.triplets().next().unwrap().0, 0);
    }

    #[test]
    fn matvec_and_adjoint() {
        let a = SparseOperator::from_triplets(2, vec![(0, 1, C::new(0.0, 1.0)), (1, 0, C::new(0.0, -1.0))]);
        assert!(a.is_hermitian());
        let y = a.apply(&[C::new(1.0, 0.0), C::new(2.0, 0.0)]);
        assert_eq!(y, vec![C::new(0.0, 2.0), C::new(0.0, -1.0)]);
        let d = a.to_dense();
        assert_eq!(SparseOperator::from_dense(&d), a);
    }
}
