//! Compressed sparse row storage for complex operators.
//!
//! Only what the simulator needs: assembly from triplets, matrix-vector
//! products, adjoints, Kronecker products and linear combinations. Row
//! products are independent, so the parallel matvec is bit-identical to
//! the serial one.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Rows above this size switch the matvec to rayon.
const PAR_THRESHOLD: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that cancel to exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            *rows[r].entry(c).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v.re != 0.0 || v.im != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, std::iter::empty())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate over stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        match self.indices[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in self.indptr[r]..self.indptr[r + 1] {
            acc += self.values[k] * x[self.indices[k]];
        }
        acc
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        if self.nrows >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = self.row_dot(r, x));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = self.row_dot(r, x);
            }
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `<x|A|x>` without normalization.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        let ax = self.matvec(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    /// `Σ_k c_k A_k` over operators of equal shape.
    pub fn linear_combination(terms: &[(C64, &CsrMatrix)]) -> Self {
        assert!(!terms.is_empty());
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let triplets = terms.iter().flat_map(|(coef, m)| {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols));
            m.triplets().map(move |(r, c, v)| (r, c, *coef * v))
        });
        Self::from_triplets(nrows, ncols, triplets)
    }

    /// Kronecker product `self ⊗ other`, with `self` indexing the outer block.
    pub fn kron(&self, other: &CsrMatrix) -> Self {
        let triplets = self.triplets().flat_map(|(ra, ca, va)| {
            other.triplets().map(move |(rb, cb, vb)| {
                (ra * other.nrows + rb, ca * other.ncols + cb, va * vb)
            })
        });
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, triplets)
    }

    /// Sparse product `self · other`.
    pub fn mul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let triplets = self.triplets().flat_map(|(r, k, v)| other.row(k).map(move |(c, w)| (r, c, v * w)));
        Self::from_triplets(self.nrows, other.ncols, triplets)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        let diff = Self::linear_combination(&[(C64::new(1.0, 0.0), self), (C64::new(-1.0, 0.0), other)]);
        diff.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A†|`; zero for an exactly Hermitian assembly.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Upper bound on the spectral norm: max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let triplets = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, m[(r, c)]));
        Self::from_triplets(m.nrows(), m.ncols(), triplets)
    }

    /// Debug export: one `row col re im` line per stored entry, preceded by a
    /// `# nrows ncols nnz` header.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicates_sum_and_cancel() {
        let m = CsrMatrix::from_triplets(2, 2, [(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0)), (1, 0, c(2.0, 1.0)), (1, 0, c(1.0, 0.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), c(3.0, 1.0));
        assert_eq!(m.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn kron_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 2, [(0, 1, c(1.0, 0.0)), (1, 1, c(0.0, 2.0))]);
        let b = CsrMatrix::from_triplets(2, 2, [(0, 0, c(3.0, 0.0)), (1, 0, c(1.0, -1.0))]);
        let k = a.kron(&b).to_dense();
        let ad = a.to_dense();
        let bd = b.to_dense();
        assert_eq!(k, ad.kronecker(&bd));
    }

    #[test]
    fn matvec_and_adjoint() {
        let a = CsrMatrix::from_triplets(2, 3, [(0, 2, c(1.0, 1.0)), (1, 0, c(2.0, 0.0))]);
        let y = a.matvec(&[c(1.0, 0.0), c(5.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(y, vec![c(-1.0, 1.0), c(2.0, 0.0)]);
        let ah = a.adjoint();
        assert_eq!((ah.nrows(), ah.ncols()), (3, 2));
        assert_eq!(ah.get(2, 0), c(1.0, -1.0));
    }

    #[test]
    fn triplet_export_format() {
        let a = CsrMatrix::from_triplets(2, 2, [(1, 0, c(0.5, -0.25))]);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# 2 2 1"));
        let fields: Vec<&str> = lines.next().unwrap().split(' ').collect();
        assert_eq!(fields[..2], ["1", "0"]);
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.5);
        assert_eq!(fields[3].parse::<f64>().unwrap(), -0.25);
    }
}
