//! Compressed-row operators for the matrix-free Lindblad right-hand side.
//!
//! Every Hamiltonian and collapse operator in this crate is very sparse in
//! the product basis (a handful of entries per row), so sparse × dense
//! products keep the cost of one RHS evaluation near `nnz · d`.

use nalgebra::DMatrix;

use crate::hilbert::Operator;
use crate::scalar::{Mat, Real, C};

#[derive(Clone, Debug)]
pub struct CsrMatrix<T: Real> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C<T>>,
}

impl<T: Real> CsrMatrix<T> {
    /// Keeps entries with nonzero modulus.
    pub fn from_dense(m: &Mat<T>) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != T::zero() || v.im != T::zero() {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn from_operator(op: &Operator<T>) -> Self {
        Self::from_dense(op.matrix())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> Mat<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        Self { vals: self.vals.iter().map(|v| *v * s).collect(), ..self.clone() }
    }

    /// `out = self · x` (overwrites `out`).
    pub fn mul_dense_into(&self, x: &Mat<T>, out: &mut Mat<T>) {
        let ncols = x.ncols();
        for j in 0..ncols {
            let xc = x.column(j);
            let xs = xc.as_slice();
            let mut oc = out.column_mut(j);
            for i in 0..self.dim {
                let mut acc = C::new(T::zero(), T::zero());
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xs[self.cols[k]];
                }
                oc[i] = acc;
            }
        }
    }

    /// `out += self · x`
    pub fn mul_dense_add(&self, x: &Mat<T>, out: &mut Mat<T>) {
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let xs = xc.as_slice();
            let mut oc = out.column_mut(j);
            for i in 0..self.dim {
                let mut acc = C::new(T::zero(), T::zero());
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xs[self.cols[k]];
                }
                oc[i] += acc;
            }
        }
    }

    /// `Tr(self · x)`
    pub fn trace_product(&self, x: &Mat<T>) -> C<T> {
        let mut acc = C::new(T::zero(), T::zero());
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[(self.cols[k], i)];
            }
        }
        acc
    }
}
