//! Dense row-major matrices and the handful of kernels the model needs.
//!
//! Every reduction here runs in a fixed order, so results are reproducible
//! across runs and across the sequential / parallel training paths. Dot
//! products use eight independent accumulator lanes (a fixed reassociation
//! the compiler can vectorize); all other kernels accumulate in ascending
//! index order.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// Dot product with eight fixed accumulator lanes.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [S::zero(); 8];
    let n8 = a.len() - a.len() % 8;
    for (ca, cb) in a[..n8].chunks_exact(8).zip(b[..n8].chunks_exact(8)) {
        for l in 0..8 {
            lanes[l] += ca[l] * cb[l];
        }
    }
    let mut tail = S::zero();
    for (x, y) in a[n8..].iter().zip(&b[n8..]) {
        tail += *x * *y;
    }
    ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]))
        + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))
        + tail
}

/// `y += a * x`, element-wise.
#[inline]
pub fn axpy<S: Scalar>(y: &mut [S], a: S, x: &[S]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

impl<S: Scalar> Tensor2<S> {
    /// Build from row-major data; only the length is validated.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Config(format!(
                "tensor data length {} does not match shape {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    /// Checked construction: additionally rejects NaN / infinite entries.
    /// Used on test and ingestion paths, not in the training hot path.
    pub fn from_vec_checked(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        let t = Self::from_vec(rows, cols, data)?;
        t.ensure_finite("tensor construction")?;
        Ok(t)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: S) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Tensor2 { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::Config("ragged rows in tensor construction".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Tensor2 {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn fill(&mut self, v: S) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if let Some(idx) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(
                context,
                format!(
                    "non-finite value at ({}, {})",
                    idx / self.cols.max(1),
                    idx % self.cols.max(1)
                ),
            ));
        }
        Ok(())
    }

    /// Standard matrix product `self[m x k] * rhs[k x n]`, i-k-j loop order.
    pub fn matmul(&self, rhs: &Tensor2<S>) -> Result<Tensor2<S>> {
        if self.cols != rhs.rows {
            return Err(Error::shape("matmul", self.shape(), rhs.shape()));
        }
        let mut out = Tensor2::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                axpy(out_row, a_ik, rhs.row(k));
            }
        }
        Ok(out)
    }

    /// `self[m x k] * rhs^T` where `rhs` is `[n x k]`: each output element is
    /// a row-row dot product.
    pub fn matmul_nt(&self, rhs: &Tensor2<S>) -> Result<Tensor2<S>> {
        if self.cols != rhs.cols {
            return Err(Error::shape("matmul_nt", self.shape(), rhs.shape()));
        }
        let mut out = Tensor2::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                *o = dot(a_row, rhs.row(j));
            }
        }
        Ok(out)
    }

    /// `self^T * rhs` where `self` is `[t x m]` and `rhs` is `[t x n]`,
    /// accumulated over `t` in ascending order.
    pub fn matmul_tn(&self, rhs: &Tensor2<S>) -> Result<Tensor2<S>> {
        if self.rows != rhs.rows {
            return Err(Error::shape("matmul_tn", self.shape(), rhs.shape()));
        }
        let mut out = Tensor2::zeros(self.cols, rhs.cols);
        for t in 0..self.rows {
            let a_row = self.row(t);
            let b_row = rhs.row(t);
            for (m, &a_tm) in a_row.iter().enumerate() {
                axpy(out.row_mut(m), a_tm, b_row);
            }
        }
        Ok(out)
    }

    /// `out[r] = self.row(r) . x` — matrix-vector product.
    pub fn mul_vec(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), x);
        }
    }

    /// `out += self^T * x`, accumulating over rows in ascending order.
    pub fn mul_vec_t_accum(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &xr) in x.iter().enumerate() {
            axpy(out, xr, self.row(r));
        }
    }

    /// Rank-one update `self += u * v^T`.
    pub fn add_outer(&mut self, u: &[S], v: &[S]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            axpy(self.row_mut(r), ur, v);
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &Tensor2<S>, alpha: S) {
        debug_assert_eq!(self.shape(), other.shape());
        axpy(&mut self.data, alpha, &other.data);
    }

    pub fn transpose(&self) -> Tensor2<S> {
        let mut out = Tensor2::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Tensor2<S> {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Per-column sums, accumulated over rows in ascending order.
    pub fn col_sums(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.cols];
        for r in 0..self.rows {
            for (o, &v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    /// New tensor with the row order reversed.
    pub fn reverse_rows(&self) -> Tensor2<S> {
        let mut out = Tensor2::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(self.row(self.rows - 1 - r));
        }
        out
    }

    /// Map into another scalar type (used when writing 32-bit checkpoints
    /// from a 64-bit model and vice versa).
    pub fn convert<T: Scalar>(&self) -> Tensor2<T> {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|v| T::from(*v).expect("scalar conversion"))
                .collect(),
        }
    }
}
