//! Dense third-order complex tensors.
//!
//! A [`Tensor3`] of shape `m x p x n` stores entry `(i, j, k)` at offset
//! `i + m * (j + p * k)`: rows fastest, then lateral index, then frontal
//! index. Each frontal slice `X(:, :, k)` is therefore a contiguous
//! column-major `m x p` block, and each lateral slice `X(:, j, :)` is one
//! state snapshot.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{CMat, C64};

/// Which domain a tensor's data currently lives in.
///
/// This is bookkeeping only; operations document which domain they expect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Domain {
    #[default]
    Standard,
    Transform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    m: usize,
    p: usize,
    n: usize,
    data: Vec<C64>,
    domain: Domain,
}

impl Tensor3 {
    pub fn zeros(m: usize, p: usize, n: usize) -> Self {
        Tensor3 {
            m,
            p,
            n,
            data: vec![C64::new(0.0, 0.0); m * p * n],
            domain: Domain::Standard,
        }
    }

    pub fn from_fn(m: usize, p: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(m * p * n);
        for k in 0..n {
            for j in 0..p {
                for i in 0..m {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 {
            m,
            p,
            n,
            data,
            domain: Domain::Standard,
        }
    }

    pub fn from_real_fn(m: usize, p: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        Self::from_fn(m, p, n, |i, j, k| C64::new(f(i, j, k), 0.0))
    }

    /// Wraps a flat buffer laid out as described in the module docs.
    pub fn from_vec(m: usize, p: usize, n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != m * p * n {
            return Err(Error::dim(format!(
                "buffer of length {} cannot hold a {m}x{p}x{n} tensor",
                data.len()
            )));
        }
        Ok(Tensor3 {
            m,
            p,
            n,
            data,
            domain: Domain::Standard,
        })
    }

    /// Stacks frontal slices; all slices must share one shape.
    pub fn from_frontal_slices(slices: &[CMat]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::dim("no frontal slices given"));
        };
        let (m, p) = first.shape();
        let mut data = Vec::with_capacity(m * p * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (m, p) {
                return Err(Error::dim(format!(
                    "frontal slice {k} is {:?}, expected {:?}",
                    s.shape(),
                    (m, p)
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Tensor3 {
            m,
            p,
            n: slices.len(),
            data,
            domain: Domain::Standard,
        })
    }

    /// Concatenates lateral slices (each `m x 1 x n`) side by side.
    pub fn from_lateral_slices(slices: &[Tensor3]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::dim("no lateral slices given"));
        };
        let (m, n) = (first.m, first.n);
        let p: usize = slices.iter().map(|s| s.p).sum();
        if slices.iter().any(|s| s.m != m || s.n != n) {
            return Err(Error::dim("lateral slices disagree on m or n"));
        }
        let mut out = Tensor3::zeros(m, p, n);
        let mut offset = 0;
        for s in slices {
            for k in 0..n {
                for j in 0..s.p {
                    for i in 0..m {
                        out[(i, offset + j, k)] = s[(i, j, k)];
                    }
                }
            }
            offset += s.p;
        }
        Ok(out)
    }

    /// Reshapes a state vector of length `m * n` into an `m x 1 x n` lateral slice.
    pub fn from_state(state: &[C64], m: usize, n: usize) -> Result<Self> {
        Self::from_vec(m, 1, n, state.to_vec())
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.p, self.n)
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    pub fn tubes(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn frontal_slice(&self, k: usize) -> CMat {
        let len = self.m * self.p;
        DMatrix::from_column_slice(self.m, self.p, &self.data[k * len..(k + 1) * len])
    }

    pub fn frontal_slices(&self) -> Vec<CMat> {
        (0..self.n).map(|k| self.frontal_slice(k)).collect()
    }

    pub fn set_frontal_slice(&mut self, k: usize, slice: &CMat) -> Result<()> {
        if slice.shape() != (self.m, self.p) || k >= self.n {
            return Err(Error::dim(format!(
                "cannot place a {:?} slice at index {k} of a {:?} tensor",
                slice.shape(),
                self.shape()
            )));
        }
        let len = self.m * self.p;
        self.data[k * len..(k + 1) * len].copy_from_slice(slice.as_slice());
        Ok(())
    }

    /// Lateral slice `X(:, j, :)` as an `m x 1 x n` tensor.
    pub fn lateral_slice(&self, j: usize) -> Tensor3 {
        Tensor3::from_fn(self.m, 1, self.n, |i, _, k| self[(i, j, k)])
    }

    /// Lateral slices `start..end` as an `m x (end - start) x n` tensor.
    pub fn lateral_range(&self, start: usize, end: usize) -> Tensor3 {
        Tensor3::from_fn(self.m, end - start, self.n, |i, j, k| self[(i, start + j, k)])
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn lateral_norm(&self, j: usize) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.n {
            for i in 0..self.m {
                acc += self[(i, j, k)].norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn frontal_norm(&self, k: usize) -> f64 {
        let len = self.m * self.p;
        self.data[k * len..(k + 1) * len]
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Tensor3) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(self.with_data(data))
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(self.with_data(data))
    }

    pub fn add_assign(&mut self, other: &Tensor3) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, alpha: C64) -> Tensor3 {
        let data = self.data.iter().map(|a| a * alpha).collect();
        self.with_data(data)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn with_data(&self, data: Vec<C64>) -> Tensor3 {
        Tensor3 {
            m: self.m,
            p: self.p,
            n: self.n,
            data,
            domain: self.domain,
        }
    }

    /// `unfold(X)`: the `mn x p` matrix whose column `j` stacks the columns of
    /// the `m x n` matrix `X(:, j, :)`.
    pub fn unfold(&self) -> CMat {
        let (m, p, n) = self.shape();
        DMatrix::from_fn(m * n, p, |row, j| self[(row % m, j, row / m)])
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(matrix: &CMat, m: usize, n: usize) -> Result<Tensor3> {
        if matrix.nrows() != m * n {
            return Err(Error::dim(format!(
                "cannot fold a {}-row matrix into m={m}, n={n}",
                matrix.nrows()
            )));
        }
        Ok(Tensor3::from_fn(m, matrix.ncols(), n, |i, j, k| matrix[(i + m * k, j)]))
    }

    /// Mode-3 unfolding `X_(3)`, an `n x (p m)` matrix whose row `k` holds the
    /// entries of frontal slice `k`.
    pub fn mode3_unfold(&self) -> CMat {
        let len = self.m * self.p;
        DMatrix::from_fn(self.n, len, |k, c| self.data[k * len + c])
    }

    /// Treats the tensor as an `mn x p` matrix and back is [`Tensor3::fold`];
    /// with `n = 1` this is the frontal slice itself.
    pub fn to_matrix(&self) -> CMat {
        self.unfold()
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = C64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &C64 {
        debug_assert!(i < self.m && j < self.p && k < self.n);
        &self.data[i + self.m * (j + self.p * k)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut C64 {
        debug_assert!(i < self.m && j < self.p && k < self.n);
        &mut self.data[i + self.m * (j + self.p * k)]
    }
}
