//! The unitary mode-3 transform `M` that defines the star-M product.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{Domain, Tensor3};
use crate::{CMat, C64};

/// Constructed transforms must satisfy `||M M^* - I||_max` below this.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// Orthonormal DCT-II.
    Dct,
    /// Orthonormal DST-I.
    Dst,
    /// Left singular vectors of the mode-3 unfolding of a data tensor.
    DataDriven,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `X x_3 M`
    Forward,
    /// `X x_3 M^*`
    Inverse,
}

#[derive(Debug, Clone)]
pub struct Transform {
    kind: TransformKind,
    matrix: CMat,
    adjoint: CMat,
}

impl Transform {
    fn new(kind: TransformKind, matrix: CMat) -> Self {
        let adjoint = matrix.adjoint();
        Transform {
            kind,
            matrix,
            adjoint,
        }
    }

    /// Orthonormal DCT-II: `M[j, k] = c_j cos(pi (2k + 1) j / 2n)`.
    pub fn dct(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::dim("DCT size must be positive"));
        }
        let nf = n as f64;
        let matrix = DMatrix::from_fn(n, n, |j, k| {
            let c = if j == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            C64::new(c * (PI * (2 * k + 1) as f64 * j as f64 / (2.0 * nf)).cos(), 0.0)
        });
        Ok(Self::new(TransformKind::Dct, matrix))
    }

    /// Orthonormal DST-I: `M[j, k] = sqrt(2 / (n + 1)) sin(pi (j + 1)(k + 1) / (n + 1))`.
    pub fn dst(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::dim("DST size must be positive"));
        }
        let np1 = (n + 1) as f64;
        let scale = (2.0 / np1).sqrt();
        let matrix = DMatrix::from_fn(n, n, |j, k| {
            C64::new(scale * (PI * ((j + 1) * (k + 1)) as f64 / np1).sin(), 0.0)
        });
        Ok(Self::new(TransformKind::Dst, matrix))
    }

    /// `M = U^*` where `U` holds the left singular vectors of the `n x pm`
    /// mode-3 unfolding of `x`. Transformed slices then carry non-increasing
    /// energy.
    pub fn data_driven(x: &Tensor3) -> Result<Self> {
        if x.is_zero() {
            return Err(Error::DegenerateInput(
                "data-driven transform of an all-zero tensor".into(),
            ));
        }
        let unfolded = x.mode3_unfold();
        let n = unfolded.nrows();
        // Zero columns leave U unchanged and guarantee a square U when pm < n.
        let width = unfolded.ncols().max(n);
        let padded = linalg::pad(&unfolded, n, width);
        let dec = linalg::svd(&padded);
        Ok(Self::new(TransformKind::DataDriven, dec.u.adjoint()))
    }

    /// Wraps a caller-supplied unitary matrix.
    pub fn explicit(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::dim(format!(
                "transform matrix must be square and non-empty, got {:?}",
                matrix.shape()
            )));
        }
        let deviation = unitarity_defect(&matrix);
        // Hand-built matrices (e.g. rounded decimal entries) get a little slack.
        if deviation > 1e-10 {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self::new(TransformKind::Explicit, matrix))
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::dim("identity transform size must be positive"));
        }
        Ok(Self::new(TransformKind::Explicit, linalg::eye(n)))
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn adjoint(&self) -> &CMat {
        &self.adjoint
    }

    /// `st(M)`: zero for fast transforms, stored nonzeros otherwise.
    pub fn storage_cost(&self) -> usize {
        match self.kind {
            TransformKind::Dct | TransformKind::Dst => 0,
            TransformKind::DataDriven | TransformKind::Explicit => {
                self.matrix.iter().filter(|z| z.re != 0.0 || z.im != 0.0).count()
            }
        }
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    pub(crate) fn check(&self, x: &Tensor3) -> Result<()> {
        if x.tubes() != self.size() {
            return Err(Error::InvalidTransform {
                expected: self.size(),
                found: x.tubes(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &Tensor3, direction: Direction) -> Result<Tensor3> {
        self.check(x)?;
        let (m, p, n) = x.shape();
        let mat = match direction {
            Direction::Forward => &self.matrix,
            Direction::Inverse => &self.adjoint,
        };
        let data = mode3_product(x.as_slice(), m * p, n, mat);
        let domain = match direction {
            Direction::Forward => Domain::Transform,
            Direction::Inverse => Domain::Standard,
        };
        Ok(Tensor3::from_vec(m, p, n, data)?.with_domain(domain))
    }

    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        self.apply(x, Direction::Forward)
    }

    pub fn inverse(&self, x: &Tensor3) -> Result<Tensor3> {
        self.apply(x, Direction::Inverse)
    }

    /// Transform-domain frontal slices of a standard-domain tensor.
    pub fn forward_slices(&self, x: &Tensor3) -> Result<Vec<CMat>> {
        Ok(self.forward(x)?.frontal_slices())
    }

    /// Standard-domain tensor from transform-domain frontal slices.
    pub fn inverse_slices(&self, slices: &[CMat]) -> Result<Tensor3> {
        if slices.len() != self.size() {
            return Err(Error::InvalidTransform {
                expected: self.size(),
                found: slices.len(),
            });
        }
        let hat = Tensor3::from_frontal_slices(slices)?.with_domain(Domain::Transform);
        self.inverse(&hat)
    }
}

fn unitarity_defect(matrix: &CMat) -> f64 {
    let n = matrix.nrows();
    linalg::max_abs(&(matrix * matrix.adjoint() - linalg::eye(n)))
}

/// `out_k = sum_l mat[k, l] * in_l` over contiguous slices of length `len`.
fn mode3_product(input: &[C64], len: usize, n: usize, mat: &CMat) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len * n];
    if len == 0 {
        return out;
    }
    out.par_chunks_mut(len).enumerate().for_each(|(k, dst)| {
        for l in 0..n {
            let coef = mat[(k, l)];
            if coef.re == 0.0 && coef.im == 0.0 {
                continue;
            }
            let src = &input[l * len..(l + 1) * len];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += coef * s;
            }
        }
    });
    out
}
