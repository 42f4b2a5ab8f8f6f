//! Star-M product primitives.
//!
//! All functions take and return standard-domain tensors; the work happens on
//! transform-domain frontal slices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::Tensor3;
use crate::transform::Transform;
use crate::{CMat, C64};

/// Applies `f` to every frontal slice index in parallel, keeping slice order.
pub(crate) fn facewise<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Facewise product of transform-domain slices.
pub(crate) fn mul_slices(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    facewise(a.len(), |k| &a[k] * &b[k])
}

pub(crate) fn adjoint_slices(a: &[CMat]) -> Vec<CMat> {
    a.iter().map(|s| s.adjoint()).collect()
}

/// `C = A * B` under `M`: `C_hat(:, :, k) = A_hat(:, :, k) B_hat(:, :, k)`.
pub fn star_m(a: &Tensor3, b: &Tensor3, transform: &Transform) -> Result<Tensor3> {
    let (m, p, n) = a.shape();
    let (p2, _, n2) = b.shape();
    if p != p2 || n != n2 {
        return Err(Error::dim(format!(
            "cannot multiply {m}x{p}x{n} by {:?}",
            b.shape()
        )));
    }
    transform.check(a)?;
    let ah = transform.forward_slices(a)?;
    let bh = transform.forward_slices(b)?;
    transform.inverse_slices(&mul_slices(&ah, &bh))
}

/// `p x p x n` identity: every transform-domain slice is `I_p`.
pub fn identity_tensor(p: usize, transform: &Transform) -> Tensor3 {
    let slices = vec![linalg::eye(p); transform.size()];
    transform
        .inverse_slices(&slices)
        .expect("slice count matches transform size")
}

/// Facewise conjugate transpose in the transform domain.
pub fn conj_transpose(a: &Tensor3, transform: &Transform) -> Result<Tensor3> {
    let ah = transform.forward_slices(a)?;
    transform.inverse_slices(&adjoint_slices(&ah))
}

/// Facewise Moore-Penrose inverse with the default relative cutoff
/// `max(m, p) * eps` per slice.
pub fn pinv(a: &Tensor3, transform: &Transform) -> Result<Tensor3> {
    let (m, p, _) = a.shape();
    pinv_with_tol(a, transform, linalg::default_pinv_tol(m, p))
}

/// Facewise Moore-Penrose inverse; singular values `<= tol * sigma_max` of
/// their own slice are treated as zero.
pub fn pinv_with_tol(a: &Tensor3, transform: &Transform, tol: f64) -> Result<Tensor3> {
    let ah = transform.forward_slices(a)?;
    let inv = facewise(ah.len(), |k| linalg::pinv(&ah[k], tol));
    transform.inverse_slices(&inv)
}

/// `(M^* (x) I) bdiag(A_hat) (M (x) I)`, the `mn x pn` matrix acting on
/// `unfold(B)` exactly as `A *_M B` does.
pub fn to_structured_matrix(a: &Tensor3, transform: &Transform) -> Result<CMat> {
    let (m, p, n) = a.shape();
    let ah = transform.forward_slices(a)?;
    let mut bdiag = linalg::zeros(m * n, p * n);
    for (k, s) in ah.iter().enumerate() {
        bdiag.view_mut((k * m, k * p), (m, p)).copy_from(s);
    }
    let left = kron_identity(transform.adjoint(), m);
    let right = kron_identity(transform.matrix(), p);
    Ok(left * bdiag * right)
}

/// `mat (x) I_size`.
pub fn kron_identity(mat: &CMat, size: usize) -> CMat {
    let n = mat.nrows();
    let mut out = linalg::zeros(n * size, mat.ncols() * size);
    for r in 0..n {
        for c in 0..mat.ncols() {
            let v = mat[(r, c)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for d in 0..size {
                out[(r * size + d, c * size + d)] = v;
            }
        }
    }
    out
}
