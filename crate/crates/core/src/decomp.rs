//! Facewise factorizations under the star-M product.
//!
//! Each factorization transforms its input once, factors every frontal slice
//! independently (in parallel) and transforms the factors back. Factor types
//! keep the transform-domain slices alongside the standard-domain tensors so
//! downstream pipelines never pay for a second round trip.

use std::cmp::Ordering;

use crate::algebra::facewise;
use crate::error::{Error, Result};
use crate::linalg::{self, SliceSvd};
use crate::tensor::Tensor3;
use crate::transform::Transform;
use crate::CMat;

/// Thin tensor QR, `A = Q * R`.
#[derive(Debug, Clone)]
pub struct TQr {
    pub q: Tensor3,
    pub r: Tensor3,
}

/// Truncated (or thin) star-M SVD `A ~ U * S * V^*`.
///
/// Slice `j` keeps `multirank[j]` singular triplets. The standard-domain
/// factors are padded with zero columns up to `k = max_j multirank[j]`.
#[derive(Debug, Clone)]
pub struct TSvdM {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
    pub multirank: Vec<usize>,
    pub gamma: Option<f64>,
    /// Retained transform-domain singular values, per slice.
    pub sigma_hat: Vec<Vec<f64>>,
    slices: Vec<SliceSvd>,
}

/// Star-M Schur form `K = W * T * W^*`.
#[derive(Debug, Clone)]
pub struct TSchur {
    pub w: Tensor3,
    pub t: Tensor3,
    /// Size of the factored leading block of each slice.
    pub active: Vec<usize>,
    w_hat: Vec<CMat>,
    t_hat: Vec<CMat>,
}

impl TSvdM {
    pub(crate) fn from_slices(
        slices: Vec<SliceSvd>,
        transform: &Transform,
        gamma: Option<f64>,
        width: Option<usize>,
    ) -> Result<TSvdM> {
        let multirank: Vec<usize> = slices.iter().map(|s| s.sigma.len()).collect();
        let k = width.unwrap_or_else(|| multirank.iter().copied().max().unwrap_or(0));
        let (m, p) = slices
            .first()
            .map(|s| (s.rows(), s.cols()))
            .ok_or_else(|| Error::dim("no frontal slices"))?;
        let u_hat: Vec<CMat> = slices.iter().map(|s| linalg::pad(&s.u, m, k)).collect();
        let v_hat: Vec<CMat> = slices.iter().map(|s| linalg::pad(&s.v, p, k)).collect();
        let s_hat: Vec<CMat> = slices
            .iter()
            .map(|s| linalg::pad(&linalg::real_diag(&s.sigma), k, k))
            .collect();
        Ok(TSvdM {
            u: transform.inverse_slices(&u_hat)?,
            s: transform.inverse_slices(&s_hat)?,
            v: transform.inverse_slices(&v_hat)?,
            sigma_hat: slices.iter().map(|s| s.sigma.clone()).collect(),
            multirank,
            gamma,
            slices,
        })
    }

    /// t-rank: the largest per-slice rank.
    pub fn rank(&self) -> usize {
        self.multirank.iter().copied().max().unwrap_or(0)
    }

    /// Transform-domain factors of each slice, truncated to its own rank.
    pub fn slices(&self) -> &[SliceSvd] {
        &self.slices
    }

    /// `U * S * V^*` as a standard-domain tensor.
    pub fn reconstruct(&self, transform: &Transform) -> Result<Tensor3> {
        let hat: Vec<CMat> = facewise(self.slices.len(), |j| self.slices[j].reconstruct());
        transform.inverse_slices(&hat)
    }

    /// Retained energy `sum sigma_hat^2`.
    pub fn energy(&self) -> f64 {
        self.sigma_hat.iter().flatten().map(|s| s * s).sum()
    }
}

impl TSchur {
    pub fn w_hat(&self) -> &[CMat] {
        &self.w_hat
    }

    pub fn t_hat(&self) -> &[CMat] {
        &self.t_hat
    }

    /// Diagonal of each triangular slice, restricted to its factored block.
    pub fn eigenvalues(&self) -> Vec<Vec<crate::C64>> {
        self.t_hat
            .iter()
            .zip(&self.active)
            .map(|(t, &k)| (0..k).map(|i| t[(i, i)]).collect())
            .collect()
    }
}

pub fn tqr(a: &Tensor3, transform: &Transform) -> Result<TQr> {
    let ah = transform.forward_slices(a)?;
    let (q, r): (Vec<CMat>, Vec<CMat>) = facewise(ah.len(), |k| linalg::qr(&ah[k])).into_iter().unzip();
    Ok(TQr {
        q: transform.inverse_slices(&q)?,
        r: transform.inverse_slices(&r)?,
    })
}

pub(crate) fn svd_slices(slices: &[CMat]) -> Vec<SliceSvd> {
    facewise(slices.len(), |k| linalg::svd(&slices[k]))
}

/// Thin, untruncated star-M SVD with `q = min(m, p)` columns per slice.
pub fn tsvdm(a: &Tensor3, transform: &Transform) -> Result<TSvdM> {
    let ah = transform.forward_slices(a)?;
    TSvdM::from_slices(svd_slices(&ah), transform, None, None)
}

/// Uniform rank-`k` truncation of every slice.
pub fn tr_tsvdm(a: &Tensor3, transform: &Transform, k: usize) -> Result<TSvdM> {
    let (m, p, _) = a.shape();
    let max = m.min(p);
    if k == 0 || k > max {
        return Err(Error::InvalidRank { rank: k, max });
    }
    let ah = transform.forward_slices(a)?;
    let slices = svd_slices(&ah).into_iter().map(|s| s.truncated(k)).collect();
    TSvdM::from_slices(slices, transform, None, Some(k))
}

/// Energy truncation: keeps the globally largest transform-domain singular
/// values until their energy reaches `gamma` of the total.
pub fn tr_tsvdm2(a: &Tensor3, transform: &Transform, gamma: f64) -> Result<TSvdM> {
    check_gamma(gamma)?;
    if a.is_zero() {
        return Err(Error::DegenerateInput("energy truncation of an all-zero tensor".into()));
    }
    let ah = transform.forward_slices(a)?;
    let full = svd_slices(&ah);
    let (truncated, _) = truncate_energy(full, gamma)?;
    TSvdM::from_slices(truncated, transform, Some(gamma), None)
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "energy level gamma = {gamma} must lie in (0, 1]"
        )));
    }
    Ok(())
}

/// Per-slice kept counts for energy level `gamma`.
///
/// Squared singular values are sorted descending (ties: lower slice, then
/// lower index) and the shortest prefix whose energy reaches `gamma` of the
/// total is kept. At least one value is always kept.
pub fn select_energy(sigma: &[Vec<f64>], gamma: f64) -> Result<Vec<usize>> {
    check_gamma(gamma)?;
    let mut entries: Vec<(f64, usize, usize)> = sigma
        .iter()
        .enumerate()
        .flat_map(|(j, s)| s.iter().enumerate().map(move |(i, &v)| (v * v, j, i)))
        .collect();
    entries.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    // Summing in sorted order makes the final cumulative sum equal the total.
    let total: f64 = entries.iter().map(|e| e.0).sum();
    if total == 0.0 {
        return Err(Error::DegenerateInput("all singular values are zero".into()));
    }
    let threshold = gamma * total;
    let mut ranks = vec![0usize; sigma.len()];
    let mut acc = 0.0;
    for &(e, j, _) in &entries {
        acc += e;
        ranks[j] += 1;
        if acc >= threshold {
            break;
        }
    }
    Ok(ranks)
}

pub(crate) fn truncate_energy(full: Vec<SliceSvd>, gamma: f64) -> Result<(Vec<SliceSvd>, Vec<usize>)> {
    let sigma: Vec<Vec<f64>> = full.iter().map(|s| s.sigma.clone()).collect();
    let ranks = select_energy(&sigma, gamma)?;
    let truncated = full.iter().zip(&ranks).map(|(s, &k)| s.truncated(k)).collect();
    Ok((truncated, ranks))
}

/// Complex Schur form of every transform-domain slice.
pub fn tschur(k: &Tensor3, transform: &Transform) -> Result<TSchur> {
    let (rows, cols, n) = k.shape();
    if rows != cols {
        return Err(Error::dim(format!("Schur form needs square slices, got {rows}x{cols}")));
    }
    tschur_with_ranks(k, transform, &vec![rows; n])
}

/// Schur form where only the leading `active[j] x active[j]` block of slice
/// `j` is factored; the rest of the slice is assumed zero.
pub fn tschur_with_ranks(k: &Tensor3, transform: &Transform, active: &[usize]) -> Result<TSchur> {
    let (rows, cols, n) = k.shape();
    if rows != cols {
        return Err(Error::dim(format!("Schur form needs square slices, got {rows}x{cols}")));
    }
    if active.len() != n || active.iter().any(|&a| a > rows) {
        return Err(Error::dim("active block sizes do not fit the slices"));
    }
    let kh = transform.forward_slices(k)?;
    let (w_hat, t_hat) = schur_slices(&kh, active);
    Ok(TSchur {
        w: transform.inverse_slices(&w_hat)?,
        t: transform.inverse_slices(&t_hat)?,
        active: active.to_vec(),
        w_hat,
        t_hat,
    })
}

/// Facewise Schur of the leading blocks; `w` is padded with the identity and
/// `t` with zeros outside the active block.
pub(crate) fn schur_slices(k: &[CMat], active: &[usize]) -> (Vec<CMat>, Vec<CMat>) {
    facewise(k.len(), |j| {
        let size = k[j].nrows();
        let a = active[j];
        let block = k[j].view((0, 0), (a, a)).into_owned();
        let (w, t) = linalg::schur(&block);
        let mut w_full = linalg::eye(size);
        w_full.view_mut((0, 0), (a, a)).copy_from(&w);
        (w_full, linalg::pad(&t, size, size))
    })
    .into_iter()
    .unzip()
}

/// SVD of `B_hat C_hat` per slice without forming the product: QR of `B`
/// and of `C^*`, then an SVD of the small triangular product.
pub(crate) fn factored_svd_slices(b: &[CMat], c: &[CMat]) -> Vec<SliceSvd> {
    facewise(b.len(), |j| {
        let (qb, rb) = linalg::qr(&b[j]);
        let (qc, rc) = linalg::qr(&c[j].adjoint());
        let small = &rb * rc.adjoint();
        let inner = linalg::svd(&small);
        let mut u = qb * inner.u;
        let mut v = qc * inner.v;
        linalg::normalize_phases(&mut u, &mut v);
        SliceSvd {
            u,
            sigma: inner.sigma,
            v,
        }
    })
}

/// Star-M SVD of `B * C` computed from the factors.
pub fn factored_to_svd(b: &Tensor3, c: &Tensor3, transform: &Transform) -> Result<TSvdM> {
    let (_, kb, n) = b.shape();
    let (kc, _, n2) = c.shape();
    if kb != kc || n != n2 {
        return Err(Error::dim(format!(
            "factors {:?} and {:?} do not conform",
            b.shape(),
            c.shape()
        )));
    }
    let bh = transform.forward_slices(b)?;
    let ch = transform.forward_slices(c)?;
    TSvdM::from_slices(factored_svd_slices(&bh, &ch), transform, None, None)
}
