//! Exact matrix DMD and the two star-M DMD variants.
//!
//! All three produce a [`DmdModel`]: modes `Z`, a facewise upper-triangular
//! tensor `T` whose diagonals are the DMD eigenvalues, and amplitudes `G`, so
//! that state `t` is approximated by `Z * T^t * G`. Matrix DMD is the special
//! case `n = 1`, `M = [1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{facewise, to_structured_matrix};
use crate::decomp::{schur_slices, svd_slices, truncate_energy};
use crate::error::{Error, Result};
use crate::linalg::{self, SliceSvd};
use crate::tensor::{Domain, Tensor3};
use crate::transform::Transform;
use crate::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Exact matrix DMD on the unfolded snapshots.
    #[serde(rename = "dmd")]
    Dmd,
    /// Star-M DMD with a uniform rank per slice.
    #[serde(rename = "starm_dmd")]
    StarMDmd,
    /// Star-M DMD with energy-based per-slice ranks.
    #[serde(rename = "starm_dmd2")]
    StarMDmdII,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dmd => "dmd",
            Method::StarMDmd => "starm_dmd",
            Method::StarMDmdII => "starm_dmd2",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dmd" => Ok(Method::Dmd),
            "starm_dmd" => Ok(Method::StarMDmd),
            "starm_dmd2" => Ok(Method::StarMDmdII),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?} (expected dmd, starm_dmd or starm_dmd2)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Rank(usize),
    Energy(f64),
}

/// Snapshot tensors `X = [x_0 .. x_{T-1}]` and `Y = [x_1 .. x_T]`.
#[derive(Debug, Clone)]
pub struct SnapshotPair {
    pub x: Tensor3,
    pub y: Tensor3,
}

impl SnapshotPair {
    /// Splits an `m x (T + 1) x n` trajectory into its one-step shift pair.
    pub fn from_trajectory(c: &Tensor3) -> Result<Self> {
        let p = c.cols();
        if p < 2 {
            return Err(Error::InsufficientData(format!(
                "a trajectory needs at least 2 snapshots, got {p}"
            )));
        }
        Ok(SnapshotPair {
            x: c.lateral_range(0, p - 1),
            y: c.lateral_range(1, p),
        })
    }
}

#[derive(Debug, Clone)]
pub struct DmdModel {
    pub method: Method,
    /// Modes `Z`, `m x k x n`.
    pub modes: Tensor3,
    /// Facewise upper-triangular `T`, `k x k x n`.
    pub eigen: Tensor3,
    /// Amplitudes `G`, `k x 1 x n`.
    pub amplitudes: Tensor3,
    pub multirank: Vec<usize>,
    pub storage_flns: u64,
    transform: Transform,
    z_hat: Vec<CMat>,
    t_hat: Vec<CMat>,
    g_hat: Vec<CMat>,
}

impl DmdModel {
    /// Builds a model from per-slice factors truncated to each slice's rank.
    fn from_slices(
        method: Method,
        transform: &Transform,
        z_hat: Vec<CMat>,
        t_hat: Vec<CMat>,
        g_hat: Vec<CMat>,
        width: usize,
    ) -> Result<Self> {
        let m = z_hat[0].nrows();
        let n = transform.size();
        let multirank: Vec<usize> = z_hat.iter().map(|z| z.ncols()).collect();
        let pz: Vec<CMat> = z_hat.iter().map(|z| linalg::pad(z, m, width)).collect();
        let pt: Vec<CMat> = t_hat.iter().map(|t| linalg::pad(t, width, width)).collect();
        let pg: Vec<CMat> = g_hat.iter().map(|g| linalg::pad(g, width, 1)).collect();
        let size = match method {
            Method::Dmd => ModelSize::Dmd { k: width },
            Method::StarMDmd => ModelSize::StarMDmd { k: width },
            Method::StarMDmdII => ModelSize::StarMDmdII {
                multirank: &multirank,
            },
        };
        let storage_flns = storage_count(size, m, n, transform.storage_cost());
        Ok(DmdModel {
            method,
            modes: transform.inverse_slices(&pz)?,
            eigen: transform.inverse_slices(&pt)?,
            amplitudes: transform.inverse_slices(&pg)?,
            multirank,
            storage_flns,
            transform: transform.clone(),
            z_hat,
            t_hat,
            g_hat,
        })
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// Width `k` of the padded standard-domain factors.
    pub fn rank(&self) -> usize {
        self.modes.cols()
    }

    /// Transform-domain modes of each slice (`m x k_j`).
    pub fn z_hat(&self) -> &[CMat] {
        &self.z_hat
    }

    /// Transform-domain triangular factors of each slice (`k_j x k_j`).
    pub fn t_hat(&self) -> &[CMat] {
        &self.t_hat
    }

    pub fn g_hat(&self) -> &[CMat] {
        &self.g_hat
    }

    /// DMD eigenvalues of each slice in canonical Schur order.
    pub fn eigenvalues(&self) -> Vec<Vec<C64>> {
        self.t_hat
            .iter()
            .map(|t| (0..t.nrows()).map(|i| t[(i, i)]).collect())
            .collect()
    }

    /// Lateral slice `t` is `Z * T^t * G`, for `t = 0..=t_max`.
    pub fn reconstruct(&self, t_max: usize) -> Result<Tensor3> {
        let m = self.modes.rows();
        let steps = t_max + 1;
        let slices: Vec<CMat> = facewise(self.z_hat.len(), |j| {
            let z = &self.z_hat[j];
            let t = &self.t_hat[j];
            let mut out = linalg::zeros(m, steps);
            if z.ncols() == 0 {
                return out;
            }
            let mut g = self.g_hat[j].clone();
            for step in 0..steps {
                out.set_column(step, &(z * &g).column(0));
                g = t * g;
            }
            out
        });
        self.transform.inverse_slices(&slices)
    }

    /// The fitted operator `Z * T * Z^*` as an `mn x mn` matrix.
    pub fn operator_matrix(&self) -> Result<CMat> {
        let slices: Vec<CMat> = self
            .z_hat
            .iter()
            .zip(&self.t_hat)
            .map(|(z, t)| z * t * z.adjoint())
            .collect();
        let op = self.transform.inverse_slices(&slices)?;
        to_structured_matrix(&op, &self.transform)
    }
}

/// Per-slice Galerkin operator, Schur form, modes and amplitudes.
///
/// `basis[j]` is `m x k_j` with orthonormal columns and `k[j]` is
/// `k_j x k_j`; `x0[j]` is the transform-domain initial state.
fn assemble(
    method: Method,
    transform: &Transform,
    basis: Vec<CMat>,
    k: Vec<CMat>,
    x0: &[CMat],
    width: usize,
) -> Result<DmdModel> {
    let active: Vec<usize> = k.iter().map(|s| s.nrows()).collect();
    let (w, t) = schur_slices(&k, &active);
    let z: Vec<CMat> = facewise(basis.len(), |j| &basis[j] * &w[j]);
    let g: Vec<CMat> = facewise(z.len(), |j| z[j].adjoint() * &x0[j]);
    DmdModel::from_slices(method, transform, z, t, g, width)
}

/// Exact DMD on snapshot matrices, with a Schur form in place of the
/// eigendecomposition.
pub fn exact_dmd(x: &CMat, y: &CMat, k: usize) -> Result<DmdModel> {
    if x.shape() != y.shape() {
        return Err(Error::dim(format!(
            "snapshot matrices differ in shape: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let (rows, cols) = x.shape();
    let max = rows.min(cols);
    if k == 0 || k > max {
        return Err(Error::InvalidRank { rank: k, max });
    }
    let dec = linalg::svd(x);
    let tol = linalg::default_pinv_tol(rows, cols) * dec.sigma[0];
    for (index, &value) in dec.sigma[..k].iter().enumerate() {
        if value <= tol || value == 0.0 {
            return Err(Error::RankDeficient {
                index,
                value,
                tolerance: tol,
            });
        }
    }
    let kept = dec.truncated(k);
    let inv: Vec<f64> = kept.sigma.iter().map(|s| 1.0 / s).collect();
    let op = galerkin(&kept, y, &inv);
    let transform = Transform::identity(1)?;
    let x0 = x.columns(0, 1).into_owned();
    assemble(Method::Dmd, &transform, vec![kept.u], vec![op], &[x0], k)
}

/// `U^* Y V diag(inv_sigma)`.
fn galerkin(svd: &SliceSvd, y: &CMat, inv_sigma: &[f64]) -> CMat {
    let mut v = svd.v.clone();
    for (c, s) in inv_sigma.iter().enumerate() {
        v.column_mut(c).scale_mut(*s);
    }
    svd.u.adjoint() * y * v
}

/// Star-M DMD: rank truncation gives the uniform variant, energy truncation
/// the per-slice variant.
pub fn star_m_dmd(x: &Tensor3, y: &Tensor3, transform: &Transform, truncation: Truncation) -> Result<DmdModel> {
    if x.shape() != y.shape() {
        return Err(Error::dim(format!(
            "snapshot tensors differ in shape: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    transform.check(x)?;
    if x.is_zero() {
        return Err(Error::DegenerateInput("snapshot tensor X is all zero".into()));
    }
    let (m, p, _) = x.shape();
    let xh = transform.forward_slices(x)?;
    let yh = transform.forward_slices(y)?;
    let full = svd_slices(&xh);
    let (method, kept, width) = match truncation {
        Truncation::Rank(k) => {
            let max = m.min(p);
            if k == 0 || k > max {
                return Err(Error::InvalidRank { rank: k, max });
            }
            let kept: Vec<SliceSvd> = full.iter().map(|s| s.truncated(k)).collect();
            (Method::StarMDmd, kept, k)
        }
        Truncation::Energy(gamma) => {
            let (kept, ranks) = truncate_energy(full, gamma)?;
            let width = ranks.iter().copied().max().unwrap_or(0);
            (Method::StarMDmdII, kept, width)
        }
    };
    let tol = linalg::default_pinv_tol(m, p);
    let k: Vec<CMat> = facewise(kept.len(), |j| {
        let inv = linalg::invert_singular_values(&kept[j].sigma, tol);
        galerkin(&kept[j], &yh[j], &inv)
    });
    let x0: Vec<CMat> = xh.iter().map(|s| s.columns(0, 1).into_owned()).collect();
    let basis = kept.into_iter().map(|s| s.u).collect();
    assemble(method, transform, basis, k, &x0, width)
}

/// Star-M DMD from a low-rank factorization `C ~ U * S * V^*` of the full
/// trajectory, without forming `X` or `Y`.
pub fn lowrank_dmd(factors: &crate::decomp::TSvdM, transform: &Transform) -> Result<DmdModel> {
    lowrank_dmd_slices(factors.slices(), transform, None)
}

/// As [`lowrank_dmd`], on transform-domain factors, optionally using only
/// the first `observed` snapshots.
pub(crate) fn lowrank_dmd_slices(
    factors: &[SliceSvd],
    transform: &Transform,
    observed: Option<usize>,
) -> Result<DmdModel> {
    let p = observed.unwrap_or_else(|| factors[0].cols());
    if p < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 snapshots in V^*, got {p}"
        )));
    }
    let m = factors[0].rows();
    let parts: Vec<(CMat, CMat, CMat)> = facewise(factors.len(), |j| {
        let f = &factors[j];
        let kj = f.sigma.len();
        // S V^* restricted to the observed snapshots, k_j x p.
        let mut sv = f.v.rows(0, p).adjoint();
        for r in 0..kj {
            sv.row_mut(r).scale_mut(f.sigma[r]);
        }
        let b_prev = sv.columns(0, p - 1).into_owned();
        let b_next = sv.columns(1, p - 1).into_owned();
        // Thin SVD of S B' = U~ S' V'^* from the factored pair (I, S B').
        let inner = crate::decomp::factored_svd_slices(&[linalg::eye(kj)], &[b_prev])
            .pop()
            .expect("one slice");
        let u_prime = &f.u * &inner.u;
        let tol = linalg::default_pinv_tol(m, p - 1);
        let inv = linalg::invert_singular_values(&inner.sigma, tol);
        let mut v_scaled = inner.v.clone();
        for (c, s) in inv.iter().enumerate() {
            v_scaled.column_mut(c).scale_mut(*s);
        }
        // K = U'^* U S B'' V' S'^+ = U~^* (S B'') V' S'^+ since U is orthonormal.
        let k = inner.u.adjoint() * b_next * v_scaled;
        let x0 = &f.u * sv.columns(0, 1);
        (u_prime, k, x0)
    });
    let mut basis = Vec::with_capacity(parts.len());
    let mut ops = Vec::with_capacity(parts.len());
    let mut x0 = Vec::with_capacity(parts.len());
    for (u, k, x) in parts {
        basis.push(u);
        ops.push(k);
        x0.push(x);
    }
    let width = basis.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let method = if transform.size() == 1 { Method::Dmd } else { Method::StarMDmdII };
    assemble(method, transform, basis, ops, &x0, width)
}

/// Global and per-snapshot relative errors of `approx` against `truth`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeError {
    pub global: f64,
    pub statewise: Vec<f64>,
}

pub fn relative_error(truth: &Tensor3, approx: &Tensor3) -> Result<RelativeError> {
    let diff = truth.sub(approx)?;
    let norm = truth.norm_fro();
    let global = ratio(diff.norm_fro(), norm);
    let statewise = (0..truth.cols())
        .map(|j| ratio(diff.lateral_norm(j), truth.lateral_norm(j)))
        .collect();
    Ok(RelativeError { global, statewise })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Model size for storage accounting.
#[derive(Debug, Clone, Copy)]
pub enum ModelSize<'a> {
    Dmd { k: usize },
    StarMDmd { k: usize },
    StarMDmdII { multirank: &'a [usize] },
}

/// Stored floating point numbers for each method:
///
/// | method      | flns                                               |
/// |-------------|----------------------------------------------------|
/// | DMD         | `mnk + k(k+1)/2`                                   |
/// | star-M DMD  | `mnk + nk(k+1)/2 + nk + st(M)`                     |
/// | star-M DMDII| `m sum k_j + sum (k_j(k_j+1)/2 + k_j) + st(M)`     |
pub fn storage_count(size: ModelSize<'_>, m: usize, n: usize, st_m: usize) -> u64 {
    let (m, n, st_m) = (m as u64, n as u64, st_m as u64);
    let tri = |k: u64| k * (k + 1) / 2;
    match size {
        ModelSize::Dmd { k } => {
            let k = k as u64;
            m * n * k + tri(k)
        }
        ModelSize::StarMDmd { k } => {
            let k = k as u64;
            m * n * k + n * tri(k) + n * k + st_m
        }
        ModelSize::StarMDmdII { multirank } => {
            let per_slice: u64 = multirank.iter().map(|&k| m * k as u64 + tri(k as u64) + k as u64).sum();
            per_slice + st_m
        }
    }
}

/// Result of matching a storage budget with a uniform rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EqualizedRank {
    pub k: usize,
    /// Set when even `k = 1` exceeds the budget.
    pub over_budget: bool,
}

/// Largest `k >= 1` whose storage for `method` fits in `target`.
pub fn equalized_rank(target: u64, method: Method, m: usize, n: usize, st_m: usize) -> Result<EqualizedRank> {
    let cost = |k: usize| match method {
        Method::Dmd => Ok(storage_count(ModelSize::Dmd { k }, m, n, st_m)),
        Method::StarMDmd => Ok(storage_count(ModelSize::StarMDmd { k }, m, n, st_m)),
        Method::StarMDmdII => Err(Error::InvalidParameter(
            "equalized ranks are defined for uniform-rank methods only".into(),
        )),
    };
    if cost(1)? > target {
        return Ok(EqualizedRank { k: 1, over_budget: true });
    }
    let mut hi = 2usize;
    while cost(hi)? <= target {
        hi *= 2;
    }
    // Invariant: cost(lo) <= target < cost(hi).
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if cost(mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EqualizedRank { k: lo, over_budget: false })
}

/// Default cap on `mn` for [`alt_opt_minimizer`].
pub const ALT_OPT_CAP: usize = 512;

/// Closest operator in the star-M structured subspace to `Y pinv(X)` in the
/// Frobenius norm, as an `mn x mn` matrix. Forms a dense pseudoinverse, so
/// only small problems are accepted.
pub fn alt_opt_minimizer(x: &Tensor3, y: &Tensor3, transform: &Transform) -> Result<CMat> {
    alt_opt_minimizer_with_cap(x, y, transform, ALT_OPT_CAP)
}

pub fn alt_opt_minimizer_with_cap(x: &Tensor3, y: &Tensor3, transform: &Transform, cap: usize) -> Result<CMat> {
    if x.shape() != y.shape() {
        return Err(Error::dim("X and Y differ in shape"));
    }
    let (m, p, n) = x.shape();
    if m * n > cap {
        return Err(Error::SizeLimit { size: m * n, cap });
    }
    let xh = transform.forward(x)?;
    let yh = transform.forward_slices(y)?;
    let unfolded = xh.unfold();
    let inv = linalg::pinv(&unfolded, linalg::default_pinv_tol(m * n, p));
    let g_hat: Vec<CMat> = (0..n)
        .map(|i| &yh[i] * inv.columns(i * m, m))
        .collect();
    let g = transform.inverse_slices(&g_hat)?;
    to_structured_matrix(&g, transform)
}

/// Standard-domain trajectory as a matrix model input: `unfold(C)`.
pub fn unfold_trajectory(c: &Tensor3) -> CMat {
    c.unfold()
}

/// Reshapes a matrix-DMD reconstruction (`mn x 1` tubes) back to `m x p x n`.
pub fn fold_matrix_reconstruction(recon: &Tensor3, m: usize, n: usize) -> Result<Tensor3> {
    Ok(Tensor3::fold(&recon.unfold(), m, n)?.with_domain(Domain::Standard))
}
