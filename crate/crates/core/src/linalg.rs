//! Dense kernels applied to individual frontal slices.
//!
//! Every tensor factorization in this crate is a loop of one of these over the
//! transform-domain slices, so the conventions fixed here (singular value
//! order, phase normalization, Schur eigenvalue order) are the conventions of
//! the tensor factorizations too.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::{CMat, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
/// Economy SVD of one slice: `a = u * diag(sigma) * v^*`.
#[derive(Debug, Clone)]
pub struct SliceSvd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

impl SliceSvd {
    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncated(&self, k: usize) -> SliceSvd {
        let k = k.min(self.sigma.len());
        SliceSvd {
            u: self.u.columns(0, k).into_owned(),
            sigma: self.sigma[..k].to_vec(),
            v: self.v.columns(0, k).into_owned(),
        }
    }

    pub fn reconstruct(&self) -> CMat {
        let mut us = self.u.clone();
        for (c, s) in self.sigma.iter().enumerate() {
            us.column_mut(c).scale_mut(*s);
        }
        us * self.v.adjoint()
    }
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    DMatrix::from_element(rows, cols, ZERO)
}

pub fn eye(n: usize) -> CMat {
    DMatrix::identity(n, n)
}

/// Writes `block` into the top-left corner of a `rows x cols` zero matrix.
pub fn pad(block: &CMat, rows: usize, cols: usize) -> CMat {
    let mut out = zeros(rows, cols);
    out.view_mut((0, 0), block.shape()).copy_from(block);
    out
}

/// Thin SVD with singular values sorted non-increasing and each left singular
/// vector scaled so that its largest-modulus entry is real and positive.
pub fn svd(a: &CMat) -> SliceSvd {
    let (m, p) = a.shape();
    let q = m.min(p);
    if q == 0 {
        return SliceSvd {
            u: zeros(m, 0),
            sigma: Vec::new(),
            v: zeros(p, 0),
        };
    }
    let dec = a.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^*");
    let sv = dec.singular_values;

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&x, &y| sv[y].partial_cmp(&sv[x]).unwrap_or(Ordering::Equal).then(x.cmp(&y)));

    let mut out_u = zeros(m, q);
    let mut out_v = zeros(p, q);
    let mut sigma = Vec::with_capacity(q);
    for (dst, &src) in order.iter().enumerate() {
        out_u.set_column(dst, &u.column(src));
        out_v.set_column(dst, &v_t.row(src).adjoint());
        sigma.push(sv[src]);
    }
    normalize_phases(&mut out_u, &mut out_v);
    SliceSvd {
        u: out_u,
        sigma,
        v: out_v,
    }
}

/// Rotates each column pair `(u_c, v_c)` by the same unit phase so that the
/// largest-modulus entry of `u_c` becomes real and positive. The product
/// `u_c v_c^*` is unchanged.
pub fn normalize_phases(u: &mut CMat, v: &mut CMat) {
    for c in 0..u.ncols() {
        let mut best = ZERO;
        let mut best_abs = 0.0;
        for z in u.column(c).iter() {
            let a = z.norm();
            if a > best_abs {
                best_abs = a;
                best = *z;
            }
        }
        if best_abs == 0.0 {
            continue;
        }
        let phase = (best / best_abs).conj();
        u.column_mut(c).apply(|z| *z *= phase);
        v.column_mut(c).apply(|z| *z *= phase);
        // Pin the pivot exactly onto the real axis.
        if let Some(z) = u.column_mut(c).iter_mut().find(|z| z.norm() == best_abs) {
            *z = C64::new(z.norm(), 0.0);
        }
    }
}

/// Default relative cutoff for pseudoinverses of an `m x p` slice.
pub fn default_pinv_tol(m: usize, p: usize) -> f64 {
    m.max(p) as f64 * f64::EPSILON
}

/// Moore-Penrose inverse; singular values `<= tol * sigma_max` count as zero.
pub fn pinv(a: &CMat, tol: f64) -> CMat {
    let (m, p) = a.shape();
    let dec = svd(a);
    let cutoff = tol * dec.sigma.first().copied().unwrap_or(0.0);
    let mut out = zeros(p, m);
    for (c, &s) in dec.sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (dec.v.column(c) * dec.u.column(c).adjoint()).scale(1.0 / s);
        }
    }
    out
}

/// Inverts singular values above the relative cutoff, zeroing the rest.
pub fn invert_singular_values(sigma: &[f64], tol: f64) -> Vec<f64> {
    let cutoff = tol * sigma.first().copied().unwrap_or(0.0);
    sigma
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect()
}

/// Thin QR with the diagonal of `r` real and non-negative.
pub fn qr(a: &CMat) -> (CMat, CMat) {
    let (m, p) = a.shape();
    let q_dim = m.min(p);
    if q_dim == 0 {
        return (zeros(m, 0), zeros(0, p));
    }
    let dec = a.clone().qr();
    let mut q = dec.q();
    let mut r = dec.r();
    for i in 0..q_dim {
        let d = r[(i, i)];
        let a = d.norm();
        if a > 0.0 {
            let phase = d / a;
            r.row_mut(i).apply(|z| *z *= phase.conj());
            q.column_mut(i).apply(|z| *z *= phase);
            r[(i, i)] = C64::new(a, 0.0);
        }
    }
    (q, r)
}

/// Complex Schur form `a = w * t * w^*` with `t` upper triangular and its
/// diagonal in canonical order (see [`eigen_order`]).
pub fn schur(a: &CMat) -> (CMat, CMat) {
    let k = a.nrows();
    assert_eq!(k, a.ncols(), "Schur form needs a square matrix");
    if k == 0 {
        return (zeros(0, 0), zeros(0, 0));
    }
    if k == 1 {
        return (eye(1), a.clone());
    }
    let (mut w, mut t) = match nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100 * k) {
        Some(s) => s.unpack(),
        None => shifted_qr_schur(a),
    };
    for c in 0..k {
        for r in c + 1..k {
            t[(r, c)] = ZERO;
        }
    }
    sort_schur(&mut w, &mut t);
    (w, t)
}

/// Hessenberg reduction followed by single-shift QR sweeps. Used when the
/// library routine stalls, which happens on slices with clustered eigenvalues.
fn shifted_qr_schur(a: &CMat) -> (CMat, CMat) {
    let k = a.nrows();
    let (mut w, mut h) = nalgebra::linalg::Hessenberg::new(a.clone()).unpack();
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let mut hi = k - 1;
    let mut stalled = 0usize;
    while hi > 0 {
        let mut lo = 0;
        for l in (1..=hi).rev() {
            let local = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            let local = if local == 0.0 { scale } else { local };
            if h[(l, l - 1)].norm() <= f64::EPSILON * local {
                h[(l, l - 1)] = ZERO;
                lo = l;
                break;
            }
        }
        if lo == hi {
            hi -= 1;
            stalled = 0;
            continue;
        }
        stalled += 1;
        let d = h[(hi, hi)];
        let mu = if stalled.is_multiple_of(11) {
            d + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], d)
        };
        qr_sweep(&mut w, &mut h, lo, hi, mu);
    }
    (w, h)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let (m1, m2) = ((a + d) * 0.5 + disc, (a + d) * 0.5 - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// One explicit shifted QR step on the active window `lo..=hi`.
fn qr_sweep(w: &mut CMat, h: &mut CMat, lo: usize, hi: usize, mu: C64) {
    let k = h.nrows();
    for i in lo..=hi {
        h[(i, i)] -= mu;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for j in lo..hi {
        let (x, y) = (h[(j, j)], h[(j + 1, j)]);
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (C64::new(1.0, 0.0), ZERO) } else { (x / r, y / r) };
        for col in j..k {
            let (u, v) = (h[(j, col)], h[(j + 1, col)]);
            h[(j, col)] = c.conj() * u + s.conj() * v;
            h[(j + 1, col)] = -s * u + c * v;
        }
        rotations.push((c, s));
    }
    for (j, (c, s)) in (lo..hi).zip(rotations) {
        let rows = (j + 2).min(hi + 1);
        for row in 0..rows {
            let (u, v) = (h[(row, j)], h[(row, j + 1)]);
            h[(row, j)] = u * c + v * s;
            h[(row, j + 1)] = -u * s.conj() + v * c.conj();
        }
        for row in 0..k {
            let (u, v) = (w[(row, j)], w[(row, j + 1)]);
            w[(row, j)] = u * c + v * s;
            w[(row, j + 1)] = -u * s.conj() + v * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += mu;
    }
}

/// Canonical eigenvalue order: descending modulus, then descending real part,
/// then descending imaginary part. Moduli within a relative `1e-12` count as
/// equal so that conjugate pairs order by their imaginary parts.
pub fn eigen_order(a: &C64, b: &C64) -> Ordering {
    let scale = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    let tie = 1e-12 * scale;
    if (a.norm() - b.norm()).abs() > tie {
        return b.norm().partial_cmp(&a.norm()).unwrap_or(Ordering::Equal);
    }
    if (a.re - b.re).abs() > tie {
        return b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal);
    }
    if (a.im - b.im).abs() > tie {
        return b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal);
    }
    Ordering::Equal
}

/// Bubble-sorts the Schur diagonal into canonical order with unitary
/// adjacent swaps.
fn sort_schur(w: &mut CMat, t: &mut CMat) {
    let k = t.nrows();
    for pass in 0..k {
        let mut swapped = false;
        for i in 0..k - 1 - pass {
            if eigen_order(&t[(i + 1, i + 1)], &t[(i, i)]) == Ordering::Less {
                swap_adjacent(w, t, i);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

/// Exchanges diagonal entries `i` and `i + 1` of the triangular factor.
fn swap_adjacent(w: &mut CMat, t: &mut CMat, i: usize) {
    let k = t.nrows();
    let t11 = t[(i, i)];
    let t12 = t[(i, i + 1)];
    let t22 = t[(i + 1, i + 1)];
    // x spans the eigenvector of the 2x2 block belonging to t22.
    let x1 = t12;
    let x2 = t22 - t11;
    let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (c1, c2) = (x1 / nrm, x2 / nrm);
    // Columns of the 2x2 unitary g: [c1, c2]^T and [-conj(c2), conj(c1)]^T.
    let g = [[c1, -c2.conj()], [c2, c1.conj()]];

    // t <- t * g on columns i, i+1.
    for r in 0..k {
        let a = t[(r, i)];
        let b = t[(r, i + 1)];
        t[(r, i)] = a * g[0][0] + b * g[1][0];
        t[(r, i + 1)] = a * g[0][1] + b * g[1][1];
    }
    // t <- g^* * t on rows i, i+1.
    for c in 0..k {
        let a = t[(i, c)];
        let b = t[(i + 1, c)];
        t[(i, c)] = g[0][0].conj() * a + g[1][0].conj() * b;
        t[(i + 1, c)] = g[0][1].conj() * a + g[1][1].conj() * b;
    }
    for r in 0..w.nrows() {
        let a = w[(r, i)];
        let b = w[(r, i + 1)];
        w[(r, i)] = a * g[0][0] + b * g[1][0];
        w[(r, i + 1)] = a * g[0][1] + b * g[1][1];
    }
    t[(i + 1, i)] = ZERO;
    t[(i, i)] = t22;
    t[(i + 1, i + 1)] = t11;
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Diagonal matrix from real values.
pub fn real_diag(values: &[f64]) -> CMat {
    let mut out = zeros(values.len(), values.len());
    for (i, &v) in values.iter().enumerate() {
        out[(i, i)] = C64::new(v, 0.0);
    }
    out
}
