//! Single-pass randomized sketching and streaming star-M DMD.
//!
//! The snapshot tensor `C = C_1 + ... + C_b` arrives in batches with disjoint
//! lateral supports. Two linear sketches `Y1 = C * G1` and `Y2 = G2 * C` are
//! accumulated batch by batch; after any batch a low-rank approximation
//! `C ~ Q1 * (G2 * Q1)^+ * Y2` (with `Y1 = Q1 * R`) is available, which is
//! then truncated by energy and handed to the low-rank DMD.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::facewise;
use crate::decomp::{svd_slices, truncate_energy, TSvdM};
use crate::dmd::{lowrank_dmd_slices, DmdModel};
use crate::error::{Error, Result};
use crate::linalg::{self, SliceSvd};
use crate::tensor::Tensor3;
use crate::transform::Transform;
use crate::{CMat, C64};

const G1_STREAM: u64 = 1;
const G2_STREAM: u64 = 2;

/// Random tensor whose transform-domain slices all equal one real standard
/// Gaussian matrix.
#[derive(Debug, Clone)]
pub struct GaussianTensor {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub base: DMatrix<f64>,
    pub tensor: Tensor3,
    base_complex: CMat,
}

impl GaussianTensor {
    /// Draws `rows x cols` i.i.d. N(0, 1) entries (column-major) from
    /// substream `stream` of the seeded ChaCha generator.
    pub fn new(rows: usize, cols: usize, seed: u64, stream: u64, transform: &Transform) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let base = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng));
        let base_complex = base.map(|v: f64| C64::new(v, 0.0));
        let tensor = transform.inverse_slices(&vec![base_complex.clone(); transform.size()])?;
        Ok(GaussianTensor {
            rows,
            cols,
            seed,
            base,
            tensor,
            base_complex,
        })
    }

    /// The common transform-domain slice.
    pub fn slice(&self) -> &CMat {
        &self.base_complex
    }
}

/// Accumulated sketches of a streamed snapshot tensor.
#[derive(Debug, Clone)]
pub struct SketchState {
    pub g1: GaussianTensor,
    pub g2: GaussianTensor,
    pub rho1: usize,
    pub rho2: usize,
    pub batches_seen: usize,
    transform: Transform,
    shape: (usize, usize, usize),
    y1_hat: Vec<CMat>,
    y2_hat: Vec<CMat>,
    /// One past the last lateral index with data.
    observed: usize,
}

impl SketchState {
    /// Sketch sizes `rho1 = rho_max`, `rho2 = 2 rho1 + 1`; `G1` and `G2`
    /// come from independent substreams of `seed`.
    pub fn new(m: usize, p: usize, n: usize, rho_max: usize, transform: &Transform, seed: u64) -> Result<Self> {
        if rho_max == 0 || rho_max > m.min(p) {
            return Err(Error::InvalidParameter(format!(
                "rho_max = {rho_max} must lie in 1..={}",
                m.min(p)
            )));
        }
        if transform.size() != n {
            return Err(Error::InvalidTransform {
                expected: transform.size(),
                found: n,
            });
        }
        let rho1 = rho_max;
        let rho2 = 2 * rho1 + 1;
        let g1 = GaussianTensor::new(p, rho1, seed, G1_STREAM, transform)?;
        let g2 = GaussianTensor::new(rho2, m, seed, G2_STREAM, transform)?;
        Ok(SketchState {
            g1,
            g2,
            rho1,
            rho2,
            batches_seen: 0,
            transform: transform.clone(),
            shape: (m, p, n),
            y1_hat: vec![linalg::zeros(m, rho1); n],
            y2_hat: vec![linalg::zeros(rho2, p); n],
            observed: 0,
        })
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// Folds one batch into both sketches. The batch can be dropped afterwards.
    pub fn update(&mut self, batch: &Tensor3) -> Result<()> {
        if batch.shape() != self.shape {
            return Err(Error::dim(format!(
                "batch shape {:?} does not match the stream shape {:?}",
                batch.shape(),
                self.shape
            )));
        }
        let ch = self.transform.forward_slices(batch)?;
        let g1 = self.g1.slice();
        let g2 = self.g2.slice();
        let d1: Vec<CMat> = facewise(ch.len(), |j| &ch[j] * g1);
        let d2: Vec<CMat> = facewise(ch.len(), |j| g2 * &ch[j]);
        for (y, d) in self.y1_hat.iter_mut().zip(d1) {
            *y += d;
        }
        for (y, d) in self.y2_hat.iter_mut().zip(d2) {
            *y += d;
        }
        if let Some(last) = (0..batch.cols()).rev().find(|&j| batch.lateral_norm(j) > 0.0) {
            self.observed = self.observed.max(last + 1);
        }
        self.batches_seen += 1;
        Ok(())
    }

    pub fn y1(&self) -> Result<Tensor3> {
        self.transform.inverse_slices(&self.y1_hat)
    }

    pub fn y2(&self) -> Result<Tensor3> {
        self.transform.inverse_slices(&self.y2_hat)
    }

    /// Number of snapshots covered so far (one past the last nonzero one).
    pub fn observed(&self) -> usize {
        self.observed
    }

    /// Floating point numbers held by the sketches and the random matrices.
    pub fn storage_flns(&self) -> (u64, u64) {
        let (m, p, n) = self.shape;
        let sketches = n * (m * self.rho1 + p * self.rho2);
        let random = p * self.rho1 + m * self.rho2;
        (sketches as u64, random as u64)
    }

    /// Per-slice `(Q1, B)` with `C_hat ~ Q1 B`.
    fn factors(&self) -> Result<(Vec<CMat>, Vec<CMat>)> {
        if self.y1_hat.iter().all(|y| linalg::max_abs(y) == 0.0) && self.y2_hat.iter().all(|y| linalg::max_abs(y) == 0.0) {
            return Err(Error::DegenerateInput("sketches are all zero".into()));
        }
        let g2 = self.g2.slice();
        let pairs: Vec<(CMat, CMat)> = facewise(self.y1_hat.len(), |j| {
            let (q, _) = linalg::qr(&self.y1_hat[j]);
            let core = g2 * &q;
            let inv = linalg::pinv(&core, linalg::default_pinv_tol(core.nrows(), core.ncols()));
            let b = inv * &self.y2_hat[j];
            (q, b)
        });
        Ok(pairs.into_iter().unzip())
    }

    /// The untruncated sketch approximation `Q1 * B` of everything seen so far.
    pub fn approximation(&self) -> Result<Tensor3> {
        let (q, b) = self.factors()?;
        let prod: Vec<CMat> = q.iter().zip(&b).map(|(q, b)| q * b).collect();
        self.transform.inverse_slices(&prod)
    }

    fn lowrank_slices(&self, gamma: f64) -> Result<Vec<SliceSvd>> {
        let (q, b) = self.factors()?;
        let (kept, _) = truncate_energy(svd_slices(&b), gamma)?;
        Ok(kept
            .into_iter()
            .zip(&q)
            .map(|(s, q)| {
                let mut u = q * s.u;
                let mut v = s.v;
                linalg::normalize_phases(&mut u, &mut v);
                SliceSvd { u, sigma: s.sigma, v }
            })
            .collect())
    }

    /// Energy-truncated star-M SVD `U * S * V^*` of the sketched data.
    pub fn reconstruct_lowrank(&self, gamma: f64) -> Result<TSvdM> {
        let slices = self.lowrank_slices(gamma)?;
        TSvdM::from_slices(slices, &self.transform, Some(gamma), None)
    }

    /// DMD model of the snapshots seen so far.
    pub fn dmd(&self, gamma: f64) -> Result<DmdModel> {
        let slices = self.lowrank_slices(gamma)?;
        lowrank_dmd_slices(&slices, &self.transform, Some(self.observed))
    }
}

/// Fresh zero sketches; see [`SketchState::new`].
pub fn init_sketch(m: usize, p: usize, n: usize, rho_max: usize, transform: &Transform, seed: u64) -> Result<SketchState> {
    SketchState::new(m, p, n, rho_max, transform, seed)
}

/// Folds `batch` into `state`; see [`SketchState::update`].
pub fn update_sketch(mut state: SketchState, batch: &Tensor3) -> Result<SketchState> {
    state.update(batch)?;
    Ok(state)
}

/// Model produced after one batch.
#[derive(Debug, Clone)]
pub struct BatchModel {
    pub batch: usize,
    /// Snapshots covered when this model was fitted.
    pub observed: usize,
    pub model: DmdModel,
}

#[derive(Debug, Clone)]
pub struct StreamingResult {
    pub model: DmdModel,
    /// Present when intermediates were requested, one per batch.
    pub intermediates: Vec<BatchModel>,
    pub sketch: SketchState,
}

#[derive(Debug, Clone)]
pub struct StreamingOptions {
    pub rho_max: usize,
    pub gamma: f64,
    pub seed: u64,
    pub keep_intermediates: bool,
}

/// Streams `batches` through the sketches, fitting a DMD model after each
/// batch when intermediates are requested and after the last one otherwise.
pub fn streaming_dmd(batches: &[Tensor3], transform: &Transform, options: &StreamingOptions) -> Result<StreamingResult> {
    let first = batches
        .first()
        .ok_or_else(|| Error::InsufficientData("no batches given".into()))?;
    let (m, p, n) = first.shape();
    let mut sketch = SketchState::new(m, p, n, options.rho_max, transform, options.seed)?;
    let mut intermediates = Vec::new();
    for (b, batch) in batches.iter().enumerate() {
        sketch.update(batch)?;
        if options.keep_intermediates {
            intermediates.push(BatchModel {
                batch: b,
                observed: sketch.observed(),
                model: sketch.dmd(options.gamma)?,
            });
        }
    }
    let model = match intermediates.last() {
        Some(last) => last.model.clone(),
        None => sketch.dmd(options.gamma)?,
    };
    Ok(StreamingResult {
        model,
        intermediates,
        sketch,
    })
}
