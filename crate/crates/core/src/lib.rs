//! Dynamic mode decomposition under the star-M tensor product.
//!
//! Snapshots of a two-dimensional field are stored as the lateral slices of a
//! third-order tensor. A unitary transform `M` applied along the third mode
//! turns the star-M product into independent matrix products on the frontal
//! slices, so every factorization here (QR, SVD, Schur, pseudoinverse) is a
//! loop of small dense factorizations in the transform domain.
//!
//! The crate provides:
//!
//! - [`transform`]: DCT, DST, data-driven and explicit transforms.
//! - [`tensor`] and [`algebra`]: the tensor type and the star-M primitives.
//! - [`decomp`]: facewise QR, SVD, the rank-`k` and energy-`gamma` truncations,
//!   Schur forms and conversion of factored products to SVD form.
//! - [`dmd`]: exact matrix DMD, star-M DMD in both truncation modes, state
//!   reconstruction and storage accounting.
//! - [`streaming`]: single-pass randomized sketches and streaming star-M DMD.
//! - [`datasets`]: synthetic trajectories, snapshot file formats and batching.
//! - [`cli`]: the experiment harness behind the `tdmd` binary.
//!
//! ```
//! use tensor_dmd::datasets::gen_vortex_street;
//! use tensor_dmd::dmd::SnapshotPair;
//! use tensor_dmd::{relative_error, star_m_dmd, Transform, Truncation};
//!
//! # fn main() -> tensor_dmd::Result<()> {
//! let street = gen_vortex_street(64, 40, 99, 3, 0.995, 0);
//! let c = &street.trajectory;
//! let t = Transform::dct(40)?;
//! let pair = SnapshotPair::from_trajectory(c)?;
//! let model = star_m_dmd(&pair.x, &pair.y, &t, Truncation::Energy(0.99999))?;
//! let re = relative_error(c, &model.reconstruct(99)?)?;
//! assert!(re.global < 0.5);
//! # Ok(())
//! # }
//! ```

pub mod algebra;
pub mod cli;
pub mod datasets;
pub mod decomp;
pub mod dmd;
pub mod error;
pub mod linalg;
pub mod streaming;
pub mod tensor;
pub mod transform;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for single frontal slices.
pub type CMat = nalgebra::DMatrix<C64>;

pub use algebra::{conj_transpose, identity_tensor, pinv, star_m, to_structured_matrix};
pub use decomp::{factored_to_svd, tqr, tr_tsvdm, tr_tsvdm2, tschur, tsvdm, TQr, TSchur, TSvdM};
pub use dmd::{exact_dmd, lowrank_dmd, relative_error, star_m_dmd, storage_count, DmdModel, Method, Truncation};
pub use error::{Error, Result};
pub use streaming::{init_sketch, streaming_dmd, update_sketch, SketchState, StreamingOptions};
pub use tensor::{Domain, Tensor3};
pub use transform::{Direction, Transform, TransformKind};
