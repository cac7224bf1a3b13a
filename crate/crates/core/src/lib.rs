//! Director field analysis for orientation distribution function (ODF) and
//! diffusion tensor volumes.
//!
//! The crate covers the director algebra (means, differences, rotation
//! transport), real even-order spherical harmonics, orientational order and
//! dispersion indices, per-voxel orthogonal frames, the splay/bend/twist
//! distortion indices, tensor-field gradient tools, synthetic test fields and
//! NIfTI-1 volume I/O.

pub mod director;
pub mod distortion;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod nifti;
pub mod order;
pub mod pipeline;
pub mod quadrature;
pub mod special;
pub mod sphere;
pub mod synth;
pub mod tfa;
pub mod volume;

pub use error::{DfaError, Result};
pub use linalg::{Mat3, Vec3};
