//! Even-order real spherical harmonics, ODF fitting and peak extraction.

mod basis;
mod fit;
mod mesh;
mod peaks;
mod tensor;

pub use basis::{gfa, num_coeffs, sh_basis, sh_index, sh_row, ShCoefficients};
pub use fit::{projector, resampling_fitter, rotate_sh, sh_eval, sh_fit, ShFit, ShFitter, ShProjector};
pub use mesh::SphereMesh;
pub use peaks::{detect_peaks, PeakDetector, PeakParams};
pub use tensor::{fractional_anisotropy, tensor_mode, tensor_odf, tensor_odf_sh, SpdTensor};

use crate::director::WeightedDirector;
use crate::error::Result;
use crate::volume::Volume;

/// Default SH band limit.
pub const DEFAULT_ORDER: usize = 8;

pub type ShVolume = Volume<ShCoefficients>;
pub type TensorVolume = Volume<SpdTensor>;

/// Per-voxel peaks, sorted by descending weight (first = principal).
pub type PeakField = Volume<Vec<WeightedDirector>>;

/// Peaks of every voxel of an SH volume.
pub fn peak_field(volume: &ShVolume, mesh: &SphereMesh, params: &PeakParams) -> PeakField {
    let order = volume.data().first().map_or(DEFAULT_ORDER, |c| c.max_order());
    let detector = PeakDetector::new(mesh.clone(), order);
    volume.map(|c| detector.detect(c, params))
}

/// SH ODF volume of a tensor field.
pub fn tensor_field_odf(tensors: &TensorVolume, max_order: usize) -> Result<ShVolume> {
    let coeffs: Result<Vec<ShCoefficients>> = {
        use rayon::prelude::*;
        tensors.data().par_iter().map(|d| tensor_odf_sh(d, max_order)).collect()
    };
    tensors.with_data(coeffs?)
}

/// Principal-axis peaks read directly from a tensor field, weighted by the
/// ODF value along the axis.
pub fn tensor_peak_field(tensors: &TensorVolume) -> PeakField {
    tensors.map(|d| vec![d.principal_peak().canonical()])
}
