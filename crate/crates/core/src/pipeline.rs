//! End-to-end stages over NIfTI volumes: conversions between tagged volumes
//! and in-memory fields, and the peak, OO/OD, frame, distortion and
//! tensor-field stages.

use rayon::prelude::*;
use thiserror::Error;

use crate::director::WeightedDirector;
use crate::distortion::{distortion_maps, DistortionMaps, DistortionParams};
use crate::error::DfaError;
use crate::frames::{frame_field, FrameField, FrameParams, LocalFrame};
use crate::linalg::{Mat3, Vec3};
use crate::nifti::{NiftiError, NiftiVolume, Semantics};
use crate::order::{oo_od_maps, OoOdMaps};
use crate::sphere::{num_coeffs, peak_field, tensor_odf_sh, PeakField, PeakParams, ShCoefficients, ShVolume, SpdTensor, SphereMesh};
use crate::tfa::{project_gradient_to_vector, structure_tensor_4, tensor_gradient};
use crate::volume::{MaskVolume, ScalarVolume, Volume};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Nifti(#[from] NiftiError),
    #[error("voxel {voxel:?}: {source}")]
    Voxel {
        voxel: [usize; 3],
        #[source]
        source: DfaError,
    },
    #[error(transparent)]
    Numerical(#[from] DfaError),
}

pub type PipelineResult<T> = std::result::Result<T, PipelineError>;

fn volume_of<T>(v: &NiftiVolume, data: Vec<T>) -> PipelineResult<Volume<T>> {
    Ok(Volume::new(v.header.dims, v.header.spacing, data)?)
}

fn pack_f32<T>(vol: &Volume<T>, semantics: Semantics, f: impl Fn(&T, &mut [f64])) -> NiftiVolume {
    let n = vol.len();
    let k = semantics.components();
    let mut out = vec![0f32; n * k];
    let mut buf = vec![0.0; k];
    for (v, value) in vol.data().iter().enumerate() {
        buf.iter_mut().for_each(|b| *b = 0.0);
        f(value, &mut buf);
        for (c, b) in buf.iter().enumerate() {
            out[v + c * n] = *b as f32;
        }
    }
    NiftiVolume::float32(vol.dims(), vol.spacing(), semantics, out).expect("sizes match the tag")
}

fn unpack(v: &NiftiVolume) -> Vec<Vec<f64>> {
    let n = v.header.voxels();
    (0..n)
        .map(|i| (0..v.header.components).map(|c| v.component(i, c)).collect())
        .collect()
}

pub fn scalar_to_nifti(v: &ScalarVolume) -> NiftiVolume {
    pack_f32(v, Semantics::Scalar, |x, out| out[0] = *x)
}

pub fn scalar_from_nifti(v: &NiftiVolume) -> PipelineResult<ScalarVolume> {
    v.header.expect_kind("scalar")?;
    volume_of(v, v.values_f64())
}

pub fn mask_to_nifti(v: &MaskVolume) -> NiftiVolume {
    NiftiVolume::uint8(v.dims(), v.spacing(), Semantics::Mask, v.data().to_vec()).expect("one component")
}

pub fn vectors_to_nifti<const N: usize>(v: &Volume<[f64; N]>) -> NiftiVolume {
    pack_f32(v, Semantics::Vector(N), |x, out| out.copy_from_slice(x))
}

pub fn sh_to_nifti(v: &ShVolume) -> NiftiVolume {
    let order = v.data().first().map_or(0, |c| c.max_order());
    pack_f32(v, Semantics::Sh(order), |c, out| out.copy_from_slice(c.as_slice()))
}

pub fn sh_from_nifti(v: &NiftiVolume) -> PipelineResult<ShVolume> {
    let Semantics::Sh(order) = v.header.expect_kind("sh")? else { unreachable!() };
    debug_assert_eq!(num_coeffs(order), v.header.components);
    let coeffs = unpack(v)
        .into_iter()
        .map(|c| ShCoefficients::new(order, c))
        .collect::<crate::Result<Vec<_>>>()?;
    volume_of(v, coeffs)
}

pub fn tensors_to_nifti(v: &Volume<SpdTensor>) -> NiftiVolume {
    pack_f32(v, Semantics::Tensor6, |t, out| out.copy_from_slice(&t.components()))
}

/// Tensor volume as plain symmetric matrices (background voxels allowed).
pub fn matrices_from_nifti(v: &NiftiVolume) -> PipelineResult<Volume<Mat3>> {
    v.header.expect_kind("tensor6")?;
    let data = unpack(v)
        .into_iter()
        .map(|c| Mat3::new(c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5]))
        .collect();
    volume_of(v, data)
}

/// SH ODF of each tensor. All-zero voxels are background and get zero
/// coefficients; any other non-SPD tensor is an error naming the voxel.
pub fn odf_from_tensor_nifti(v: &NiftiVolume, max_order: usize) -> PipelineResult<ShVolume> {
    let m = matrices_from_nifti(v)?;
    let coeffs = (0..m.len())
        .into_par_iter()
        .map(|i| {
            let d = m.data()[i];
            if d == Mat3::zeros() {
                return Ok(ShCoefficients::zeros(max_order)?);
            }
            let voxel = m.coords(i);
            SpdTensor::new(d)
                .and_then(|t| tensor_odf_sh(&t, max_order))
                .map_err(|source| PipelineError::Voxel { voxel, source })
        })
        .collect::<PipelineResult<Vec<_>>>()?;
    Ok(m.with_data(coeffs)?)
}

pub fn peaks_to_nifti(v: &PeakField, max_peaks: usize) -> NiftiVolume {
    pack_f32(v, Semantics::Peaks(max_peaks), |peaks, out| {
        for (k, p) in peaks.iter().take(max_peaks).enumerate() {
            let a = p.axis();
            out[4 * k..4 * k + 4].copy_from_slice(&[a.x, a.y, a.z, p.weight()]);
        }
    })
}

/// Peaks with zero axes treated as padding.
pub fn peaks_from_nifti(v: &NiftiVolume) -> PipelineResult<PeakField> {
    let Semantics::Peaks(k) = v.header.expect_kind("peaks")? else { unreachable!() };
    let data = unpack(v)
        .into_iter()
        .map(|c| {
            (0..k)
                .filter_map(|j| {
                    let axis = Vec3::new(c[4 * j], c[4 * j + 1], c[4 * j + 2]);
                    WeightedDirector::new(axis, c[4 * j + 3]).ok()
                })
                .collect()
        })
        .collect();
    volume_of(v, data)
}

pub fn frames_to_nifti(v: &FrameField) -> NiftiVolume {
    pack_f32(v, Semantics::Frame9, |f, out| {
        for (k, a) in f.axes().iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(a.as_slice());
        }
    })
}

/// Frames with unit axes restored after float32 storage.
pub fn frames_from_nifti(v: &NiftiVolume) -> PipelineResult<FrameField> {
    v.header.expect_kind("frame9")?;
    let data = unpack(v)
        .into_iter()
        .map(|c| {
            let axis = |k: usize| {
                let a = Vec3::new(c[3 * k], c[3 * k + 1], c[3 * k + 2]);
                let n = a.norm();
                if n > 0.0 {
                    a / n
                } else {
                    a
                }
            };
            LocalFrame::from_axes([axis(0), axis(1), axis(2)])
        })
        .collect();
    volume_of(v, data)
}

/// Mesh used for peak detection.
pub fn default_mesh() -> SphereMesh {
    SphereMesh::default()
}

pub fn run_peaks(odf: &ShVolume, params: &PeakParams) -> PeakField {
    peak_field(odf, &default_mesh(), params)
}

pub fn run_oo_od(odf: &ShVolume, params: &PeakParams) -> OoOdMaps {
    oo_od_maps(odf, &default_mesh(), params)
}

pub fn run_frames(peaks: &PeakField, params: &FrameParams) -> FrameField {
    frame_field(peaks, params)
}

pub fn run_distortion(frames: &FrameField, params: &DistortionParams) -> DistortionMaps {
    distortion_maps(frames, params)
}

/// ODF → peaks → frames → distortion maps.
pub fn odf_to_distortion(
    odf: &ShVolume,
    peak_params: &PeakParams,
    frame_params: &FrameParams,
    params: &DistortionParams,
) -> DistortionMaps {
    run_distortion(&run_frames(&run_peaks(odf, peak_params), frame_params), params)
}

/// `√(Σ D_{ij,k}²)` per voxel.
pub fn tfa_gradient_norm(field: &Volume<Mat3>) -> ScalarVolume {
    field.map_indexed(|x, _| tensor_gradient(field, x).norm_squared().sqrt())
}

/// Gradient of the mean diffusivity per voxel (mm²/s per mm).
pub fn tfa_md_gradient(field: &Volume<Mat3>) -> Volume<[f64; 3]> {
    let w = Mat3::identity() / 3.0;
    field.map_indexed(|x, _| project_gradient_to_vector(&w, &tensor_gradient(field, x)).into())
}

/// Row-major 6×6 structure tensor and its eigenvalue moduli (descending)
/// per voxel.
pub fn tfa_structure4(field: &Volume<Mat3>) -> PipelineResult<(Volume<[f64; 36]>, Volume<[f64; 6]>)> {
    let s = field.map_indexed(|x, _| structure_tensor_4(&tensor_gradient(field, x)));
    let matrix = s.map(|t| std::array::from_fn(|i| t.0[(i / 6, i % 6)]));
    let moduli = (0..s.len())
        .into_par_iter()
        .map(|i| {
            let (ev, _) = s.data()[i].eigenvalues().map_err(|source| PipelineError::Voxel {
                voxel: s.coords(i),
                source,
            })?;
            Ok(std::array::from_fn(|k| ev[k].norm()))
        })
        .collect::<PipelineResult<Vec<_>>>()?;
    Ok((matrix, s.with_data(moduli)?))
}
