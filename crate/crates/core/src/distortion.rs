//! Directional derivatives of the principal director by rotation transport,
//! the connection scalars `c₁ⱼₖ = uⱼᵀ·∂u₁/∂uₖ` and the splay, bend, twist and
//! total distortion indices.
//!
//! Per grid axis, the rotation `Rⱼ` takes the mean of the backward and
//! forward principal directors onto the forward one. Transporting `u₁` with
//! these rotations forward and backward along a frame direction and
//! differencing gives the derivative. Derivatives are per mm: each axis
//! enters with weight `u_ij/h_j`.

use rayon::prelude::*;

use crate::error::{DfaError, Result};
use crate::frames::{FrameField, LocalFrame};
use crate::linalg::{rotation_between, rotation_exp, rotation_log, rotation_mean, Mat3, Vec3};
use crate::volume::{offset, MaskVolume, ScalarVolume};

/// Mask bit: indices are valid (full frame).
pub const MASK_VALID: u8 = 1;
/// Mask bit: at least one neighbor was missing.
pub const MASK_DEGRADED: u8 = 2;

/// How transported directors are combined into a derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeScheme {
    /// Forward/backward transport by the exponential of the weighted mean
    /// rotation vector, with the chord between them converted to arc length.
    Geodesic,
    /// Normalized weighted sums of the per-axis rotated directors,
    /// differenced directly.
    Verbatim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionParams {
    pub scheme: DerivativeScheme,
    /// Rescale each axis rotation to a common physical step before
    /// transport, averaging multi-voxel rotations when the step spans
    /// several voxels.
    pub spacing_normalize: bool,
    /// Reference step in mm for `spacing_normalize`.
    pub reference_step: f64,
}

impl Default for DistortionParams {
    fn default() -> Self {
        Self {
            scheme: DerivativeScheme::Geodesic,
            spacing_normalize: false,
            reference_step: 1.0,
        }
    }
}

/// Rotation of the principal director across one grid axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRotation {
    pub rotation: Mat3,
    /// Physical step (mm) the rotation spans.
    pub step: f64,
    /// False when a neighbor was missing and a fallback was used.
    pub complete: bool,
}

fn u1_at(frames: &FrameField, p: [isize; 3]) -> Option<Vec3> {
    frames.get_clamped(p).u1()
}

/// Rotation from the mean of `u₁(x − s·oₐ)` and `u₁(x + s·oₐ)` onto
/// `u₁(x + s·oₐ)`. A missing neighbor is replaced by `u₁(x)`; both missing
/// gives the identity.
pub fn axis_rotation(frames: &FrameField, x: [usize; 3], axis: usize, steps: usize) -> AxisRotation {
    let s = steps as isize;
    let h = frames.spacing()[axis] * steps as f64;
    let center = frames.get(x).u1();
    let fwd = u1_at(frames, offset(x, axis, s));
    let bwd = u1_at(frames, offset(x, axis, -s));
    let complete = fwd.is_some() && bwd.is_some();
    let (Some(v1), Some(v0)) = (fwd.or(center), bwd.or(center)) else {
        return AxisRotation {
            rotation: Mat3::identity(),
            step: h,
            complete: false,
        };
    };
    let sum = if v1.dot(&v0) >= 0.0 { v1 + v0 } else { v1 - v0 };
    let n = sum.norm();
    if !(n > 0.0) {
        return AxisRotation {
            rotation: Mat3::identity(),
            step: h,
            complete: false,
        };
    }
    AxisRotation {
        rotation: rotation_between(&(sum / n), &v1),
        step: h,
        complete,
    }
}

/// Axis rotation rescaled to span `reference_step` mm.
///
/// The rotation angle is multiplied by `reference_step/h`. When the
/// reference step covers `m ≥ 2` voxels, the rescaled `s`-voxel rotations for
/// `s = 1..m` are averaged with the Riemannian mean.
pub fn resolution_scaled_rotation(frames: &FrameField, x: [usize; 3], axis: usize, reference_step: f64) -> AxisRotation {
    let h = frames.spacing()[axis];
    let m = ((reference_step / h).round() as usize).max(1);
    let mut complete = true;
    let scaled: Vec<Mat3> = (1..=m)
        .map(|s| {
            let r = axis_rotation(frames, x, axis, s);
            complete &= r.complete;
            rotation_exp(&(rotation_log(&r.rotation) * (reference_step / r.step)))
        })
        .collect();
    AxisRotation {
        rotation: rotation_mean(&scaled),
        step: reference_step,
        complete,
    }
}

/// The three axis rotations at `x` under `params`.
pub fn axis_rotations(frames: &FrameField, x: [usize; 3], params: &DistortionParams) -> [AxisRotation; 3] {
    std::array::from_fn(|a| {
        if params.spacing_normalize {
            resolution_scaled_rotation(frames, x, a, params.reference_step)
        } else {
            axis_rotation(frames, x, a, 1)
        }
    })
}

/// Derivative of `u₁` along the unit direction `v`, in mm⁻¹.
pub fn directional_derivative(u1: &Vec3, rotations: &[AxisRotation; 3], v: &Vec3, scheme: DerivativeScheme) -> Vec3 {
    let weights: [f64; 3] = std::array::from_fn(|j| v[j] / rotations[j].step);
    let total: f64 = weights.iter().map(|w| w.abs()).sum();
    if total == 0.0 {
        return Vec3::zeros();
    }
    let (p0, n0) = match scheme {
        DerivativeScheme::Geodesic => {
            let w: Vec3 = (0..3)
                .map(|j| rotation_log(&rotations[j].rotation) * weights[j])
                .sum::<Vec3>()
                / total;
            (rotation_exp(&w) * u1, rotation_exp(&(-w)) * u1)
        }
        DerivativeScheme::Verbatim => {
            let mut p = Vec3::zeros();
            let mut n = Vec3::zeros();
            for j in 0..3 {
                let fwd = rotations[j].rotation * u1;
                let bwd = rotations[j].rotation.transpose() * u1;
                let a = weights[j].abs();
                if weights[j] >= 0.0 {
                    p += fwd * a;
                    n += bwd * a;
                } else {
                    p += bwd * a;
                    n += fwd * a;
                }
            }
            (p.normalize(), n.normalize())
        }
    };
    let minus = p0 - n0;
    let plus = p0 + n0;
    let d = if minus.norm() <= plus.norm() { minus } else { plus };
    match scheme {
        DerivativeScheme::Verbatim => d * (total / 2.0),
        DerivativeScheme::Geodesic => {
            let chord = d.norm();
            if chord == 0.0 {
                return Vec3::zeros();
            }
            let arc = 2.0 * (chord / 2.0).min(1.0).asin();
            d / chord * (arc * total / 2.0)
        }
    }
}

/// `∂u₁/∂uₖ` for `k = 1, 2, 3`, plus whether any neighbor was missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalDerivatives {
    pub d: [Vec3; 3],
    pub degraded: bool,
}

/// Directional derivatives of the principal director along the frame axes.
pub fn principal_directional_derivatives(
    frames: &FrameField,
    x: [usize; 3],
    params: &DistortionParams,
) -> Result<PrincipalDerivatives> {
    let LocalFrame::Full { u1, u2, u3 } = *frames.get(x) else {
        return Err(DfaError::DerivativeUndefined(x));
    };
    let rotations = axis_rotations(frames, x, params);
    Ok(PrincipalDerivatives {
        d: [u1, u2, u3].map(|v| directional_derivative(&u1, &rotations, &v, params.scheme)),
        degraded: rotations.iter().any(|r| !r.complete),
    })
}

/// Connection scalars `c₁ⱼₖ` for `j ∈ {2, 3}`, `k ∈ {1, 2, 3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionForm {
    values: [[f64; 3]; 2],
}

impl ConnectionForm {
    /// `c₁ⱼₖ` with one-based `j ∈ {2, 3}` and `k ∈ {1, 2, 3}`.
    pub fn c1(&self, j: usize, k: usize) -> f64 {
        self.values[j - 2][k - 1]
    }
}

/// Connection scalars at `x`.
pub fn connections(frames: &FrameField, x: [usize; 3], params: &DistortionParams) -> Result<ConnectionForm> {
    Ok(connections_with_flag(frames, x, params)?.0)
}

fn connections_with_flag(frames: &FrameField, x: [usize; 3], params: &DistortionParams) -> Result<(ConnectionForm, bool)> {
    let deriv = principal_directional_derivatives(frames, x, params)?;
    let [_, u2, u3] = frames.get(x).axes();
    let values = [u2, u3].map(|uj| deriv.d.map(|dk| uj.dot(&dk)));
    Ok((ConnectionForm { values }, deriv.degraded))
}

/// Splay, bend, twist and total distortion (mm⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistortionIndices {
    pub splay: f64,
    pub bend: f64,
    pub twist: f64,
    pub total: f64,
}

impl DistortionIndices {
    pub fn from_connections(c: &ConnectionForm) -> Self {
        let splay2 = c.c1(2, 2).powi(2) + c.c1(3, 3).powi(2);
        let bend2 = c.c1(2, 1).powi(2) + c.c1(3, 1).powi(2);
        let twist2 = c.c1(2, 3).powi(2) + c.c1(3, 2).powi(2);
        Self {
            splay: splay2.sqrt(),
            bend: bend2.sqrt(),
            twist: twist2.sqrt(),
            total: (splay2 + bend2 + twist2).sqrt(),
        }
    }
}

/// Indices at `x` with mask bits; partial or absent frames give zeros and
/// no valid bit.
pub fn distortion_indices(frames: &FrameField, x: [usize; 3], params: &DistortionParams) -> (DistortionIndices, u8) {
    match connections_with_flag(frames, x, params) {
        Ok((c, degraded)) => (
            DistortionIndices::from_connections(&c),
            MASK_VALID | if degraded { MASK_DEGRADED } else { 0 },
        ),
        Err(_) => (DistortionIndices::default(), 0),
    }
}

/// Index maps and mask (bit 0 valid, bit 1 degraded).
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMaps {
    pub splay: ScalarVolume,
    pub bend: ScalarVolume,
    pub twist: ScalarVolume,
    pub total: ScalarVolume,
    pub mask: MaskVolume,
}

pub fn distortion_maps(frames: &FrameField, params: &DistortionParams) -> DistortionMaps {
    let results: Vec<(DistortionIndices, u8)> = (0..frames.len())
        .into_par_iter()
        .map(|i| distortion_indices(frames, frames.coords(i), params))
        .collect();
    let pick = |f: fn(&DistortionIndices) -> f64| {
        frames
            .with_data(results.iter().map(|r| f(&r.0)).collect())
            .expect("same grid")
    };
    DistortionMaps {
        splay: pick(|d| d.splay),
        bend: pick(|d| d.bend),
        twist: pick(|d| d.twist),
        total: pick(|d| d.total),
        mask: frames.with_data(results.iter().map(|r| r.1).collect()).expect("same grid"),
    }
}
