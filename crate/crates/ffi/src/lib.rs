//! C ABI for the director field analysis library.
//!
//! Fields are passed as opaque handles created by `dfa_*_new`/`dfa_*_from_*`
//! functions and released with the matching `dfa_*_free`. Every fallible
//! function returns a [`DfaStatus`]; on failure the message is available
//! from [`dfa_last_error_message`] on the same thread until the next call.
//!
//! Arrays of per-voxel values are x-fastest. Multi-component arrays store
//! all components of a voxel contiguously.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dfa::director::{mean_director, WeightedDirector};
use dfa::distortion::{DerivativeScheme, DistortionParams};
use dfa::frames::{FrameField, FrameParams};
use dfa::order::{od_w, oo_prolate_tensor, oo_watson};
use dfa::pipeline::{run_distortion, run_frames, run_oo_od, run_peaks};
use dfa::sphere::{PeakField, PeakParams, ShCoefficients, ShVolume};
use dfa::synth::{generate, SynthField, SynthKind, SyntheticSpec};
use dfa::volume::Volume;
use dfa::{DfaError, Vec3};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

/// Synthetic field kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfaSynthKind {
    Splay = 0,
    Bend = 1,
    Twist = 2,
    CircleBend = 3,
    CircleSplay = 4,
    Helical = 5,
}

/// Peak detection settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DfaPeakParams {
    pub gfa_threshold: f64,
    pub peak_ratio: f64,
    /// Zero keeps every peak.
    pub max_peaks: usize,
}

/// Opaque SH ODF volume.
pub struct DfaShVolume(ShVolume);
/// Opaque per-voxel peak lists.
pub struct DfaPeakField(PeakField);
/// Opaque per-voxel frames.
pub struct DfaFrameField(FrameField);
/// Opaque synthetic field.
pub struct DfaSynthField(SynthField);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(DfaStatus, String);

impl From<DfaError> for Failure {
    fn from(e: DfaError) -> Self {
        let status = match e {
            DfaError::InvalidArgument(_) | DfaError::DimensionMismatch(_) | DfaError::InvalidOrder { .. } => {
                DfaStatus::InvalidArgument
            }
            _ => DfaStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(DfaStatus::NullPointer, format!("{name} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(DfaStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DfaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DfaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DfaStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn grid(dims: *const usize, spacing: *const f64) -> Result<([usize; 3], [f64; 3]), Failure> {
    let d = slice(dims, 3, "dims")?;
    let s = slice(spacing, 3, "spacing")?;
    Ok(([d[0], d[1], d[2]], [s[0], s[1], s[2]]))
}

fn voxels(v: &Volume<impl Sized>) -> usize {
    v.len()
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dfa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of SH coefficients up to even order `max_order`.
#[no_mangle]
pub extern "C" fn dfa_sh_num_coeffs(max_order: usize) -> usize {
    dfa::sphere::num_coeffs(max_order)
}

/// OO of a Watson distribution with concentration `kappa > 0`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_oo_watson(kappa: f64, out: *mut f64) -> DfaStatus {
    guard(|| write_out(out, oo_watson(kappa)?, "out"))
}

/// Dispersion index `(2/π)·atan(1/κ)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_od_w(kappa: f64, out: *mut f64) -> DfaStatus {
    guard(|| write_out(out, od_w(kappa)?, "out"))
}

/// OO of the ODF of a prolate tensor with eigenvalues `(l1, l2, l2)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_oo_prolate_tensor(l1: f64, l2: f64, out: *mut f64) -> DfaStatus {
    guard(|| write_out(out, oo_prolate_tensor(l1, l2)?, "out"))
}

/// Mean of `n` weighted directors (`axes` holds `3n` values). Writes the
/// mean vector and its norm.
///
/// # Safety
/// `axes` must hold `3n` values, `weights` `n` values (or be null for unit
/// weights), `out_vector` 3 writable values and `out_norm` one.
#[no_mangle]
pub unsafe extern "C" fn dfa_mean_director(
    axes: *const f64,
    weights: *const f64,
    n: usize,
    out_vector: *mut f64,
    out_norm: *mut f64,
) -> DfaStatus {
    guard(|| {
        let a = slice(axes, 3 * n, "axes")?;
        let w = if weights.is_null() { None } else { Some(slice(weights, n, "weights")?) };
        let dirs = (0..n)
            .map(|i| {
                let axis = Vec3::new(a[3 * i], a[3 * i + 1], a[3 * i + 2]);
                WeightedDirector::new(axis, w.map_or(1.0, |w| w[i]))
            })
            .collect::<dfa::Result<Vec<_>>>()?;
        let mean = mean_director(&dirs)?;
        slice_mut(out_vector, 3, "out_vector")?.copy_from_slice(mean.vector.as_slice());
        write_out(out_norm, mean.norm(), "out_norm")
    })
}

/// SH volume from `coeffs` (`voxels × num_coeffs(max_order)` values).
///
/// # Safety
/// `dims` and `spacing` must hold 3 values, `coeffs` `len` values and
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_sh_volume_new(
    dims: *const usize,
    spacing: *const f64,
    max_order: usize,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut DfaShVolume,
) -> DfaStatus {
    guard(|| {
        let (dims, spacing) = grid(dims, spacing)?;
        let k = dfa::sphere::num_coeffs(max_order);
        let n: usize = dims.iter().product();
        if len != n * k {
            return Err(invalid(format!("expected {} coefficients, got {len}", n * k)));
        }
        let c = slice(coeffs, len, "coeffs")?;
        let data = c
            .chunks_exact(k)
            .map(|chunk| ShCoefficients::new(max_order, chunk.to_vec()))
            .collect::<dfa::Result<Vec<_>>>()?;
        let v = Volume::new(dims, spacing, data)?;
        write_out(out, Box::into_raw(Box::new(DfaShVolume(v))), "out")
    })
}

/// # Safety
/// `v` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dfa_sh_volume_free(v: *mut DfaShVolume) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

fn peak_params(p: &DfaPeakParams) -> PeakParams {
    PeakParams {
        gfa_threshold: p.gfa_threshold,
        peak_ratio: p.peak_ratio,
        max_peaks: (p.max_peaks > 0).then_some(p.max_peaks),
        ..PeakParams::default()
    }
}

/// Default peak settings.
#[no_mangle]
pub extern "C" fn dfa_peak_params_default() -> DfaPeakParams {
    let d = PeakParams::default();
    DfaPeakParams {
        gfa_threshold: d.gfa_threshold,
        peak_ratio: d.peak_ratio,
        max_peaks: 0,
    }
}

/// OO, OD and validity mask along each voxel's principal peak. Each output
/// holds one value per voxel.
///
/// # Safety
/// `sh` must be a live handle, `params` readable, and each output valid for
/// `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_oo_od_maps(
    sh: *const DfaShVolume,
    params: *const DfaPeakParams,
    oo: *mut f64,
    od: *mut f64,
    mask: *mut u8,
    len: usize,
) -> DfaStatus {
    guard(|| {
        let sh = &handle(sh, "sh")?.0;
        let params = handle(params, "params")?;
        if len != voxels(sh) {
            return Err(invalid(format!("expected {} voxels, got {len}", voxels(sh))));
        }
        let maps = run_oo_od(sh, &peak_params(params));
        slice_mut(oo, len, "oo")?.copy_from_slice(maps.oo.data());
        slice_mut(od, len, "od")?.copy_from_slice(maps.od.data());
        slice_mut(mask, len, "mask")?.copy_from_slice(maps.mask.data());
        Ok(())
    })
}

/// Peaks of every voxel.
///
/// # Safety
/// `sh` must be a live handle, `params` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dfa_peak_field_from_sh(
    sh: *const DfaShVolume,
    params: *const DfaPeakParams,
    out: *mut *mut DfaPeakField,
) -> DfaStatus {
    guard(|| {
        let sh = &handle(sh, "sh")?.0;
        let params = handle(params, "params")?;
        let peaks = run_peaks(sh, &peak_params(params));
        write_out(out, Box::into_raw(Box::new(DfaPeakField(peaks))), "out")
    })
}

/// Copies up to `k` peaks per voxel as `(x, y, z, weight)`, zero-padded,
/// into `out` (`4k` values per voxel).
///
/// # Safety
/// `peaks` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_peak_field_copy(
    peaks: *const DfaPeakField,
    k: usize,
    out: *mut f64,
    len: usize,
) -> DfaStatus {
    guard(|| {
        let peaks = &handle(peaks, "peaks")?.0;
        if len != voxels(peaks) * 4 * k {
            return Err(invalid(format!("expected {} values, got {len}", voxels(peaks) * 4 * k)));
        }
        let out = slice_mut(out, len, "out")?;
        out.fill(0.0);
        for (v, list) in peaks.data().iter().enumerate() {
            for (j, p) in list.iter().take(k).enumerate() {
                let a = p.axis();
                out[4 * (v * k + j)..4 * (v * k + j) + 4].copy_from_slice(&[a.x, a.y, a.z, p.weight()]);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dfa_peak_field_free(p: *mut DfaPeakField) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Local frames with a Gaussian neighborhood of width `sigma` voxels and
/// half-width `radius`.
///
/// # Safety
/// `peaks` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dfa_frame_field_from_peaks(
    peaks: *const DfaPeakField,
    sigma: f64,
    radius: usize,
    out: *mut *mut DfaFrameField,
) -> DfaStatus {
    guard(|| {
        let peaks = &handle(peaks, "peaks")?.0;
        if !(sigma > 0.0) {
            return Err(invalid("sigma must be positive"));
        }
        let params = FrameParams {
            sigma,
            radius,
            ..FrameParams::default()
        };
        write_out(out, Box::into_raw(Box::new(DfaFrameField(run_frames(peaks, &params)))), "out")
    })
}

/// Copies `u1, u2, u3` per voxel (9 values, zeros for missing axes).
///
/// # Safety
/// `frames` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_frame_field_copy(frames: *const DfaFrameField, out: *mut f64, len: usize) -> DfaStatus {
    guard(|| {
        let frames = &handle(frames, "frames")?.0;
        if len != voxels(frames) * 9 {
            return Err(invalid(format!("expected {} values, got {len}", voxels(frames) * 9)));
        }
        let out = slice_mut(out, len, "out")?;
        for (v, f) in frames.data().iter().enumerate() {
            for (k, a) in f.axes().iter().enumerate() {
                out[9 * v + 3 * k..9 * v + 3 * k + 3].copy_from_slice(a.as_slice());
            }
        }
        Ok(())
    })
}

/// # Safety
/// `f` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dfa_frame_field_free(f: *mut DfaFrameField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Splay, bend, twist and total distortion (mm⁻¹) with the mask (bit 0
/// valid, bit 1 degraded). Each output holds one value per voxel.
/// `spacing_normalize` nonzero rescales rotations to a 1 mm step.
///
/// # Safety
/// `frames` must be a live handle and each output valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_distortion_maps(
    frames: *const DfaFrameField,
    spacing_normalize: i32,
    splay: *mut f64,
    bend: *mut f64,
    twist: *mut f64,
    total: *mut f64,
    mask: *mut u8,
    len: usize,
) -> DfaStatus {
    guard(|| {
        let frames = &handle(frames, "frames")?.0;
        if len != voxels(frames) {
            return Err(invalid(format!("expected {} voxels, got {len}", voxels(frames))));
        }
        let params = DistortionParams {
            scheme: DerivativeScheme::Geodesic,
            spacing_normalize: spacing_normalize != 0,
            reference_step: 1.0,
        };
        let maps = run_distortion(frames, &params);
        slice_mut(splay, len, "splay")?.copy_from_slice(maps.splay.data());
        slice_mut(bend, len, "bend")?.copy_from_slice(maps.bend.data());
        slice_mut(twist, len, "twist")?.copy_from_slice(maps.twist.data());
        slice_mut(total, len, "total")?.copy_from_slice(maps.total.data());
        slice_mut(mask, len, "mask")?.copy_from_slice(maps.mask.data());
        Ok(())
    })
}

/// Synthetic field with default eigenvalues. `angle` is the total angle
/// across x (rad/mm for the helical kind); NaN selects the kind's default.
///
/// # Safety
/// `dims` and `spacing` must hold 3 values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfa_synth_generate(
    kind: DfaSynthKind,
    dims: *const usize,
    spacing: *const f64,
    angle: f64,
    out: *mut *mut DfaSynthField,
) -> DfaStatus {
    guard(|| {
        let (dims, spacing) = grid(dims, spacing)?;
        let kind = match kind {
            DfaSynthKind::Splay => SynthKind::Splay,
            DfaSynthKind::Bend => SynthKind::Bend,
            DfaSynthKind::Twist => SynthKind::Twist,
            DfaSynthKind::CircleBend => SynthKind::CircleBend,
            DfaSynthKind::CircleSplay => SynthKind::CircleSplay,
            DfaSynthKind::Helical => SynthKind::Helical,
        };
        let mut spec = SyntheticSpec::new(kind);
        spec.dims = dims;
        spec.spacing = spacing;
        if !angle.is_nan() {
            spec.angle = angle;
        }
        write_out(out, Box::into_raw(Box::new(DfaSynthField(generate(&spec)?))), "out")
    })
}

/// The synthetic field's construction-axis peaks as a new handle.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dfa_synth_peaks(field: *const DfaSynthField, out: *mut *mut DfaPeakField) -> DfaStatus {
    guard(|| {
        let field = &handle(field, "field")?.0;
        write_out(out, Box::into_raw(Box::new(DfaPeakField(field.peaks.clone()))), "out")
    })
}

/// The synthetic field's SH ODF up to `max_order` as a new handle.
///
/// # Safety
/// `field` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dfa_synth_odf(
    field: *const DfaSynthField,
    max_order: usize,
    out: *mut *mut DfaShVolume,
) -> DfaStatus {
    guard(|| {
        let field = &handle(field, "field")?.0;
        if !max_order.is_multiple_of(2) {
            return Err(invalid(format!("SH order must be even, got {max_order}")));
        }
        write_out(out, Box::into_raw(Box::new(DfaShVolume(field.odf(max_order)?))), "out")
    })
}

/// Copies the tensors as `Dxx, Dxy, Dxz, Dyy, Dyz, Dzz` per voxel.
///
/// # Safety
/// `field` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dfa_synth_tensors_copy(field: *const DfaSynthField, out: *mut f64, len: usize) -> DfaStatus {
    guard(|| {
        let field = &handle(field, "field")?.0;
        if len != voxels(&field.tensors) * 6 {
            return Err(invalid(format!("expected {} values, got {len}", voxels(&field.tensors) * 6)));
        }
        let out = slice_mut(out, len, "out")?;
        for (v, t) in field.tensors.data().iter().enumerate() {
            out[6 * v..6 * v + 6].copy_from_slice(&t.components());
        }
        Ok(())
    })
}

/// # Safety
/// `f` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dfa_synth_field_free(f: *mut DfaSynthField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}
