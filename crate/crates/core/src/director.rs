//! Director algebra: axes identified with their negation, optionally carrying
//! a weight, together with their means, differences and rotation-based
//! spatial differences.

use crate::error::{DfaError, Result};
use crate::linalg::{canonical_sign, rotation_between, sym_eigen3, Mat3, Vec3};
use crate::volume::{offset, Volume};

/// Largest set size for which the mean director is found by exhaustive
/// sign enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 20;

const MEAN_TIE_TOL: f64 = 1e-12;
const MAIN_TIE_TOL: f64 = 1e-9;

/// A unit axis with an attached scalar weight; `(v, w)` and `(-v, w)` are the
/// same object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedDirector {
    axis: Vec3,
    weight: f64,
}

impl WeightedDirector {
    /// Normalizes `axis`; fails on zero or non-finite axes.
    pub fn new(axis: Vec3, weight: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) || !weight.is_finite() {
            return Err(DfaError::DegenerateAxis);
        }
        Ok(Self { axis: axis / n, weight })
    }

    pub fn unit(axis: Vec3) -> Result<Self> {
        Self::new(axis, 1.0)
    }

    /// Splits a nonzero vector into direction and length.
    pub fn from_vector(v: Vec3) -> Option<Self> {
        let n = v.norm();
        (n.is_finite() && n > 0.0).then(|| Self { axis: v / n, weight: n })
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `w·v` with the stored sign.
    pub fn vector(&self) -> Vec3 {
        self.axis * self.weight
    }

    /// The sign-free representation `w·v·vᵀ`.
    pub fn dyadic(&self) -> Mat3 {
        self.axis * self.axis.transpose() * self.weight
    }

    /// Same director with first nonzero axis component positive.
    pub fn canonical(&self) -> Self {
        Self {
            axis: canonical_sign(self.axis),
            weight: self.weight,
        }
    }

    pub fn flipped(&self) -> Self {
        Self {
            axis: -self.axis,
            weight: self.weight,
        }
    }

    pub fn with_weight(&self, weight: f64) -> Self {
        Self { axis: self.axis, weight }
    }

    pub fn rotated(&self, r: &Mat3) -> Self {
        Self {
            axis: r * self.axis,
            weight: self.weight,
        }
    }
}

/// Per-voxel optional directors on a grid.
pub type DirectorField = Volume<Option<WeightedDirector>>;

/// A rotation with a positive scale; `apply(v) = scale·R·v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledRotation {
    pub rotation: Mat3,
    pub scale: f64,
}

impl ScaledRotation {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            scale: 1.0,
        }
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.rotation * v * self.scale
    }

    /// The inverse map `(1/scale)·Rᵀ·v`.
    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        self.rotation.transpose() * v / self.scale
    }

    pub fn angle(&self) -> f64 {
        crate::linalg::rotation_log(&self.rotation).norm()
    }
}

/// Result of [`mean_director`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDirector {
    /// `(1/N)·Σ |wᵢ|sᵢvᵢ` for the maximizing signs (stored sign as summed).
    pub vector: Vec3,
    /// Maximizing signs, `signs[0] == 1`.
    pub signs: Vec<f64>,
    /// False when a different sign class reaches the same norm within
    /// a relative `1e-12`.
    pub unique: bool,
    /// False when the greedy search was used.
    pub exhaustive: bool,
}

impl MeanDirector {
    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    /// Axis and weight of the mean, or `None` for a zero mean.
    pub fn director(&self) -> Option<WeightedDirector> {
        WeightedDirector::from_vector(self.vector).map(|d| d.canonical())
    }
}

fn signed_sum(dirs: &[WeightedDirector], signs: impl Fn(usize) -> f64) -> [f64; 3] {
    let mut acc = [0.0f64; 3];
    for (i, d) in dirs.iter().enumerate() {
        let s = signs(i) * d.weight.abs();
        acc[0] += s * d.axis.x;
        acc[1] += s * d.axis.y;
        acc[2] += s * d.axis.z;
    }
    acc
}

fn norm2(a: &[f64; 3]) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

fn lex_less(a: &Vec3, b: &Vec3) -> bool {
    for k in 0..3 {
        if a[k] != b[k] {
            return a[k] < b[k];
        }
    }
    false
}

/// Mean of weighted directors: the signed average with the largest norm.
///
/// Weights enter by absolute value. Sets of up to [`EXHAUSTIVE_LIMIT`]
/// directors are searched exhaustively over the `2^(N-1)` sign classes with
/// `s₁ = +1`; larger sets use greedy single-sign flipping from an
/// eigenvector-aligned start and log a warning.
pub fn mean_director(dirs: &[WeightedDirector]) -> Result<MeanDirector> {
    if dirs.is_empty() {
        return Err(DfaError::EmptyInput);
    }
    let n = dirs.len();
    if dirs.iter().any(|d| !(d.axis.norm() > 0.0)) {
        return Err(DfaError::DegenerateAxis);
    }
    let sign_of = |mask: u64, i: usize| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 };
    if n <= EXHAUSTIVE_LIMIT {
        let mut best_mask = 0u64;
        let mut best_sum = signed_sum(dirs, |i| sign_of(0, i));
        let mut best = norm2(&best_sum);
        let mut runner_up = f64::NEG_INFINITY;
        for mask in 1..(1u64 << (n - 1)) {
            let sum = signed_sum(dirs, |i| sign_of(mask, i));
            let value = norm2(&sum);
            let replace = value > best
                || (value == best && {
                    let cand = canonical_sign(Vec3::from(sum));
                    let cur = canonical_sign(Vec3::from(best_sum));
                    lex_less(&cand, &cur)
                });
            if replace {
                runner_up = runner_up.max(best);
                best = value;
                best_sum = sum;
                best_mask = mask;
            } else {
                runner_up = runner_up.max(value);
            }
        }
        let unique = runner_up < best * (1.0 - MEAN_TIE_TOL) || (n == 1);
        let unique = unique && best > 0.0;
        return Ok(MeanDirector {
            vector: Vec3::from(best_sum) / n as f64,
            signs: (0..n).map(|i| sign_of(best_mask, i)).collect(),
            unique,
            exhaustive: true,
        });
    }

    log::warn!("mean director of {n} directors uses greedy sign search; optimum not guaranteed");
    let main = main_director(dirs)?;
    let e = main.director.axis();
    let mut signs: Vec<f64> = dirs
        .iter()
        .map(|d| if d.axis.dot(&e) >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    loop {
        let mut improved = false;
        for i in 0..n {
            let current = norm2(&signed_sum(dirs, |k| signs[k]));
            signs[i] = -signs[i];
            if norm2(&signed_sum(dirs, |k| signs[k])) > current {
                improved = true;
            } else {
                signs[i] = -signs[i];
            }
        }
        if !improved {
            break;
        }
    }
    if signs[0] < 0.0 {
        signs.iter_mut().for_each(|s| *s = -*s);
    }
    let sum = signed_sum(dirs, |k| signs[k]);
    Ok(MeanDirector {
        vector: Vec3::from(sum) / n as f64,
        signs,
        unique: true,
        exhaustive: false,
    })
}

/// Result of [`main_director`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainDirector {
    /// Eigenvector (canonical sign) and its eigenvalue as weight.
    pub director: WeightedDirector,
    /// False when the two largest |eigenvalues| agree within `1e-9`
    /// relative.
    pub unique: bool,
}

/// Dominant eigen-pair (largest |λ|) of `Σ wᵢvᵢvᵢᵀ`.
pub fn main_director(dirs: &[WeightedDirector]) -> Result<MainDirector> {
    if dirs.is_empty() {
        return Err(DfaError::EmptyInput);
    }
    let m: Mat3 = dirs.iter().map(|d| d.dyadic()).sum();
    Ok(main_eigenpair(&m))
}

/// Dominant eigen-pair of a symmetric matrix.
pub fn main_eigenpair(m: &Mat3) -> MainDirector {
    let e = sym_eigen3(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| e.values[b].abs().total_cmp(&e.values[a].abs()));
    let (top, second) = (e.values[order[0]], e.values[order[1]]);
    let unique = (top.abs() - second.abs()) > MAIN_TIE_TOL * top.abs();
    MainDirector {
        director: WeightedDirector {
            axis: canonical_sign(e.vector(order[0])),
            weight: top,
        },
        unique,
    }
}

/// Output of [`diff_director`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectorDifference {
    /// `w₁v₁ − w₂s₂v₂`, itself sign-ambiguous.
    pub vector: Vec3,
    /// Set when `v₁ ⟂ v₂`, where both sign choices are equally valid.
    pub orthogonal_tie: bool,
}

fn aligned_sign(a: &Vec3, b: &Vec3) -> f64 {
    if a.dot(b) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Difference of two weighted directors with the second flipped onto the
/// hemisphere of the first.
pub fn diff_director(a: &WeightedDirector, b: &WeightedDirector) -> DirectorDifference {
    let dot = a.axis.dot(&b.axis);
    let s2 = aligned_sign(&a.axis, &b.axis);
    DirectorDifference {
        vector: a.axis * a.weight.abs() - b.axis * (s2 * b.weight.abs()),
        orthogonal_tie: dot == 0.0,
    }
}

/// Scaled rotation taking `b` onto `a`: `a.weight·a.axis = scale·R·(b.weight·s₂·b.axis)`.
pub fn diff_rotation(a: &WeightedDirector, b: &WeightedDirector) -> Result<ScaledRotation> {
    if !(b.weight.abs() > 0.0) {
        return Err(DfaError::InvalidArgument("reference director has zero weight".into()));
    }
    let s2 = aligned_sign(&a.axis, &b.axis);
    Ok(ScaledRotation {
        rotation: rotation_between(&(b.axis * s2), &a.axis),
        scale: a.weight.abs() / b.weight.abs(),
    })
}

/// Central-difference rotation of a director field at one voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralRotation {
    pub rotation: ScaledRotation,
    /// False when neither neighbor nor the voxel itself holds a director.
    pub defined: bool,
}

/// Rotation from the mean of the backward and forward neighbors to the
/// forward neighbor along grid `axis` (0, 1 or 2), with replicate boundary.
///
/// A single missing neighbor is replaced by the center voxel.
pub fn central_difference_rotation(field: &DirectorField, x: [usize; 3], axis: usize) -> CentralRotation {
    let center = field.get(x);
    let fwd = field.get_clamped(offset(x, axis, 1)).or(*center);
    let bwd = field.get_clamped(offset(x, axis, -1)).or(*center);
    let undefined = CentralRotation {
        rotation: ScaledRotation::identity(),
        defined: false,
    };
    let (Some(fwd), Some(bwd)) = (fwd, bwd) else {
        return undefined;
    };
    let Ok(mean) = mean_director(&[bwd, fwd]) else {
        return undefined;
    };
    let Some(mean) = WeightedDirector::from_vector(mean.vector) else {
        return undefined;
    };
    match diff_rotation(&fwd, &mean) {
        Ok(rotation) => CentralRotation { rotation, defined: true },
        Err(_) => undefined,
    }
}

/// Transport of `base` along unit direction `u` by step `k` through the
/// per-axis rotations: `Σᵢ k·pᵢ` with `pᵢ = uᵢ·Rᵢ(wv)` for `uᵢ ≥ 0` and
/// `pᵢ = −uᵢ·Rᵢ⁻¹(wv)` otherwise. The result is sign-ambiguous.
pub fn transport_director(rotations: &[ScaledRotation; 3], u: &Vec3, base: &WeightedDirector, k: f64) -> Vec3 {
    let wv = base.vector();
    let mut acc = Vec3::zeros();
    for i in 0..3 {
        let p = if u[i] >= 0.0 {
            rotations[i].apply(&wv) * u[i]
        } else {
            rotations[i].apply_inverse(&wv) * (-u[i])
        };
        acc += p * k;
    }
    acc
}
