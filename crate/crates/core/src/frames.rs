//! Per-voxel orthogonal frames: the principal peak, the main in-plane
//! direction of the projected neighborhood peaks and their cross product.

use crate::error::{DfaError, Result};
use crate::linalg::{canonical_sign, sym_eigen3, Mat3, Vec3};
use crate::sphere::PeakField;
use crate::volume::Volume;

/// A voxel's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalFrame {
    /// No principal peak.
    Absent,
    /// Principal axis only; the in-plane direction is undetermined.
    Partial { u1: Vec3 },
    Full { u1: Vec3, u2: Vec3, u3: Vec3 },
}

impl LocalFrame {
    pub fn u1(&self) -> Option<Vec3> {
        match self {
            LocalFrame::Absent => None,
            LocalFrame::Partial { u1 } | LocalFrame::Full { u1, .. } => Some(*u1),
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, LocalFrame::Full { .. })
    }

    /// `[u1, u2, u3]` with zeros for missing axes.
    pub fn axes(&self) -> [Vec3; 3] {
        match *self {
            LocalFrame::Absent => [Vec3::zeros(); 3],
            LocalFrame::Partial { u1 } => [u1, Vec3::zeros(), Vec3::zeros()],
            LocalFrame::Full { u1, u2, u3 } => [u1, u2, u3],
        }
    }

    /// Builds a frame from `[u1, u2, u3]`; a zero `u1` means absent and a
    /// zero `u2` means partial.
    pub fn from_axes(axes: [Vec3; 3]) -> Self {
        if axes[0].norm_squared() == 0.0 {
            LocalFrame::Absent
        } else if axes[1].norm_squared() == 0.0 {
            LocalFrame::Partial { u1: axes[0] }
        } else {
            LocalFrame::Full {
                u1: axes[0],
                u2: axes[1],
                u3: axes[2],
            }
        }
    }

    pub fn rotated(&self, r: &Mat3) -> Self {
        let [a, b, c] = self.axes();
        Self::from_axes([r * a, r * b, r * c])
    }
}

pub type FrameField = Volume<LocalFrame>;

/// Weight of each neighborhood peak in the projected tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakWeighting {
    /// The peak's ODF value divided by that voxel's principal value, so the
    /// tensor depends only on orientations and relative peak heights.
    RelativeToPrincipal,
    /// The raw ODF value at the peak.
    Raw,
}

/// How the second frame axis is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMode {
    /// Dominant eigenvector of the projected orientational tensor.
    Director,
    /// Sign-resolved peaks: weighted mean of the projected vectors.
    VectorMean,
    /// Sign-resolved peaks: the longest weighted projected vector.
    VectorMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams {
    /// Gaussian width in voxels.
    pub sigma: f64,
    /// Half-width of the cubic neighborhood in voxels.
    pub radius: usize,
    /// Relative eigenvalue gap below which the frame is partial.
    pub tie_tolerance: f64,
    pub weighting: PeakWeighting,
    pub mode: FrameMode,
}

impl Default for FrameParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            radius: 1,
            tie_tolerance: 1e-6,
            weighting: PeakWeighting::RelativeToPrincipal,
            mode: FrameMode::Director,
        }
    }
}

fn principal(peaks: &PeakField, x: [usize; 3]) -> Result<Vec3> {
    peaks
        .get(x)
        .first()
        .map(|p| canonical_sign(p.axis()))
        .ok_or(DfaError::FrameUndefined(x))
}

/// Visits every neighborhood peak with its combined weight and its
/// projection onto the plane orthogonal to `u1`.
fn for_each_projected(peaks: &PeakField, x: [usize; 3], u1: &Vec3, params: &FrameParams, mut visit: impl FnMut(f64, Vec3)) {
    let r = params.radius as isize;
    let two_s2 = 2.0 * params.sigma * params.sigma;
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                let y = [x[0] as isize + dx, x[1] as isize + dy, x[2] as isize + dz];
                if !peaks.contains(y) {
                    continue;
                }
                let list = peaks.get([y[0] as usize, y[1] as usize, y[2] as usize]);
                let Some(first) = list.first() else { continue };
                let spatial = (-((dx * dx + dy * dy + dz * dz) as f64) / two_s2).exp();
                for p in list {
                    let value = match params.weighting {
                        PeakWeighting::RelativeToPrincipal => p.weight() / first.weight(),
                        PeakWeighting::Raw => p.weight(),
                    };
                    let u = p.axis();
                    let perp = u - u1 * u.dot(u1);
                    visit(spatial * value, perp);
                }
            }
        }
    }
}

/// `Q_x = Σ_y Σ_i w(y,x)·f_i(y)·u⊥u⊥ᵀ` over the cubic neighborhood of `x`,
/// with peaks projected onto the plane orthogonal to the principal peak at `x`.
pub fn projected_orientational_tensor(peaks: &PeakField, x: [usize; 3], params: &FrameParams) -> Result<Mat3> {
    let u1 = principal(peaks, x)?;
    let mut q = Mat3::zeros();
    for_each_projected(peaks, x, &u1, params, |w, perp| q += perp * perp.transpose() * w);
    Ok(q)
}

/// Projections below this fraction of the total neighborhood weight are
/// rounding residue of peaks parallel to `u1`.
const NEGLIGIBLE: f64 = 1e-12;

fn neighborhood_mass(peaks: &PeakField, x: [usize; 3], u1: &Vec3, params: &FrameParams) -> f64 {
    let mut mass = 0.0;
    for_each_projected(peaks, x, u1, params, |w, _| mass += w.abs());
    mass
}

fn complete(u1: Vec3, u2: Vec3, scale: f64) -> LocalFrame {
    let u2 = u2 - u1 * u2.dot(&u1);
    let n = u2.norm();
    if !(n > 0.0 && n > NEGLIGIBLE * scale) {
        return LocalFrame::Partial { u1 };
    }
    let u2 = canonical_sign(u2 / n);
    LocalFrame::Full {
        u1,
        u2,
        u3: u1.cross(&u2),
    }
}

/// Frame at voxel `x`.
pub fn local_frame(peaks: &PeakField, x: [usize; 3], params: &FrameParams) -> Result<LocalFrame> {
    let u1 = principal(peaks, x)?;
    let mass = neighborhood_mass(peaks, x, &u1, params);
    match params.mode {
        FrameMode::Director => {
            let q = projected_orientational_tensor(peaks, x, params)?;
            let e = sym_eigen3(&q);
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| e.values[b].abs().total_cmp(&e.values[a].abs()));
            let (la, lb) = (e.values[order[0]].abs(), e.values[order[1]].abs());
            if la <= NEGLIGIBLE * mass || (la - lb) / la.max(1e-30) < params.tie_tolerance {
                return Ok(LocalFrame::Partial { u1 });
            }
            Ok(complete(u1, e.vector(order[0]), 0.0))
        }
        FrameMode::VectorMean => {
            let mut sum = Vec3::zeros();
            for_each_projected(peaks, x, &u1, params, |w, perp| sum += perp * w);
            Ok(complete(u1, sum, mass))
        }
        FrameMode::VectorMax => {
            let mut best = Vec3::zeros();
            for_each_projected(peaks, x, &u1, params, |w, perp| {
                if (perp * w).norm() > best.norm() {
                    best = perp * w;
                }
            });
            Ok(complete(u1, best, mass))
        }
    }
}

/// Frames at every voxel; absent where a voxel has no peaks.
pub fn frame_field(peaks: &PeakField, params: &FrameParams) -> FrameField {
    peaks.map_indexed(|x, list| {
        if list.is_empty() {
            LocalFrame::Absent
        } else {
            local_frame(peaks, x, params).unwrap_or(LocalFrame::Absent)
        }
    })
}
