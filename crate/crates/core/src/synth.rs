//! Deterministic synthetic tensor fields with known director geometry:
//! splay, bend and twist slabs, circular bend/splay patterns and a helical
//! field with a fixed pitch.
//!
//! Orientation angles vary along x. The tensor mode may vary linearly from
//! the bottom row (y = 0) to the top row without touching orientations.

use std::f64::consts::PI;

use crate::director::WeightedDirector;
use crate::error::{DfaError, Result};
use crate::linalg::{canonical_sign, Mat3, Vec3};
use crate::sphere::{tensor_field_odf, PeakField, ShVolume, SpdTensor, TensorVolume};
use crate::volume::{MaskVolume, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// `d = (−sin ψ, cos ψ, 0)`: fans out across x.
    Splay,
    /// `d = (cos ψ, sin ψ, 0)`: bends across x.
    Bend,
    /// `d = (0, cos ψ, sin ψ)`: rotates about x.
    Twist,
    /// Tangential circles about the z-axis through the grid center.
    CircleBend,
    /// Radial lines from the z-axis through the grid center.
    CircleSplay,
    /// Twist with `angle` read as a rate in rad/mm.
    Helical,
}

impl std::str::FromStr for SynthKind {
    type Err = DfaError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "splay" => SynthKind::Splay,
            "bend" => SynthKind::Bend,
            "twist" => SynthKind::Twist,
            "circle_bend" | "circle-bend" => SynthKind::CircleBend,
            "circle_splay" | "circle-splay" => SynthKind::CircleSplay,
            "helical" => SynthKind::Helical,
            other => return Err(DfaError::InvalidArgument(format!("unknown synthetic kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SynthKind,
    pub dims: [usize; 3],
    /// Voxel spacing in mm.
    pub spacing: [f64; 3],
    /// Base eigenvalues, descending (mm²/s).
    pub eigenvalues: [f64; 3],
    /// Total angle across the slab in x (splay, bend, twist) or rad/mm
    /// (helical). Unused by the circular fields.
    pub angle: f64,
    /// Tensor mode at the bottom and top rows; `None` keeps `eigenvalues`.
    pub mode_range: Option<(f64, f64)>,
    /// Global rotation `G`: the field at `p` is `G·d(Gᵀp)`.
    pub rotation: Mat3,
    /// Physical shift (mm) of the grid center.
    pub offset: Vec3,
}

impl SyntheticSpec {
    pub fn new(kind: SynthKind) -> Self {
        let angle = match kind {
            SynthKind::Twist => PI,
            SynthKind::Helical => PI / 8.0,
            _ => PI / 2.0,
        };
        Self {
            kind,
            dims: [32, 16, 3],
            spacing: [1.0; 3],
            eigenvalues: [1.7e-3, 0.2e-3, 0.2e-3],
            angle,
            mode_range: None,
            rotation: Mat3::identity(),
            offset: Vec3::zeros(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 3) {
            return Err(DfaError::InvalidArgument(format!("dims must be at least 3, got {:?}", self.dims)));
        }
        let l = self.eigenvalues;
        if !(l[2] > 0.0 && l[1] >= l[2] && l[0] > l[1] && l[0].is_finite()) {
            return Err(DfaError::InvalidArgument(format!(
                "eigenvalues must be positive, descending, with a distinct largest, got {l:?}"
            )));
        }
        if !self.angle.is_finite() {
            return Err(DfaError::InvalidArgument("angle must be finite".into()));
        }
        if let Some((a, b)) = self.mode_range {
            if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
                return Err(DfaError::InvalidArgument(format!("mode range must lie in [0, 1], got ({a}, {b})")));
            }
        }
        if (self.rotation.transpose() * self.rotation - Mat3::identity()).amax() > 1e-12 {
            return Err(DfaError::InvalidArgument("rotation is not orthogonal".into()));
        }
        Ok(())
    }

    /// Physical position of voxel `c` relative to the grid center.
    pub fn position(&self, c: [usize; 3]) -> Vec3 {
        Vec3::from_fn(|a, _| (c[a] as f64 - (self.dims[a] - 1) as f64 / 2.0) * self.spacing[a]) + self.offset
    }

    /// Orientation frame `[d, e2, e3]` (columns) of the unrotated field at
    /// `q`, or `None` on the circular singularity.
    pub fn frame_at(&self, q: &Vec3) -> Option<Mat3> {
        let width = (self.dims[0] - 1) as f64 * self.spacing[0];
        let psi = match self.kind {
            SynthKind::Helical => self.angle * q.x,
            _ => self.angle * q.x / width,
        };
        let (s, c) = psi.sin_cos();
        let cols = match self.kind {
            SynthKind::Splay => [Vec3::new(-s, c, 0.0), Vec3::new(c, s, 0.0), Vec3::z()],
            SynthKind::Bend => [Vec3::new(c, s, 0.0), Vec3::new(-s, c, 0.0), Vec3::z()],
            SynthKind::Twist | SynthKind::Helical => [Vec3::new(0.0, c, s), Vec3::new(0.0, -s, c), Vec3::x()],
            SynthKind::CircleBend | SynthKind::CircleSplay => {
                let r = (q.x * q.x + q.y * q.y).sqrt();
                if r < 1e-9 * self.spacing[0].min(self.spacing[1]) {
                    return None;
                }
                let radial = Vec3::new(q.x / r, q.y / r, 0.0);
                let tangential = Vec3::new(-q.y / r, q.x / r, 0.0);
                if self.kind == SynthKind::CircleBend {
                    [tangential, radial, Vec3::z()]
                } else {
                    [radial, tangential, Vec3::z()]
                }
            }
        };
        Some(Mat3::from_columns(&cols))
    }

    /// Eigenvalues for row `j` under the mode profile.
    pub fn row_eigenvalues(&self, j: usize) -> [f64; 3] {
        match self.mode_range {
            None => self.eigenvalues,
            Some((bottom, top)) => {
                let t = j as f64 / (self.dims[1] - 1) as f64;
                eigenvalues_with_mode(self.eigenvalues, bottom + (top - bottom) * t)
            }
        }
    }
}

/// `[λ1, λ2, λ3]` with λ2 moved within `[λ3, (λ1 + λ3)/2]` so the tensor
/// mode equals `mode ∈ [0, 1]`.
pub fn eigenvalues_with_mode(base: [f64; 3], mode: f64) -> [f64; 3] {
    let [l1, _, l3] = base;
    let mode_of = |l2: f64| {
        let m = (l1 + l2 + l3) / 3.0;
        let d = [l1 - m, l2 - m, l3 - m];
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        3.0 * 6f64.sqrt() * d[0] * d[1] * d[2] / (n * n * n)
    };
    // Mode falls monotonically from 1 at λ2 = λ3 to 0 at the midpoint.
    let (mut lo, mut hi) = (l3, 0.5 * (l1 + l3));
    if mode >= 1.0 {
        return [l1, l3, l3];
    }
    if mode <= 0.0 {
        return [l1, hi, l3];
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mode_of(mid) > mode {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    [l1, 0.5 * (lo + hi), l3]
}

/// A generated field: tensors, their analytic principal peaks and the
/// voxels where the orientation is singular.
#[derive(Debug, Clone)]
pub struct SynthField {
    pub tensors: TensorVolume,
    /// One peak per voxel along the construction axis, weighted by the
    /// tensor ODF value there; empty at singular voxels.
    pub peaks: PeakField,
    /// 1 where the orientation is undefined.
    pub singular: MaskVolume,
}

impl SynthField {
    /// SH ODF volume of the tensors.
    pub fn odf(&self, max_order: usize) -> Result<ShVolume> {
        tensor_field_odf(&self.tensors, max_order)
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<SynthField> {
    spec.validate()?;
    let g = spec.rotation;
    let voxels: Volume<Result<(SpdTensor, Vec<WeightedDirector>, u8)>> =
        Volume::from_fn(spec.dims, spec.spacing, |c| {
            let lambda = spec.row_eigenvalues(c[1]);
            let q = g.transpose() * spec.position(c);
            match spec.frame_at(&q) {
                Some(frame) => {
                    let r = g * frame;
                    let tensor = SpdTensor::from_eigen(lambda, &r)?;
                    let weight = lambda[0] / (4.0 * PI * (lambda[1] * lambda[2]).sqrt());
                    let peak = WeightedDirector::new(canonical_sign(r.column(0).into_owned()), weight)?;
                    Ok((tensor, vec![peak], 0))
                }
                None => {
                    let mean = lambda.iter().sum::<f64>() / 3.0;
                    Ok((SpdTensor::new(Mat3::identity() * mean)?, Vec::new(), 1))
                }
            }
        })?;
    let mut tensors = Vec::with_capacity(voxels.len());
    let mut peaks = Vec::with_capacity(voxels.len());
    let mut singular = Vec::with_capacity(voxels.len());
    for v in voxels.data() {
        let (t, p, s) = v.clone()?;
        tensors.push(t);
        peaks.push(p);
        singular.push(s);
    }
    Ok(SynthField {
        tensors: voxels.with_data(tensors)?,
        peaks: voxels.with_data(peaks)?,
        singular: voxels.with_data(singular)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{director_angle, rotation_about};
    use approx::assert_relative_eq;

    #[test]
    fn twist_angle_per_voxel() {
        let f = generate(&SyntheticSpec::new(SynthKind::Twist)).unwrap();
        let a = f.peaks.get([4, 3, 1])[0].axis();
        let b = f.peaks.get([5, 3, 1])[0].axis();
        assert_relative_eq!(director_angle(&a, &b), PI / 31.0, epsilon = 1e-12);
        assert_relative_eq!(a.x, 0.0);
    }

    #[test]
    fn zero_angle_is_constant() {
        for kind in [SynthKind::Splay, SynthKind::Bend, SynthKind::Twist] {
            let spec = SyntheticSpec {
                angle: 0.0,
                ..SyntheticSpec::new(kind)
            };
            let f = generate(&spec).unwrap();
            let first = f.tensors.data()[0];
            assert!(f.tensors.data().iter().all(|t| *t == first));
        }
    }

    #[test]
    fn mode_sweep_keeps_orientations() {
        let base = SyntheticSpec::new(SynthKind::Bend);
        let swept = SyntheticSpec {
            mode_range: Some((1.0, 0.0)),
            ..base.clone()
        };
        let a = generate(&base).unwrap();
        let b = generate(&swept).unwrap();
        for (pa, pb) in a.peaks.data().iter().zip(b.peaks.data()) {
            assert_eq!(pa[0].axis(), pb[0].axis());
        }
        for (j, expected) in [(0, 1.0), (15, 0.0), (5, 2.0 / 3.0)] {
            let t = b.tensors.get([3, j, 1]);
            assert_relative_eq!(t.mode(), expected, epsilon = 1e-9);
            assert!(director_angle(&t.principal_axis(), &b.peaks.get([3, j, 1])[0].axis()) < 1e-9);
        }
    }

    #[test]
    fn mode_bisection_hits_targets() {
        for m in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let l = eigenvalues_with_mode([1.7e-3, 0.2e-3, 0.2e-3], m);
            let t = SpdTensor::from_eigen(l, &Mat3::identity()).unwrap();
            assert_relative_eq!(t.mode(), m, epsilon = 1e-9);
        }
    }

    #[test]
    fn circle_center_is_singular() {
        let spec = SyntheticSpec {
            dims: [5, 5, 3],
            ..SyntheticSpec::new(SynthKind::CircleBend)
        };
        let f = generate(&spec).unwrap();
        assert_eq!(*f.singular.get([2, 2, 1]), 1);
        assert!(f.peaks.get([2, 2, 0]).is_empty());
        assert_eq!(f.singular.data().iter().filter(|&&s| s == 1).count(), 3);
        assert_relative_eq!(f.peaks.get([4, 2, 1])[0].axis(), Vec3::y(), epsilon = 1e-15);
        let splay = generate(&SyntheticSpec {
            kind: SynthKind::CircleSplay,
            ..spec
        })
        .unwrap();
        assert_relative_eq!(splay.peaks.get([4, 2, 1])[0].axis(), Vec3::x(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_is_applied_to_axes() {
        let g = rotation_about(&Vec3::new(1.0, 2.0, 3.0).normalize(), 0.7);
        let spec = SyntheticSpec {
            rotation: g,
            dims: [9, 9, 9],
            ..SyntheticSpec::new(SynthKind::Helical)
        };
        let f = generate(&spec).unwrap();
        let p = spec.position([2, 7, 4]);
        let expected = g * spec.frame_at(&(g.transpose() * p)).unwrap().column(0);
        assert!(director_angle(&f.peaks.get([2, 7, 4])[0].axis(), &expected) < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let mut s = SyntheticSpec::new(SynthKind::Splay);
        s.dims = [2, 16, 3];
        assert!(generate(&s).is_err());
        let mut s = SyntheticSpec::new(SynthKind::Splay);
        s.eigenvalues = [0.2e-3, 1.7e-3, 0.2e-3];
        assert!(generate(&s).is_err());
        let mut s = SyntheticSpec::new(SynthKind::Splay);
        s.mode_range = Some((1.0, -0.5));
        assert!(generate(&s).is_err());
        assert!("spiral".parse::<SynthKind>().is_err());
    }
}
