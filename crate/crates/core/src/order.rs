//! Orientational order (OO) and dispersion (OD): the orientational tensor,
//! the order transform along an axis, closed forms for model distributions
//! and per-voxel maps along the principal peak.

use std::f64::consts::PI;

use crate::director::{main_eigenpair, MainDirector};
use crate::error::{DfaError, Result};
use crate::linalg::{rotation_between, Mat3, Vec3};
use crate::special::dawson;
use crate::sphere::{rotate_sh, sh_basis, PeakDetector, PeakParams, ShCoefficients, ShVolume, SphereMesh};
use crate::volume::{MaskVolume, ScalarVolume};

/// `∫ u_i u_j Y dS` for the six `l ≤ 2` basis functions, rows ordered
/// `(Y00, Y2-2, Y2-1, Y20, Y21, Y22)` and columns `(xx, xy, xz, yy, yz, zz)`.
/// Regenerated by quadrature in the tests.
pub const Q_MAP: [[f64; 6]; 6] = {
    const R4PI_3: f64 = 1.181_635_900_603_677_2; // √(4π)/3
    const A: f64 = 0.915_291_232_863_768_9; // 2√(π/15)
    const Z: f64 = 1.056_887_279_361_602_9; // (4/3)√(π/5)
    const H: f64 = 0.528_443_639_680_801_4; // (2/3)√(π/5)
    [
        [R4PI_3, 0.0, 0.0, R4PI_3, 0.0, R4PI_3],
        [A, 0.0, 0.0, -A, 0.0, 0.0],
        [0.0, 0.0, -A, 0.0, 0.0, 0.0],
        [-H, 0.0, 0.0, -H, 0.0, Z],
        [0.0, 0.0, 0.0, 0.0, -A, 0.0],
        [0.0, A, 0.0, 0.0, 0.0, 0.0],
    ]
};

/// Second moment `Q(f) = ∫ uuᵀ f(u) dS` of a spherical function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationalTensor(pub Mat3);

impl OrientationalTensor {
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// `(3/2)·nᵀQn − (1/2)·tr Q`; `tr Q = ∫f`.
    pub fn oo(&self, n: &Vec3) -> f64 {
        let n = n.normalize();
        1.5 * n.dot(&(self.0 * n)) - 0.5 * self.0.trace()
    }

    /// Dominant eigenvector (main orientation) with a degeneracy flag.
    pub fn main_orientation(&self) -> MainDirector {
        main_eigenpair(&self.0)
    }
}

/// Exact `Q(f)` from the `l ≤ 2` coefficients.
pub fn orientational_tensor(c: &ShCoefficients) -> OrientationalTensor {
    let input = [c.get(0, 0), c.get(2, -2), c.get(2, -1), c.get(2, 0), c.get(2, 1), c.get(2, 2)];
    let mut q = [0.0; 6];
    for (row, ci) in Q_MAP.iter().zip(input) {
        for k in 0..6 {
            q[k] += row[k] * ci;
        }
    }
    OrientationalTensor(Mat3::new(q[0], q[1], q[2], q[1], q[3], q[4], q[2], q[4], q[5]))
}

/// Orientational order transform `OO(n) = ∫ P₂(uᵀn) f(u) dS`, via `Q(f)`.
pub fn oot(c: &ShCoefficients, n: &Vec3) -> f64 {
    orientational_tensor(c).oo(n)
}

/// `OO(n)` as `√(4π/5)·a₂₀` with `a₂₀` the `(2,0)` coefficient of the
/// function rotated so that `n` lies on `z`, obtained through the addition
/// theorem `a₂₀ = √(4π/5)·Σ_m c₂ₘ Y₂ₘ(n)`.
pub fn oot_sh(c: &ShCoefficients, n: &Vec3) -> f64 {
    let n = n.normalize();
    let a20: f64 = (-2..=2)
        .map(|m| c.get(2, m) * sh_basis(2, m, &n).expect("|m| ≤ 2"))
        .sum::<f64>()
        * (4.0 * PI / 5.0).sqrt();
    (4.0 * PI / 5.0).sqrt() * a20
}

/// `OO(n)` by explicitly rotating the order-2 part so that `n` maps to `z`
/// and reading `√(4π/5)·a₂₀`.
pub fn oot_rotated(c: &ShCoefficients, n: &Vec3) -> f64 {
    let r = rotation_between(&n.normalize(), &Vec3::z());
    let rotated = rotate_sh(&c.resized(2).expect("order 2 is even"), &r);
    (4.0 * PI / 5.0).sqrt() * rotated.get(2, 0)
}

/// Order, dispersion and the axis used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OoResult {
    pub oo: f64,
    pub od: f64,
    pub axis: Vec3,
}

impl OoResult {
    pub fn new(oo: f64, axis: Vec3) -> Self {
        Self { oo, od: 1.0 - oo, axis }
    }
}

/// OO of an axisymmetric function about `n₀`, at angle `phi` from `n₀`:
/// `((1 + 3cos 2φ)/4)·2π·a₂`, where `a₂` is the second Legendre coefficient
/// of the profile on `[-1, 1]`.
pub fn oo_axisymmetric(a2: f64, phi: f64) -> f64 {
    (1.0 + 3.0 * (2.0 * phi).cos()) / 4.0 * 2.0 * PI * a2
}

/// OO of the Watson distribution along its mean axis,
/// `3/(4√κ·D(√κ)) − (3 + 2κ)/(4κ)` with `D` Dawson's integral.
///
/// For `κ ≤ 10` the closed form cancels badly, so the ratio of Kummer
/// series `1.5·(M′ − M/3)/M` with `M = M(½, 3/2, κ)` is summed instead;
/// both series have positive terms.
pub fn oo_watson(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(DfaError::InvalidArgument(format!("Watson concentration must be positive, got {kappa}")));
    }
    if kappa <= 10.0 {
        let (mut term, mut m, mut dm) = (1.0, 1.0, 0.0);
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= kappa / n;
            let a = term / (2.0 * n + 1.0);
            let b = term * 4.0 * n / (3.0 * (2.0 * n + 1.0) * (2.0 * n + 3.0));
            m += a;
            dm += b;
            if n > kappa && a < m * 1e-17 && b < dm * 1e-17 {
                break;
            }
        }
        return Ok(1.5 * dm / m);
    }
    let s = kappa.sqrt();
    Ok(3.0 / (4.0 * s * dawson(s)) - (3.0 + 2.0 * kappa) / (4.0 * kappa))
}

pub fn od_watson(kappa: f64) -> Result<f64> {
    Ok(1.0 - oo_watson(kappa)?)
}

/// Orientation dispersion index `(2/π)·atan(1/κ)` used by NODDI.
pub fn od_w(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(DfaError::InvalidArgument(format!("Watson concentration must be positive, got {kappa}")));
    }
    Ok(2.0 / PI * (1.0 / kappa).atan())
}

/// OO along the principal axis of the ODF of a prolate tensor with
/// eigenvalues `(l1, l2, l2)`.
pub fn oo_prolate_tensor(l1: f64, l2: f64) -> Result<f64> {
    if !(l2 > 0.0) {
        return Err(DfaError::InvalidArgument(format!("eigenvalues must be positive, got {l2}")));
    }
    if l1 < l2 {
        return Err(DfaError::Oblate);
    }
    let e = l1 / l2 - 1.0;
    if e < 1e-3 {
        return Ok(e * (1.0 / 5.0 - e * (3.0 / 35.0 - e * (1.0 / 21.0 - e / 33.0))));
    }
    let se = e.sqrt();
    Ok((se * (2.0 * (1.0 + e) + 1.0) - 3.0 * (1.0 + e) * se.atan()) / (2.0 * e * se))
}

/// Upper bound `√(4π·c₀₀²/5)·√(1/(1 − GFA²) − 1)` of `OO(n)` over all axes.
pub fn oo_upper_bound(gfa: f64, c00: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gfa) {
        return Err(DfaError::InvalidArgument(format!("GFA must lie in [0, 1), got {gfa}")));
    }
    Ok((4.0 * PI * c00 * c00 / 5.0).sqrt() * (1.0 / (1.0 - gfa * gfa) - 1.0).sqrt())
}

/// OO function of a mixture, `n ↦ Σ wᵢ·OOᵢ(n)`; weights must sum to one.
pub fn oo_mixture<'a>(
    components: Vec<(f64, Box<dyn Fn(&Vec3) -> f64 + 'a>)>,
) -> Result<impl Fn(&Vec3) -> f64 + 'a> {
    let total: f64 = components.iter().map(|c| c.0).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(DfaError::InvalidArgument(format!("mixture weights sum to {total}")));
    }
    Ok(move |n: &Vec3| components.iter().map(|(w, f)| w * f(n)).sum())
}

/// Spatial weighting for regional orientational tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionWeights {
    Uniform,
    /// `exp(−‖x − center‖²/2σ²)` in voxel units.
    Gaussian { center: [f64; 3], sigma: f64 },
}

/// Weighted sum of per-voxel orientational tensors over `region`, with the
/// weights normalized to sum to one.
pub fn region_orientational_tensor(
    field: &ShVolume,
    region: &[[usize; 3]],
    weights: RegionWeights,
) -> Result<OrientationalTensor> {
    if region.is_empty() {
        return Err(DfaError::EmptyRegion);
    }
    let w: Vec<f64> = region
        .iter()
        .map(|x| match weights {
            RegionWeights::Uniform => 1.0,
            RegionWeights::Gaussian { center, sigma } => {
                let d2: f64 = (0..3).map(|a| (x[a] as f64 - center[a]).powi(2)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(DfaError::InvalidArgument("region weights vanish".into()));
    }
    let mut q = Mat3::zeros();
    for (x, wi) in region.iter().zip(&w) {
        if !field.contains([x[0] as isize, x[1] as isize, x[2] as isize]) {
            return Err(DfaError::InvalidArgument(format!("voxel {x:?} outside the volume")));
        }
        q += orientational_tensor(field.get(*x)).0 * (wi / total);
    }
    Ok(OrientationalTensor(q))
}

/// Per-voxel OO/OD maps with the validity mask (1 where a principal peak
/// exists; OO = 0 and OD = 1 elsewhere).
#[derive(Debug, Clone, PartialEq)]
pub struct OoOdMaps {
    pub oo: ScalarVolume,
    pub od: ScalarVolume,
    pub mask: MaskVolume,
}

/// OO and OD along each voxel's principal peak: detect peaks, rotate the
/// principal peak onto `z` and read `√(4π/5)·a₂₀`.
pub fn oo_od_maps(volume: &ShVolume, mesh: &SphereMesh, params: &PeakParams) -> OoOdMaps {
    let order = volume.data().first().map_or(8, |c| c.max_order());
    let detector = PeakDetector::new(mesh.clone(), order);
    let results = volume.map(|c| {
        detector
            .detect(c, params)
            .first()
            .map(|p| OoResult::new(oot_rotated(c, &p.axis()), p.axis()))
    });
    OoOdMaps {
        oo: results.map(|r| r.map_or(0.0, |r| r.oo)),
        od: results.map(|r| r.map_or(1.0, |r| r.od)),
        mask: results.map(|r| u8::from(r.is_some())),
    }
}
