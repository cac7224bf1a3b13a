//! Tensor-field analysis: spatial gradients of tensor fields, their
//! contractions to vectors and scalars, rotation tangents and a 4th-order
//! structure tensor.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, Matrix6};

use crate::error::{DfaError, Result};
use crate::linalg::{skew, Mat3, Vec3};
use crate::sphere::SpdTensor;
use crate::volume::{offset, Volume};

/// Voxel values that carry a symmetric 3×3 tensor.
pub trait TensorValue {
    fn tensor(&self) -> Mat3;
}

impl TensorValue for SpdTensor {
    fn tensor(&self) -> Mat3 {
        *self.matrix()
    }
}

impl TensorValue for Mat3 {
    fn tensor(&self) -> Mat3 {
        *self
    }
}

/// `(i, j)` index pairs of the six unique entries of a symmetric 3×3
/// matrix, in `xx, xy, xz, yy, yz, zz` order.
pub const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// `∂D_ij/∂x_k`, stored as one symmetric matrix per spatial axis `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorGradient(pub [Mat3; 3]);

impl TensorGradient {
    pub fn zeros() -> Self {
        Self([Mat3::zeros(); 3])
    }

    /// `D_{ij,k}`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[k][(i, j)]
    }

    /// `Σ D_{ij,k}²`.
    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|m| m.norm_squared()).sum()
    }
}

/// Central differences per mm with replicate boundary.
pub fn tensor_gradient<T: TensorValue>(field: &Volume<T>, x: [usize; 3]) -> TensorGradient {
    let h = field.spacing();
    TensorGradient(std::array::from_fn(|k| {
        let fwd = field.get_clamped(offset(x, k, 1)).tensor();
        let bwd = field.get_clamped(offset(x, k, -1)).tensor();
        (fwd - bwd) / (2.0 * h[k])
    }))
}

/// `W : ∇D`, the gradient of the scalar field `Σ W_ij D_ij`.
pub fn project_gradient_to_vector(w: &Mat3, grad: &TensorGradient) -> Vec3 {
    Vec3::from_fn(|k, _| w.component_mul(&grad.0[k]).sum())
}

/// `W : ∇D : v`, the derivative of `Σ W_ij D_ij` along `v`.
pub fn project_gradient_to_scalar(w: &Mat3, grad: &TensorGradient, v: &Vec3) -> f64 {
    project_gradient_to_vector(w, grad).dot(v)
}

/// `d/dθ [R(θ) D R(θ)ᵀ]` at `θ = 0` for rotation about the `p`-th
/// eigenvector (`p ∈ {1, 2, 3}`, descending eigenvalues).
pub fn rotation_tangent(d: &SpdTensor, p: usize) -> Result<Mat3> {
    if !(1..=3).contains(&p) {
        return Err(DfaError::InvalidArgument(format!("eigenvector index must be 1..=3, got {p}")));
    }
    let l = d.eigenvalues();
    let scale = l[0].abs().max(f64::MIN_POSITIVE);
    if (l[0] - l[1]) / scale < 1e-9 || (l[1] - l[2]) / scale < 1e-9 {
        return Err(DfaError::DegenerateTangent);
    }
    let k = skew(&d.eigen().vector(p - 1));
    let m = d.matrix();
    Ok(k * m - m * k)
}

/// `D_{ij,kl} = D_{ij,k}·D_{ij,l}` with `(ij)` as rows and `(kl)` as
/// columns, both over [`PAIRS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureTensor4(pub Matrix6<f64>);

impl StructureTensor4 {
    /// `D_{ij,kl}` for any index order.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[(pair_index(i, j), pair_index(k, l))]
    }

    /// Eigenvalues of the 6×6 matrix sorted by descending magnitude, and
    /// whether any is complex.
    ///
    /// Returns an error if the Schur iteration fails to converge.
    pub fn eigenvalues(&self) -> Result<(Vec<Complex<f64>>, bool)> {
        let scale = self.0.amax();
        if scale == 0.0 {
            return Ok((vec![Complex::new(0.0, 0.0); 6], false));
        }
        // Balanced by the max entry; the default solver iterates without bound.
        let schur = Schur::try_new(self.0 / scale, f64::EPSILON, 10_000)
            .ok_or_else(|| DfaError::InvalidArgument("structure tensor eigenvalues did not converge".into()))?;
        let mut ev: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().map(|e| e * scale).collect();
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let complex = ev.iter().any(|e| e.im.abs() > 1e-12 * scale);
        Ok((ev, complex))
    }

    /// `Σ W_ij D_{ij,kl} v_k v_l`.
    pub fn contract(&self, w: &Mat3, v: &Vec3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        s += w[(i, j)] * self.get(i, j, k, l) * v[k] * v[l];
                    }
                }
            }
        }
        s
    }
}

/// Position of `(i, j)` in [`PAIRS`], either order.
pub fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = (i.min(j), i.max(j));
    PAIRS.iter().position(|&p| p == (a, b)).expect("indices below 3")
}

pub fn structure_tensor_4(grad: &TensorGradient) -> StructureTensor4 {
    StructureTensor4(Matrix6::from_fn(|r, c| {
        let (i, j) = PAIRS[r];
        let (k, l) = PAIRS[c];
        grad.get(i, j, k) * grad.get(i, j, l)
    }))
}
