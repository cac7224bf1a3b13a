//! Symmetric positive-definite tensors and their model ODF.

use std::f64::consts::PI;

use super::basis::ShCoefficients;
use super::fit::projector;
use crate::director::WeightedDirector;
use crate::error::{DfaError, Result};
use crate::linalg::{sym_eigen3, Mat3, SymEigen3, Vec3};

/// A 3×3 symmetric positive-definite tensor (diffusion units, mm²/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdTensor {
    matrix: Mat3,
    eigen: SymEigen3,
}

impl SpdTensor {
    pub fn new(matrix: Mat3) -> Result<Self> {
        let scale = matrix.amax();
        if !(scale.is_finite() && scale > 0.0) || (matrix - matrix.transpose()).amax() > 1e-12 * scale {
            return Err(DfaError::NotSpd);
        }
        let eigen = sym_eigen3(&matrix);
        if !(eigen.values[2] > 0.0) {
            return Err(DfaError::NotSpd);
        }
        Ok(Self { matrix, eigen })
    }

    /// From `[Dxx, Dxy, Dxz, Dyy, Dyz, Dzz]`.
    pub fn from_components(c: [f64; 6]) -> Result<Self> {
        Self::new(Mat3::new(c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5]))
    }

    /// `R·diag(λ)·Rᵀ` for eigenvalues `lambda` and eigenvector columns of `r`.
    pub fn from_eigen(lambda: [f64; 3], r: &Mat3) -> Result<Self> {
        let m = r * Mat3::from_diagonal(&Vec3::new(lambda[0], lambda[1], lambda[2])) * r.transpose();
        Self::new((m + m.transpose()) * 0.5)
    }

    /// Axially symmetric tensor with principal axis `axis`.
    pub fn prolate(axis: &Vec3, l1: f64, l2: f64) -> Result<Self> {
        let a = axis.normalize();
        Self::new(Mat3::identity() * l2 + a * a.transpose() * (l1 - l2))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn components(&self) -> [f64; 6] {
        let m = &self.matrix;
        [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)], m[(2, 2)]]
    }

    pub fn eigen(&self) -> &SymEigen3 {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        self.eigen.values
    }

    pub fn principal_axis(&self) -> Vec3 {
        self.eigen.vector(0)
    }

    /// Fractional anisotropy.
    pub fn fa(&self) -> f64 {
        fractional_anisotropy(&self.matrix)
    }

    /// Mode of the deviatoric part, in `[-1, 1]`.
    pub fn mode(&self) -> f64 {
        tensor_mode(&self.matrix)
    }

    /// `Φ(u) = 1 / (4π·|D|^{1/2}·(uᵀD⁻¹u)^{3/2})`.
    pub fn odf(&self, u: &Vec3) -> f64 {
        let e = &self.eigen;
        let mut q = 0.0;
        for k in 0..3 {
            let p = e.vector(k).dot(u);
            q += p * p / e.values[k];
        }
        q /= u.norm_squared();
        1.0 / (4.0 * PI * (e.values[0] * e.values[1] * e.values[2]).sqrt() * q.powf(1.5))
    }

    /// Principal eigenvector weighted by the ODF value there,
    /// `λ₁/(4π√(λ₂λ₃))`.
    pub fn principal_peak(&self) -> WeightedDirector {
        let l = self.eigen.values;
        WeightedDirector::new(self.eigen.vector(0), l[0] / (4.0 * PI * (l[1] * l[2]).sqrt()))
            .expect("eigenvectors are unit")
    }
}

/// Fractional anisotropy `√(3/2)·‖D − tr(D)/3·I‖ / ‖D‖` (zero for a zero matrix).
pub fn fractional_anisotropy(d: &Mat3) -> f64 {
    let norm = d.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let dev = d - Mat3::identity() * (d.trace() / 3.0);
    ((1.5f64).sqrt() * dev.norm() / norm).min(1.0)
}

/// Tensor mode `3√6·det(Â)` with `Â` the unit-norm deviatoric part
/// (zero when the deviatoric part vanishes).
pub fn tensor_mode(d: &Mat3) -> f64 {
    let dev = d - Mat3::identity() * (d.trace() / 3.0);
    let n = dev.norm();
    if n <= 1e-15 * d.norm() || n == 0.0 {
        return 0.0;
    }
    (3.0 * 6f64.sqrt() * (dev / n).determinant()).clamp(-1.0, 1.0)
}

/// `Φ(u|D)` for a tensor given as a matrix.
pub fn tensor_odf(d: &Mat3, u: &Vec3) -> Result<f64> {
    Ok(SpdTensor::new(*d)?.odf(u))
}

/// SH coefficients of the tensor ODF by quadrature projection.
pub fn tensor_odf_sh(d: &SpdTensor, max_order: usize) -> Result<ShCoefficients> {
    Ok(projector(max_order)?.project(|u| d.odf(u)))
}
