//! Least-squares SH fitting and rotation by resampling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::basis::{num_coeffs, sh_row, ShCoefficients};
use super::mesh::SphereMesh;
use crate::error::{DfaError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::quadrature::SphereQuadrature;

const RANK_TOL: f64 = 1e-10;

/// Coefficients with the Euclidean norm of the sample residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ShFit {
    pub coeffs: ShCoefficients,
    pub residual: f64,
}

/// A least-squares fitter for a fixed sample set, with its pseudo-inverse
/// precomputed.
#[derive(Debug, Clone)]
pub struct ShFitter {
    max_order: usize,
    points: Vec<Vec3>,
    design: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl ShFitter {
    pub fn new(points: Vec<Vec3>, max_order: usize) -> Result<Self> {
        if !max_order.is_multiple_of(2) {
            return Err(DfaError::InvalidArgument(format!("SH order must be even, got {max_order}")));
        }
        let n = num_coeffs(max_order);
        if points.len() < n {
            return Err(DfaError::InsufficientSamples {
                needed: n,
                got: points.len(),
            });
        }
        let mut design = DMatrix::zeros(points.len(), n);
        let mut row = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            sh_row(max_order, p, &mut row);
            for (j, v) in row.iter().enumerate() {
                design[(i, j)] = *v;
            }
        }
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > smax * RANK_TOL) {
            return Err(DfaError::RankDeficient {
                condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            });
        }
        let pinv = svd
            .pseudo_inverse(smax * RANK_TOL)
            .map_err(|e| DfaError::InvalidArgument(e.to_string()))?;
        Ok(Self {
            max_order,
            points,
            design,
            pinv,
        })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Fits sample `values`, one per point.
    pub fn fit(&self, values: &[f64]) -> Result<ShFit> {
        if values.len() != self.points.len() {
            return Err(DfaError::DimensionMismatch(format!(
                "{} samples for {} points",
                values.len(),
                self.points.len()
            )));
        }
        let y = DVector::from_column_slice(values);
        let c = &self.pinv * &y;
        let residual = (&self.design * &c - y).norm();
        Ok(ShFit {
            coeffs: ShCoefficients::new(self.max_order, c.as_slice().to_vec())?,
            residual,
        })
    }

    /// Fits `f` sampled at the fitter's points.
    pub fn fit_fn(&self, f: impl Fn(&Vec3) -> f64) -> Result<ShFit> {
        let values: Vec<f64> = self.points.iter().map(f).collect();
        self.fit(&values)
    }
}

/// Least-squares SH fit of `(direction, value)` samples.
pub fn sh_fit(samples: &[(Vec3, f64)], max_order: usize) -> Result<ShFit> {
    let fitter = ShFitter::new(samples.iter().map(|s| s.0).collect(), max_order)?;
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    fitter.fit(&values)
}

/// Direct synthesis `Σ c_{l,m} Y_l^m(u)`.
pub fn sh_eval(c: &ShCoefficients, u: &Vec3) -> f64 {
    c.eval(u)
}

/// Shared fitter on a hemisphere icosphere with at least twice as many
/// points as coefficients.
pub fn resampling_fitter(max_order: usize) -> Arc<ShFitter> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ShFitter>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(max_order)
        .or_insert_with(|| {
            let mesh = SphereMesh::with_at_least(2 * num_coeffs(max_order));
            Arc::new(
                ShFitter::new(mesh.vertices().to_vec(), max_order)
                    .expect("icosphere sampling is well conditioned for even SH"),
            )
        })
        .clone()
}

/// Quadrature projection `c_lm = ∫ f·Y_lm dS` of antipodally symmetric
/// functions onto even SH, using the upper half of a product Gauss rule.
///
/// Unlike a least-squares fit on a fixed mesh, the truncated projection
/// commutes with rotations up to the rule's aliasing error.
#[derive(Debug, Clone)]
pub struct ShProjector {
    max_order: usize,
    points: Vec<Vec3>,
    /// `w_p·Y_lm(u_p)`, one row per coefficient.
    weighted: DMatrix<f64>,
}

impl ShProjector {
    /// Rule with `n_theta` latitude nodes (even) and `2·n_theta` azimuths,
    /// exact for integrands of degree below `2·n_theta`.
    pub fn new(max_order: usize, n_theta: usize) -> Result<Self> {
        if !max_order.is_multiple_of(2) {
            return Err(DfaError::InvalidArgument(format!("SH order must be even, got {max_order}")));
        }
        if !n_theta.is_multiple_of(2) || n_theta <= max_order {
            return Err(DfaError::InvalidArgument(format!(
                "latitude count must be even and above the order, got {n_theta}"
            )));
        }
        let rule = SphereQuadrature::product(n_theta, 2 * n_theta);
        let n = num_coeffs(max_order);
        let (points, weights): (Vec<Vec3>, Vec<f64>) = rule
            .points
            .iter()
            .zip(&rule.weights)
            .filter(|(p, _)| p.z > 0.0)
            .map(|(p, w)| (*p, 2.0 * w))
            .unzip();
        let mut weighted = DMatrix::zeros(n, points.len());
        let mut row = vec![0.0; n];
        for (i, (p, w)) in points.iter().zip(&weights).enumerate() {
            sh_row(max_order, p, &mut row);
            for (j, y) in row.iter().enumerate() {
                weighted[(j, i)] = w * y;
            }
        }
        Ok(Self {
            max_order,
            points,
            weighted,
        })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn project(&self, f: impl Fn(&Vec3) -> f64) -> ShCoefficients {
        let values = DVector::from_iterator(self.points.len(), self.points.iter().map(f));
        let c = &self.weighted * values;
        ShCoefficients::new(self.max_order, c.as_slice().to_vec()).expect("order checked at construction")
    }
}

/// Shared projector for `max_order`, exact for integrands up to degree
/// `2·(max_order + 48) − 1`.
pub fn projector(max_order: usize) -> Result<Arc<ShProjector>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ShProjector>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(p) = guard.get(&max_order) {
        return Ok(p.clone());
    }
    let p = Arc::new(ShProjector::new(max_order, max_order + 48)?);
    guard.insert(max_order, p.clone());
    Ok(p)
}

/// Coefficients of the rotated function `(Rf)(u) = f(Rᵀu)`.
pub fn rotate_sh(c: &ShCoefficients, r: &Mat3) -> ShCoefficients {
    let fitter = resampling_fitter(c.max_order());
    let rt = r.transpose();
    let mut row = vec![0.0; c.as_slice().len()];
    let values: Vec<f64> = fitter
        .points()
        .iter()
        .map(|p| {
            sh_row(c.max_order(), &(rt * p), &mut row);
            row.iter().zip(c.as_slice()).map(|(y, a)| y * a).sum()
        })
        .collect();
    fitter.fit(&values).expect("sample count matches the fitter").coeffs
}
