//! ODF maxima: mesh search refined by gradient ascent on the sphere.

use nalgebra::{DMatrix, DVector};

use super::basis::{gfa, num_coeffs, sh_row, ShCoefficients};
use super::mesh::SphereMesh;
use crate::director::WeightedDirector;
use crate::linalg::{director_angle, orthonormal_complement, Vec3};

/// Peak extraction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    /// Voxels with GFA below this value have no peaks.
    pub gfa_threshold: f64,
    /// Peaks below this fraction of the largest value are discarded.
    pub peak_ratio: f64,
    /// Peaks closer than this (degrees) merge into the larger one.
    pub merge_angle_deg: f64,
    pub max_peaks: Option<usize>,
    /// Initial ascent step in radians.
    pub initial_step: f64,
    pub max_iterations: usize,
    /// Ascent stops when an accepted step improves the value by less.
    pub tolerance: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            gfa_threshold: 0.3,
            peak_ratio: 0.5,
            merge_angle_deg: 5.0,
            max_peaks: None,
            initial_step: 0.1,
            max_iterations: 100,
            tolerance: 1e-12,
        }
    }
}

/// A mesh with its SH basis matrix precomputed for one order.
#[derive(Debug, Clone)]
pub struct PeakDetector {
    mesh: SphereMesh,
    max_order: usize,
    basis: DMatrix<f64>,
}

impl PeakDetector {
    pub fn new(mesh: SphereMesh, max_order: usize) -> Self {
        let n = num_coeffs(max_order);
        let mut basis = DMatrix::zeros(mesh.len(), n);
        let mut row = vec![0.0; n];
        for (i, v) in mesh.vertices().iter().enumerate() {
            sh_row(max_order, v, &mut row);
            for (j, y) in row.iter().enumerate() {
                basis[(i, j)] = *y;
            }
        }
        Self { mesh, max_order, basis }
    }

    pub fn mesh(&self) -> &SphereMesh {
        &self.mesh
    }

    /// Peaks of `c`, sorted by descending value; the first is the global
    /// maximum.
    pub fn detect(&self, c: &ShCoefficients, params: &PeakParams) -> Vec<WeightedDirector> {
        if c.max_order() != self.max_order {
            let detector = PeakDetector::new(self.mesh.clone(), c.max_order());
            return detector.detect(c, params);
        }
        match gfa(c) {
            Ok(g) if g >= params.gfa_threshold => {}
            _ => return Vec::new(),
        }
        let values = &self.basis * DVector::from_column_slice(c.as_slice());
        let top = values.max();
        // Ascent from a mesh vertex gains far less than half the cutoff, so
        // lower maxima cannot survive the peak-ratio filter.
        let floor = 0.5 * params.peak_ratio * top;
        let mut candidates: Vec<(Vec3, f64)> = Vec::new();
        for i in 0..self.mesh.len() {
            let v = values[i];
            if v <= 0.0 || v < floor {
                continue;
            }
            let nbrs = self.mesh.neighbors(i);
            let mut strict = false;
            let mut is_max = true;
            for &j in nbrs {
                if values[j] > v {
                    is_max = false;
                    break;
                }
                if values[j] < v {
                    strict = true;
                }
            }
            if is_max && strict {
                candidates.push(ascend(c, self.mesh.vertices()[i], params));
            }
        }
        select_peaks(candidates, params)
    }
}

/// Newton iteration in the tangent plane with finite-difference derivatives,
/// falling back to a backtracked gradient step where the local Hessian is
/// not negative definite or the Newton step fails to increase the value.
fn ascend(c: &ShCoefficients, start: Vec3, params: &PeakParams) -> (Vec3, f64) {
    let mut row = vec![0.0; c.as_slice().len()];
    let mut f = |u: &Vec3| {
        sh_row(c.max_order(), u, &mut row);
        row.iter().zip(c.as_slice()).map(|(y, a)| y * a).sum::<f64>()
    };
    let tangent_step = |p: &Vec3, t: Vec3| -> Vec3 {
        let n = t.norm();
        if n == 0.0 {
            *p
        } else {
            (p * n.cos() + t * (n.sin() / n)).normalize()
        }
    };
    let h = 1e-4;
    let mut p = start;
    let mut value = f(&p);
    let mut step = params.initial_step;
    for _ in 0..params.max_iterations {
        let (t1, t2) = orthonormal_complement(&p);
        let at = |a: f64, b: f64| tangent_step(&p, t1 * a + t2 * b);
        let (fp1, fm1) = (f(&at(h, 0.0)), f(&at(-h, 0.0)));
        let (fp2, fm2) = (f(&at(0.0, h)), f(&at(0.0, -h)));
        let fpp = f(&at(h, h));
        let fmm = f(&at(-h, -h));
        let fpm = f(&at(h, -h));
        let fmp = f(&at(-h, h));
        let g = [(fp1 - fm1) / (2.0 * h), (fp2 - fm2) / (2.0 * h)];
        let h11 = (fp1 - 2.0 * value + fm1) / (h * h);
        let h22 = (fp2 - 2.0 * value + fm2) / (h * h);
        let h12 = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
        let gn = g[0].hypot(g[1]);
        if gn == 0.0 {
            break;
        }
        let det = h11 * h22 - h12 * h12;
        let mut moved = false;
        if h11 < 0.0 && det > 0.0 {
            let a = -(h22 * g[0] - h12 * g[1]) / det;
            let b = -(-h12 * g[0] + h11 * g[1]) / det;
            let len = a.hypot(b);
            if len < 1e-9 {
                return (p, value);
            }
            if len <= params.initial_step {
                let cand = tangent_step(&p, t1 * a + t2 * b);
                let fc = f(&cand);
                if fc >= value {
                    let gain = fc - value;
                    p = cand;
                    value = fc;
                    if gain < params.tolerance || len < 1e-12 {
                        return (p, value);
                    }
                    moved = true;
                }
            }
        }
        if !moved {
            let (d1, d2) = (g[0] / gn, g[1] / gn);
            let curvature = h11 * d1 * d1 + 2.0 * h12 * d1 * d2 + h22 * d2 * d2;
            if curvature < 0.0 {
                step = (gn / -curvature).clamp(1e-9, params.initial_step);
            }
            let dir = t1 * d1 + t2 * d2;
            while step > 1e-9 {
                let cand = tangent_step(&p, dir * step);
                let fc = f(&cand);
                if fc > value {
                    p = cand;
                    value = fc;
                    moved = true;
                    step = (step * 2.0).min(params.initial_step);
                    break;
                }
                step *= 0.5;
            }
        }
        if !moved {
            break;
        }
    }
    (p, value)
}

fn select_peaks(mut candidates: Vec<(Vec3, f64)>, params: &PeakParams) -> Vec<WeightedDirector> {
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    let merge = params.merge_angle_deg.to_radians();
    let mut kept: Vec<(Vec3, f64)> = Vec::new();
    for (u, v) in candidates {
        if kept.iter().any(|(k, _)| director_angle(k, &u) < merge) {
            continue;
        }
        kept.push((u, v));
    }
    let Some(&(_, top)) = kept.first() else {
        return Vec::new();
    };
    if !(top > 0.0) {
        return Vec::new();
    }
    let limit = params.max_peaks.unwrap_or(usize::MAX);
    kept.into_iter()
        .filter(|(_, v)| *v >= params.peak_ratio * top)
        .take(limit)
        .filter_map(|(u, v)| WeightedDirector::new(u, v).ok().map(|d| d.canonical()))
        .collect()
}

/// Peaks of `c` on `mesh` with the given thresholds and default ascent
/// settings.
pub fn detect_peaks(c: &ShCoefficients, mesh: &SphereMesh, gfa_threshold: f64, peak_ratio: f64) -> Vec<WeightedDirector> {
    let params = PeakParams {
        gfa_threshold,
        peak_ratio,
        ..PeakParams::default()
    };
    PeakDetector::new(mesh.clone(), c.max_order()).detect(c, &params)
}
