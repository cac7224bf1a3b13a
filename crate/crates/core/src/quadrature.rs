//! Product Gauss–Legendre × trapezoid quadrature on the unit sphere.
//!
//! Used to regenerate frozen constants and as an independent reference for
//! integrals of smooth spherical functions.

use crate::linalg::Vec3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature nodes on the unit sphere with weights summing to 4π.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// `n_theta` Gauss–Legendre nodes in `cos θ` times `n_phi` equispaced
    /// azimuths. Exact for polynomials of degree `< min(2·n_theta, n_phi)`.
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let (z, wz) = gauss_legendre(n_theta);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                points.push(Vec3::new(s * phi.cos(), s * phi.sin(), *zi));
                weights.push(wi * dphi);
            }
        }
        Self { points, weights }
    }

    /// A rule accurate to ~1e-12 for the moderately peaked functions used in
    /// the tests (Watson up to κ≈100, tensor ODFs up to anisotropy ratio ≈100).
    pub fn dense() -> Self {
        Self::product(400, 400)
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        let mut acc = 0.0;
        let mut comp = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            // Kahan summation keeps the reference sums near machine precision.
            let y = w * f(p) - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        acc
    }
}
