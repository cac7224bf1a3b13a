//! Reference implementations used as test oracles. They are written
//! independently of the library code paths they check.

#![allow(dead_code)]

use std::f64::consts::PI;

use dfa::director::WeightedDirector;
use dfa::linalg::{Mat3, Vec3};
use dfa::quadrature::SphereQuadrature;
use dfa::sphere::{num_coeffs, ShCoefficients};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn p2(t: f64) -> f64 {
    1.5 * t * t - 0.5
}

/// `∫ P₂(uᵀn) f(u) dS / ∫ f(u) dS` on the given rule.
pub fn quadrature_oo(rule: &SphereQuadrature, n: &Vec3, f: impl Fn(&Vec3) -> f64) -> f64 {
    let mass = rule.integrate(&f);
    rule.integrate(|u| p2(u.dot(n)) * f(u)) / mass
}

/// `∫ P₂(uᵀn) f(u) dS` without normalization.
pub fn quadrature_oot(rule: &SphereQuadrature, n: &Vec3, f: impl Fn(&Vec3) -> f64) -> f64 {
    rule.integrate(|u| p2(u.dot(n)) * f(u))
}

/// Rule for functions depending only on `z`: many latitude nodes, few
/// azimuths.
pub fn zonal_rule() -> SphereQuadrature {
    SphereQuadrature::product(600, 4)
}

/// Tensor ODF `1/(4π·√det D·(uᵀD⁻¹u)^{3/2})` via a direct inverse.
pub fn tensor_odf_ref(d: &Mat3, u: &Vec3) -> f64 {
    let inv = d.try_inverse().expect("invertible");
    let q = u.dot(&(inv * u));
    1.0 / (4.0 * PI * d.determinant().sqrt() * q.powf(1.5))
}

/// Random coefficients up to `max_order` with unit integral.
pub fn random_sh(rng: &mut ChaCha8Rng, max_order: usize, spread: f64) -> ShCoefficients {
    let mut c: Vec<f64> = (0..num_coeffs(max_order)).map(|_| rng.gen_range(-spread..spread)).collect();
    c[0] = 0.5 / PI.sqrt();
    ShCoefficients::new(max_order, c).unwrap()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Uniform random rotation from a random unit quaternion.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let q = loop {
        let q: nalgebra::Vector4<f64> = nalgebra::Vector4::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            break q / n;
        }
    };
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Largest `‖(1/N)·Σ sᵢ|wᵢ|vᵢ‖` over all `2^N` sign vectors.
pub fn brute_force_mean_norm(dirs: &[WeightedDirector]) -> f64 {
    let n = dirs.len();
    let mut best = f64::NEG_INFINITY;
    let mut best_sum = [0.0; 3];
    for mask in 0..(1u64 << n) {
        let mut acc = [0.0f64; 3];
        for (i, d) in dirs.iter().enumerate() {
            let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 } * d.weight().abs();
            let a = d.axis();
            acc[0] += s * a.x;
            acc[1] += s * a.y;
            acc[2] += s * a.z;
        }
        let v = acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2];
        if v > best {
            best = v;
            best_sum = acc;
        }
    }
    (Vec3::from(best_sum) / n as f64).norm()
}

pub mod strategies {
    use dfa::director::WeightedDirector;
    use dfa::linalg::{rotation_exp, Mat3, Vec3};
    use proptest::prelude::*;

    pub fn unit() -> impl Strategy<Value = Vec3> {
        (-1.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
            let s = (1.0 - z * z).max(0.0).sqrt();
            Vec3::new(s * phi.cos(), s * phi.sin(), z)
        })
    }

    pub fn director() -> impl Strategy<Value = WeightedDirector> {
        (unit(), prop_oneof![-3.0f64..-0.05, 0.05f64..3.0]).prop_map(|(v, w)| WeightedDirector::new(v, w).unwrap())
    }

    pub fn rotation() -> impl Strategy<Value = Mat3> {
        (unit(), 0.0f64..std::f64::consts::PI).prop_map(|(axis, angle)| rotation_exp(&(axis * angle)))
    }

    pub fn symmetric() -> impl Strategy<Value = Mat3> {
        proptest::array::uniform6(-1.0f64..1.0)
            .prop_map(|c| Mat3::new(c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5]))
    }

    /// Eigenvalues in mm²/s with condition number at most 50.
    pub fn spd() -> impl Strategy<Value = Mat3> {
        (rotation(), 0.1e-3f64..2.0e-3, 1.0f64..50.0, 0.0f64..1.0).prop_map(|(r, l3, cond, t)| {
            let l1 = l3 * cond;
            let l2 = l3 + t * (l1 - l3);
            let m = r * Mat3::from_diagonal(&Vec3::new(l1, l2, l3)) * r.transpose();
            (m + m.transpose()) * 0.5
        })
    }
}
