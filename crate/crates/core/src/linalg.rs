//! Small fixed-size linear algebra: a closed-form symmetric 3×3 eigensolver
//! and rotation helpers (axis-angle exponential/logarithm, minimal rotation
//! between two axes, rotation means).

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Cross-product matrix `[v]×`, so that `skew(v) * x == v.cross(&x)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Flip `v` so that its first nonzero component is positive.
pub fn canonical_sign(v: Vec3) -> Vec3 {
    for k in 0..3 {
        if v[k] > 0.0 {
            return v;
        }
        if v[k] < 0.0 {
            return -v;
        }
    }
    v
}

/// Two unit vectors completing `n` (assumed unit) to a right-handed
/// orthonormal basis `(n, a, b)`.
pub fn orthonormal_complement(n: &Vec3) -> (Vec3, Vec3) {
    // Branch-free construction of Duff et al.
    let sign = 1.0f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    let t1 = Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
    let t2 = Vec3::new(b, sign + n.y * n.y * a, -n.y);
    (t1, t2)
}

/// Eigen-decomposition of a real symmetric 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen3 {
    /// Eigenvalues in descending order.
    pub values: [f64; 3],
    /// Unit eigenvectors as columns, matching `values`.
    pub vectors: Mat3,
}

impl SymEigen3 {
    pub fn vector(&self, k: usize) -> Vec3 {
        self.vectors.column(k).into_owned()
    }
}

fn char_poly_newton(b: &Mat3, lambda: f64) -> f64 {
    let tr = b.trace();
    let c2 = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)] + b[(0, 0)] * b[(2, 2)]
        - b[(0, 2)] * b[(2, 0)]
        + b[(1, 1)] * b[(2, 2)]
        - b[(1, 2)] * b[(2, 1)];
    let det = b.determinant();
    let poly = |l: f64| ((l - tr) * l + c2) * l - det;
    let f = poly(lambda);
    let df = (3.0 * lambda - 2.0 * tr) * lambda + c2;
    if df.abs() > 1e-8 {
        let step = f / df;
        // Near a repeated root the step is noise; keep it only if it helps.
        if step.abs() < 1e-6 && poly(lambda - step).abs() < f.abs() {
            return lambda - step;
        }
    }
    lambda
}

fn eigvec_isolated(b: &Mat3, lambda: f64) -> Vec3 {
    let r0 = Vec3::new(b[(0, 0)] - lambda, b[(0, 1)], b[(0, 2)]);
    let r1 = Vec3::new(b[(0, 1)], b[(1, 1)] - lambda, b[(1, 2)]);
    let r2 = Vec3::new(b[(0, 2)], b[(1, 2)], b[(2, 2)] - lambda);
    let candidates = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let mut best = candidates[0];
    let mut best_n = best.norm_squared();
    for c in &candidates[1..] {
        let n = c.norm_squared();
        if n > best_n {
            best = *c;
            best_n = n;
        }
    }
    if best_n == 0.0 {
        return Vec3::x();
    }
    best / best_n.sqrt()
}

fn eigvec_in_complement(b: &Mat3, v0: &Vec3, lambda: f64) -> Vec3 {
    let (u, v) = orthonormal_complement(v0);
    let au = b * u;
    let av = b * v;
    let mut m00 = u.dot(&au) - lambda;
    let mut m01 = u.dot(&av);
    let mut m11 = v.dot(&av) - lambda;
    let (a00, a01, a11) = (m00.abs(), m01.abs(), m11.abs());
    if a00 >= a11 {
        if a00.max(a01) > 0.0 {
            if a00 >= a01 {
                m01 /= m00;
                m00 = 1.0 / (1.0 + m01 * m01).sqrt();
                m01 *= m00;
            } else {
                m00 /= m01;
                m01 = 1.0 / (1.0 + m00 * m00).sqrt();
                m00 *= m01;
            }
            return m01 * u - m00 * v;
        }
    } else if a11.max(a01) > 0.0 {
        if a11 >= a01 {
            m01 /= m11;
            m11 = 1.0 / (1.0 + m01 * m01).sqrt();
            m01 *= m11;
        } else {
            m11 /= m01;
            m01 = 1.0 / (1.0 + m11 * m11).sqrt();
            m11 *= m01;
        }
        return m11 * u - m01 * v;
    }
    u
}

/// Cyclic Jacobi sweeps on `vᵀbv`, starting from nearly exact eigenvectors
/// `v`. Returns the diagonal and the updated vectors.
fn jacobi_refine(b: &Mat3, mut v: Mat3) -> ([f64; 3], Mat3) {
    let mut a = v.transpose() * b * v;
    a = (a + a.transpose()) * 0.5;
    let norm = a.norm();
    for _ in 0..8 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off <= (f64::EPSILON * 1e-2 * norm).powi(2) {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut j = Mat3::identity();
            j[(p, p)] = c;
            j[(q, q)] = c;
            j[(p, q)] = s;
            j[(q, p)] = -s;
            a = j.transpose() * a * j;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= j;
        }
    }
    ([a[(0, 0)], a[(1, 1)], a[(2, 2)]], v)
}

/// Closed-form eigen-decomposition of a symmetric 3×3 matrix.
///
/// Eigenvalues come from the trigonometric solution of the characteristic
/// cubic followed by one Newton step; eigenvectors from cross products of
/// the shifted rows, then polished by Jacobi rotations. Only the upper triangle of `a` is read. Eigenvectors
/// are returned with canonical sign and form a right-handed basis whenever
/// the spectrum is not fully degenerate.
pub fn sym_eigen3(a: &Mat3) -> SymEigen3 {
    let sym = Mat3::new(
        a[(0, 0)],
        a[(0, 1)],
        a[(0, 2)],
        a[(0, 1)],
        a[(1, 1)],
        a[(1, 2)],
        a[(0, 2)],
        a[(1, 2)],
        a[(2, 2)],
    );
    let scale = sym.amax();
    if scale == 0.0 || !scale.is_finite() {
        return SymEigen3 {
            values: [0.0; 3],
            vectors: Mat3::identity(),
        };
    }
    let b = sym / scale;
    let q = b.trace() / 3.0;
    let c = b - Mat3::identity() * q;
    let p2 = (c[(0, 0)].powi(2)
        + c[(1, 1)].powi(2)
        + c[(2, 2)].powi(2)
        + 2.0 * (c[(0, 1)].powi(2) + c[(0, 2)].powi(2) + c[(1, 2)].powi(2)))
        / 6.0;
    let p = p2.sqrt();
    if p < 1e-15 {
        let diag = [b[(0, 0)], b[(1, 1)], b[(2, 2)]];
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
        let mut vectors = Mat3::zeros();
        for (col, &k) in order.iter().enumerate() {
            vectors[(k, col)] = 1.0;
        }
        if vectors.determinant() < 0.0 {
            vectors.set_column(2, &(-vectors.column(2)));
        }
        return SymEigen3 {
            values: [diag[order[0]] * scale, diag[order[1]] * scale, diag[order[2]] * scale],
            vectors,
        };
    }
    let half_det = ((c / p).determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = half_det.acos() / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::FRAC_PI_3;
    let mut l0 = q + 2.0 * p * phi.cos();
    let mut l2 = q + 2.0 * p * (phi + two_pi_3).cos();
    l0 = char_poly_newton(&b, l0);
    l2 = char_poly_newton(&b, l2);
    let mut l1 = 3.0 * q - l0 - l2;
    l1 = char_poly_newton(&b, l1);
    let (v0, v1) = if half_det >= 0.0 {
        let v0 = eigvec_isolated(&b, l0);
        (v0, eigvec_in_complement(&b, &v0, l1))
    } else {
        let v2 = eigvec_isolated(&b, l2);
        let v1 = eigvec_in_complement(&b, &v2, l1);
        (v1.cross(&v2), v1)
    };
    let (mut values, v) = jacobi_refine(&b, Mat3::from_columns(&[v0, v1, v0.cross(&v1)]));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    values = [values[order[0]] * scale, values[order[1]] * scale, values[order[2]] * scale];
    let v0 = canonical_sign(v.column(order[0]).into_owned());
    let v1 = canonical_sign(v.column(order[1]).into_owned());
    let vectors = Mat3::from_columns(&[v0, v1, v0.cross(&v1)]);
    SymEigen3 { values, vectors }
}

/// Rotation matrix `exp([w]×)` for the rotation vector `w` (axis × angle).
pub fn rotation_exp(w: &Vec3) -> Mat3 {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-4 {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(w);
    Mat3::identity() + k * a + k * k * b
}

/// Rotation vector `w` with `rotation_exp(w) == r` and `|w| <= π`.
pub fn rotation_log(r: &Mat3) -> Vec3 {
    let vee = Vec3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let sin = vee.norm();
    let theta = sin.atan2(cos);
    if cos > -0.9 {
        let factor = if theta < 1e-4 {
            1.0 + theta * theta / 6.0
        } else {
            theta / sin
        };
        return vee * factor;
    }
    // Near π the antisymmetric part loses precision; read the axis from the
    // symmetric part instead.
    let s = (r + r.transpose()) * 0.5 - Mat3::identity() * cos;
    let k = (0..3)
        .max_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)]))
        .unwrap_or(0);
    let mut axis: Vec3 = s.column(k).into_owned();
    let n = axis.norm();
    if n == 0.0 {
        return Vec3::zeros();
    }
    axis /= n;
    if axis.dot(&vee) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// Rotation by `angle` about the unit `axis`.
pub fn rotation_about(axis: &Vec3, angle: f64) -> Mat3 {
    rotation_exp(&(axis * angle))
}

/// Minimal rotation taking unit vector `from` onto unit vector `to`.
///
/// Antiparallel inputs rotate by π about a deterministic perpendicular axis.
pub fn rotation_between(from: &Vec3, to: &Vec3) -> Mat3 {
    let cross = from.cross(to);
    let s = cross.norm();
    let c = from.dot(to);
    if s <= 1e-300 {
        if c >= 0.0 {
            return Mat3::identity();
        }
        let (perp, _) = orthonormal_complement(from);
        return rotation_about(&perp, std::f64::consts::PI);
    }
    rotation_about(&(cross / s), s.atan2(c))
}

/// Geodesic midpoint-weighted mean of two rotations, `r1·exp(½·log(r1ᵀr2))`.
pub fn rotation_mean2(r1: &Mat3, r2: &Mat3) -> Mat3 {
    let w = rotation_log(&(r1.transpose() * r2));
    r1 * rotation_exp(&(w * 0.5))
}

/// Riemannian (Karcher) mean of a set of rotations by fixed-point iteration.
pub fn rotation_mean(rotations: &[Mat3]) -> Mat3 {
    match rotations.len() {
        0 => return Mat3::identity(),
        1 => return rotations[0],
        2 => return rotation_mean2(&rotations[0], &rotations[1]),
        _ => {}
    }
    let mut mean = rotations[0];
    for _ in 0..64 {
        let mt = mean.transpose();
        let delta = rotations
            .iter()
            .map(|r| rotation_log(&(mt * r)))
            .sum::<Vec3>()
            / rotations.len() as f64;
        mean *= rotation_exp(&delta);
        if delta.norm() < 1e-15 {
            break;
        }
    }
    mean
}

/// Whether `r` is a proper rotation within `tol`.
pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    (r.transpose() * r - Mat3::identity()).amax() <= tol && (r.determinant() - 1.0).abs() <= tol
}

/// Angle in radians between two axes treated as directors (range `[0, π/2]`).
pub fn director_angle(a: &Vec3, b: &Vec3) -> f64 {
    let c = a.dot(b).abs() / (a.norm() * b.norm());
    let s = a.cross(b).norm() / (a.norm() * b.norm());
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn check_eigen(a: &Mat3, tol: f64) {
        let e = sym_eigen3(a);
        for k in 0..3 {
            let v = e.vector(k);
            let r = a * v - v * e.values[k];
            assert!(r.norm() <= tol * a.amax().max(1e-300), "residual {r:?} for {a:?}");
            assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
        assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
        assert_relative_eq!(e.vectors.determinant(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn diagonal_and_degenerate_spectra() {
        check_eigen(&Mat3::from_diagonal(&Vec3::new(3.0, 1.0, 2.0)), 1e-14);
        check_eigen(&Mat3::identity(), 1e-14);
        check_eigen(&Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 2.0)), 1e-12);
        check_eigen(&Mat3::zeros(), 1e-14);
        let e = sym_eigen3(&Mat3::from_diagonal(&Vec3::new(1.7e-3, 0.2e-3, 0.2e-3)));
        assert_relative_eq!(e.vector(0), Vec3::x(), epsilon = 1e-14);
    }

    #[test]
    fn matches_nalgebra_on_random_matrices() {
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..2000 {
            let m = Mat3::from_fn(|_, _| next());
            let a = m + m.transpose();
            check_eigen(&a, 1e-12);
            let reference = nalgebra::SymmetricEigen::new(a);
            let mut expected: Vec<f64> = reference.eigenvalues.iter().copied().collect();
            expected.sort_by(|x, y| y.total_cmp(x));
            let got = sym_eigen3(&a).values;
            for k in 0..3 {
                assert_relative_eq!(got[k], expected[k], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn exp_log_round_trip() {
        for w in [
            Vec3::new(0.3, -0.2, 0.5),
            Vec3::new(1e-9, 0.0, 2e-9),
            Vec3::new(0.0, 3.1, 0.0),
            Vec3::new(1.0, 1.0, 1.0).normalize() * (std::f64::consts::PI - 1e-9),
        ] {
            let r = rotation_exp(&w);
            assert!(is_rotation(&r, 1e-12));
            assert_relative_eq!(rotation_log(&r), w, epsilon = 1e-8);
        }
    }

    #[test]
    fn rotation_between_maps_axes() {
        let a = Vec3::new(0.2, 0.3, -0.9).normalize();
        let b = Vec3::new(-0.5, 0.1, 0.4).normalize();
        assert_relative_eq!(rotation_between(&a, &b) * a, b, epsilon = 1e-14);
        assert_relative_eq!(rotation_between(&a, &(-a)) * a, -a, epsilon = 1e-14);
        assert_eq!(rotation_between(&a, &a), Mat3::identity());
    }

    #[test]
    fn rotation_means() {
        let r = rotation_exp(&Vec3::new(0.1, 0.2, 0.3));
        assert_relative_eq!(rotation_mean2(&r, &r), r, epsilon = 1e-14);
        let r1 = rotation_about(&Vec3::z(), 0.2);
        let r2 = rotation_about(&Vec3::z(), 0.6);
        assert_relative_eq!(rotation_mean2(&r1, &r2), rotation_about(&Vec3::z(), 0.4), epsilon = 1e-14);
        let r3 = rotation_about(&Vec3::z(), 0.4);
        assert_relative_eq!(rotation_mean(&[r1, r2, r3]), r3, epsilon = 1e-13);
    }

    #[test]
    fn complement_is_orthonormal() {
        for n in [Vec3::z(), -Vec3::z(), Vec3::new(1.0, 2.0, -3.0).normalize()] {
            let (a, b) = orthonormal_complement(&n);
            assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(b.norm(), 1.0, epsilon = 1e-14);
            assert!(a.dot(&n).abs() < 1e-14 && b.dot(&n).abs() < 1e-14 && a.dot(&b).abs() < 1e-14);
            assert_relative_eq!(a.cross(&b), n, epsilon = 1e-14);
        }
    }
}
