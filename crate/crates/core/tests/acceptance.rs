//! Acceptance checks 1–13. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use dfa::director::{main_director, mean_director, WeightedDirector};
use dfa::distortion::{distortion_maps, DistortionMaps, DistortionParams};
use dfa::frames::{frame_field, FrameField, FrameParams};
use dfa::linalg::{director_angle, rotation_about, Mat3, Vec3};
use dfa::order::{
    oo_axisymmetric, oo_mixture, oo_prolate_tensor, oo_upper_bound, oo_watson, orientational_tensor, oot_rotated,
    OoResult,
};
use dfa::quadrature::{gauss_legendre, SphereQuadrature};
use dfa::sphere::{gfa, peak_field, PeakField, PeakParams, SpdTensor, SphereMesh};
use dfa::synth::{generate, SynthField, SynthKind, SyntheticSpec};
use dfa::tfa::{project_gradient_to_scalar, project_gradient_to_vector, rotation_tangent, structure_tensor_4, tensor_gradient, TensorGradient};
use dfa::volume::Volume;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let checks: [(u32, fn() -> Outcome); 13] = [
        (1, c01_watson),
        (2, c02_prolate),
        (3, c03_sh_path),
        (4, c04_axisymmetric),
        (5, c05_gfa_bound),
        (6, c06_mean_director),
        (7, c07_synthetic_patterns),
        (8, c08_shape_independence),
        (9, c09_rotation_invariance),
        (10, c10_resolution),
        (11, c11_mixture),
        (12, c12_tfa),
        (13, c13_cli_smoke),
    ];
    let mut failed = 0;
    for (n, check) in checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {status} [{:.2} s] {}", start.elapsed().as_secs_f64(), result.detail);
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

fn c01_watson() -> Outcome {
    let start = Instant::now();
    let rule = zonal_rule();
    let mut worst: f64 = 0.0;
    for kappa in [0.01, 0.1, 1.0, 4.0, 16.0, 64.0] {
        let reference = quadrature_oo(&rule, &Vec3::z(), |u| (kappa * u.z * u.z).exp());
        worst = worst.max((oo_watson(kappa).unwrap() - reference).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-8 && secs < 1.0, format!("max |err| = {worst:.2e} (tol 1e-8), {secs:.3} s"))
}

fn c02_prolate() -> Outcome {
    let start = Instant::now();
    let rule = zonal_rule();
    let mut worst: f64 = 0.0;
    for ratio in [1.001, 2.0, 8.5, 50.0] {
        let l2 = 0.2e-3;
        let d = Mat3::from_diagonal(&Vec3::new(l2, l2, ratio * l2));
        let reference = quadrature_oo(&rule, &Vec3::z(), |u| tensor_odf_ref(&d, u));
        worst = worst.max((oo_prolate_tensor(ratio * l2, l2).unwrap() - reference).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-8 && secs < 1.0, format!("max |err| = {worst:.2e} (tol 1e-8), {secs:.3} s"))
}

fn c03_sh_path() -> Outcome {
    let mut r = rng(3);
    // Exact for the degree ≤ 10 integrands P₂·f with f of order 8.
    let rule = SphereQuadrature::product(16, 32);
    let mut worst: f64 = 0.0;
    let mut od_exact = true;
    for _ in 0..100 {
        let c = random_sh(&mut r, 8, 0.1);
        let n = random_unit(&mut r);
        let result = OoResult::new(oot_rotated(&c, &n), n);
        let reference = quadrature_oot(&rule, &n, |u| c.eval(u));
        worst = worst.max((result.oo - reference).abs());
        od_exact &= result.od == 1.0 - result.oo;
    }
    outcome(
        worst < 1e-6 && od_exact,
        format!("max |SH − quadrature| = {worst:.2e} (tol 1e-6), OD = 1 − OO exact: {od_exact}"),
    )
}

fn c04_axisymmetric() -> Outcome {
    let (t, w) = gauss_legendre(400);
    let rule = SphereQuadrature::product(400, 64);
    let n0 = Vec3::new(0.2, -0.4, 0.7).normalize();
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 3.0, 12.0] {
        let profile = |s: f64| (kappa * s * s).exp() + 0.3 * s.powi(4);
        let a2: f64 = t.iter().zip(&w).map(|(s, wi)| wi * p2(*s) * profile(*s)).sum();
        let f = |u: &Vec3| profile(u.dot(&n0));
        let along = quadrature_oot(&rule, &n0, f);
        let perp_axis = n0.cross(&Vec3::x()).normalize();
        let across = quadrature_oot(&rule, &perp_axis, f);
        for (value, expected) in [
            (oo_axisymmetric(a2, 0.0), 2.0 * PI * a2),
            (oo_axisymmetric(a2, PI / 2.0), -PI * a2),
            (oo_axisymmetric(a2, 0.0), along),
            (oo_axisymmetric(a2, PI / 2.0), across),
        ] {
            worst = worst.max((value - expected).abs() / expected.abs().max(1.0));
        }
    }
    outcome(worst < 1e-10, format!("max rel err = {worst:.2e} (tol 1e-10)"))
}

fn c05_gfa_bound() -> Outcome {
    let mut r = rng(5);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for i in 0..1000 {
        let c = random_sh(&mut r, 8, [0.02, 0.1, 0.5][i % 3]);
        let g = gfa(&c).unwrap();
        let q = orientational_tensor(&c);
        // OO(n) = (3/2)·nᵀQn − (1/2)·∫f with ∫f = 1.
        let top = q.matrix().symmetric_eigenvalues().max();
        let max_oo = 1.5 * top - 0.5;
        let bound = oo_upper_bound(g, c.c00()).unwrap();
        if max_oo > bound + 1e-12 {
            violations += 1;
        }
        tightest = tightest.min(bound - max_oo);
    }
    let corollary = oo_upper_bound(0.3, 0.5 / PI.sqrt()).unwrap();
    let pass = violations == 0 && (corollary - 0.1407).abs() <= 5e-4;
    outcome(
        pass,
        format!("violations {violations}/1000, min slack {tightest:.2e}, bound at GFA 0.3 = {corollary:.5}"),
    )
}

fn c06_mean_director() -> Outcome {
    let mut r = rng(6);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let n = r.gen_range(1..=12);
        let dirs: Vec<WeightedDirector> = (0..n)
            .map(|_| WeightedDirector::new(random_unit(&mut r), r.gen_range(-2.0..2.0)).unwrap())
            .collect();
        if mean_director(&dirs).unwrap().norm() != brute_force_mean_norm(&dirs) {
            mismatches += 1;
        }
    }
    // Directors within 45° of an axis, so every pair is within 90°.
    let mut cone_err: f64 = 0.0;
    for _ in 0..200 {
        let axis = random_unit(&mut r);
        let dirs: Vec<WeightedDirector> = (0..12)
            .map(|_| {
                let v = loop {
                    let v = random_unit(&mut r);
                    if v.dot(&axis).abs() >= (PI / 4.0).cos() {
                        break v;
                    }
                };
                let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
                WeightedDirector::new(v * sign, r.gen_range(0.0..3.0)).unwrap()
            })
            .collect();
        let expected: Vec3 = dirs
            .iter()
            .map(|d| d.axis() * d.weight() * d.axis().dot(&axis).signum())
            .sum::<Vec3>()
            / 12.0;
        let m = mean_director(&dirs).unwrap().vector;
        cone_err = cone_err.max((m - expected).norm().min((m + expected).norm()));
    }
    let mut pair_err: f64 = 0.0;
    for _ in 0..200 {
        let v1 = random_unit(&mut r);
        let mut v2 = random_unit(&mut r);
        if v1.dot(&v2) < 0.0 {
            v2 = -v2;
        }
        let w = r.gen_range(0.1..3.0);
        let dirs = [WeightedDirector::new(v1, w).unwrap(), WeightedDirector::new(v2, w).unwrap()];
        let mean = mean_director(&dirs).unwrap().vector;
        let expected = (v1 + v2) * (w / 2.0);
        pair_err = pair_err.max((mean - expected).norm().min((mean + expected).norm()));
        let main = main_director(&dirs).unwrap().director;
        let axis = (v1 + v2).normalize();
        pair_err = pair_err.max((main.axis() - axis).norm().min((main.axis() + axis).norm()));
        pair_err = pair_err.max((main.weight() - w * (1.0 + v1.dot(&v2))).abs());
    }
    let pass = mismatches == 0 && cone_err < 1e-12 && pair_err < 1e-12;
    outcome(
        pass,
        format!(
            "brute-force mismatches {mismatches}/10000, 90° cone err {cone_err:.1e}, two-director err {pair_err:.1e}"
        ),
    )
}

fn detected_peaks(field: &SynthField) -> PeakField {
    peak_field(&field.odf(8).unwrap(), &SphereMesh::default(), &PeakParams::default())
}

fn maps_from_peaks(peaks: &PeakField, params: &DistortionParams) -> (FrameField, DistortionMaps) {
    let frames = frame_field(peaks, &FrameParams::default());
    let maps = distortion_maps(&frames, params);
    (frames, maps)
}

fn interior(dims: [usize; 3], margin: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for z in margin..dims[2] - margin {
        for y in margin..dims[1] - margin {
            for x in margin..dims[0] - margin {
                out.push([x, y, z]);
            }
        }
    }
    out
}

fn c07_synthetic_patterns() -> Outcome {
    let start = Instant::now();
    let params = DistortionParams::default();
    let mut details = Vec::new();
    let mut pass = true;

    let spec = SyntheticSpec::new(SynthKind::Twist);
    let (_, maps) = maps_from_peaks(&detected_peaks(&generate(&spec).unwrap()), &params);
    let voxels = interior(spec.dims, 1);
    let twist: Vec<f64> = voxels.iter().map(|x| *maps.twist.get(*x)).collect();
    let mean = twist.iter().sum::<f64>() / twist.len() as f64;
    let sd = (twist.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / twist.len() as f64).sqrt();
    let cv = sd / mean;
    let off = voxels
        .iter()
        .map(|x| maps.splay.get(*x).max(*maps.bend.get(*x)))
        .fold(0.0, f64::max);
    pass &= cv < 1e-6 && off < 1e-8;
    details.push(format!("twist CV {cv:.1e}, max splay/bend {off:.1e}"));

    for kind in [SynthKind::Splay, SynthKind::Bend] {
        let spec = SyntheticSpec::new(kind);
        let (_, maps) = maps_from_peaks(&detected_peaks(&generate(&spec).unwrap()), &params);
        let width = (spec.dims[0] - 1) as f64 * spec.spacing[0];
        let middle: Vec<[usize; 3]> = interior(spec.dims, 1)
            .into_iter()
            .filter(|x| spec.position(*x).x.abs() <= width / 6.0)
            .collect();
        let mut worst = f64::INFINITY;
        for x in &middle {
            let (s, b, t) = (*maps.splay.get(*x), *maps.bend.get(*x), *maps.twist.get(*x));
            let (own, others) = if kind == SynthKind::Splay { (s, b.max(t)) } else { (b, s.max(t)) };
            worst = worst.min(own / others.max(f64::MIN_POSITIVE));
        }
        pass &= worst > 2.0 && !middle.is_empty();
        details.push(format!("{kind:?} min dominance {worst:.2}x over {} voxels", middle.len()));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 5.0;
    outcome(pass, format!("{}, {secs:.2} s", details.join("; ")))
}

fn c08_shape_independence() -> Outcome {
    let params = DistortionParams::default();
    let mut pass = true;
    let mut details = Vec::new();
    for kind in [SynthKind::Splay, SynthKind::Bend, SynthKind::Twist] {
        let a = generate(&SyntheticSpec::new(kind)).unwrap();
        let b = generate(&SyntheticSpec {
            mode_range: Some((1.0, 0.0)),
            ..SyntheticSpec::new(kind)
        })
        .unwrap();
        let shapes_differ = a.tensors.data().iter().zip(b.tensors.data()).any(|(x, y)| x != y);
        let (_, ma) = maps_from_peaks(&a.peaks, &params);
        let (_, mb) = maps_from_peaks(&b.peaks, &params);
        let identical = ma == mb;
        pass &= shapes_differ && identical;
        details.push(format!("{kind:?} bitwise identical: {identical}"));
    }
    outcome(pass, details.join(", "))
}

fn c09_rotation_invariance() -> Outcome {
    let params = DistortionParams::default();
    let mut r = rng(9);
    let mut index_err: f64 = 0.0;
    let mut frame_err: f64 = 0.0;
    let mut compared = 0;
    for kind in [SynthKind::Splay, SynthKind::Bend, SynthKind::Twist] {
        for _ in 0..2 {
            let g = random_rotation(&mut r);
            let base = SyntheticSpec {
                dims: [12, 6, 4],
                ..SyntheticSpec::new(kind)
            };
            let rotated = SyntheticSpec {
                rotation: g,
                ..base.clone()
            };
            let (frames, maps) = maps_from_peaks(&detected_peaks(&generate(&rotated).unwrap()), &params);
            for x in interior(rotated.dims, 1).into_iter().step_by(3) {
                // Unrotated 3×3×3 patch centered at Gᵀp, keeping angle/width.
                let width = (base.dims[0] - 1) as f64 * base.spacing[0];
                let patch = SyntheticSpec {
                    dims: [3, 3, 3],
                    angle: base.angle * 2.0 * base.spacing[0] / width,
                    offset: g.transpose() * rotated.position(x),
                    ..base.clone()
                };
                let (pf, pm) = maps_from_peaks(&detected_peaks(&generate(&patch).unwrap()), &params);
                let c = [1, 1, 1];
                for (m1, m2) in [
                    (&maps.splay, &pm.splay),
                    (&maps.bend, &pm.bend),
                    (&maps.twist, &pm.twist),
                    (&maps.total, &pm.total),
                ] {
                    index_err = index_err.max((m1.get(x) - m2.get(c)).abs());
                }
                let fa = frames.get(x).axes();
                let fb = pf.get(c).axes();
                for k in 0..3 {
                    frame_err = frame_err.max(director_angle(&fa[k], &(g * fb[k])).to_degrees());
                }
                compared += 1;
            }
        }
    }
    outcome(
        index_err < 1e-6 && frame_err < 0.5,
        format!("{compared} voxels: max index change {index_err:.1e} (tol 1e-6), max frame axis angle {frame_err:.1e}° (tol 0.5°)"),
    )
}

fn c10_resolution() -> Outcome {
    let rate = PI / 8.0;
    let params = DistortionParams {
        spacing_normalize: true,
        reference_step: 1.0,
        ..Default::default()
    };
    let make = |dims: [usize; 3], h: f64| {
        let spec = SyntheticSpec {
            dims,
            spacing: [h; 3],
            angle: rate,
            ..SyntheticSpec::new(SynthKind::Helical)
        };
        maps_from_peaks(&detected_peaks(&generate(&spec).unwrap()), &params).1
    };
    let coarse = make([17, 5, 5], 1.0);
    let fine = make([33, 9, 9], 0.5);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for x in 2..15 {
        let a = *coarse.twist.get([x, 2, 2]);
        let b = *fine.twist.get([2 * x, 4, 4]);
        worst = worst.max((a - b).abs());
        compared += 1;
    }
    let reference = *coarse.twist.get([8, 2, 2]);
    outcome(
        worst < 1e-6,
        format!("{compared} matched voxels, twist {reference:.6} mm⁻¹, max |coarse − fine| = {worst:.1e} (tol 1e-6)"),
    )
}

fn c11_mixture() -> Outcome {
    let (l1, l2) = (1.7e-3, 0.2e-3);
    let oo1 = oo_prolate_tensor(l1, l2).unwrap();
    let a2 = oo1 / (2.0 * PI);
    let n1 = Vec3::z();
    let n2 = Vec3::x();
    let component = |axis: Vec3| -> Box<dyn Fn(&Vec3) -> f64> {
        Box::new(move |n: &Vec3| oo_axisymmetric(a2, director_angle(n, &axis)))
    };
    let mixture = oo_mixture(vec![(0.5, component(n1)), (0.5, component(n2))]).unwrap();
    let composed = mixture(&n1);
    let composed_err = (composed - oo1 / 4.0).abs();

    let rule = SphereQuadrature::product(300, 300);
    let odf_mixture = |alpha: f64| {
        let d1 = SpdTensor::prolate(&n1, l1, l2).unwrap();
        let axis = Vec3::new(alpha.sin(), 0.0, alpha.cos());
        let d2 = SpdTensor::prolate(&axis, l1, l2).unwrap();
        let (m1, m2) = (*d1.matrix(), *d2.matrix());
        quadrature_oot(&rule, &n1, |u| 0.5 * tensor_odf_ref(&m1, u) + 0.5 * tensor_odf_ref(&m2, u))
    };
    let quad_err = (odf_mixture(PI / 2.0) - oo1 / 4.0).abs();
    let sweep: Vec<f64> = (1..=18).map(|k| odf_mixture((5.0 * k as f64).to_radians())).collect();
    let monotone = sweep.windows(2).all(|w| w[1] < w[0]);
    outcome(
        composed_err < 1e-8 && quad_err < 1e-8 && monotone,
        format!(
            "composed err {composed_err:.1e}, quadrature err {quad_err:.1e} (tol 1e-8), sweep 5°..90° decreasing: {monotone} ({:.4} → {:.4})",
            sweep[0],
            sweep[17]
        ),
    )
}

/// Smooth symmetric field and its analytic gradient.
fn analytic_field(p: &Vec3) -> (Mat3, [Mat3; 3]) {
    let a = Mat3::new(1.0, 0.2, 0.1, 0.2, 0.8, -0.1, 0.1, -0.1, 0.6);
    let b = Mat3::new(0.3, -0.1, 0.05, -0.1, 0.2, 0.1, 0.05, 0.1, -0.2);
    let c = Mat3::new(-0.1, 0.15, 0.2, 0.15, 0.05, 0.0, 0.2, 0.0, 0.25);
    let k = Vec3::new(0.7, -0.4, 0.9);
    let m = Vec3::new(-0.3, 0.8, 0.5);
    let (s, co) = k.dot(p).sin_cos();
    let (s2, c2) = m.dot(p).sin_cos();
    let value = a + b * s + c * c2;
    let grad = std::array::from_fn(|axis| b * (co * k[axis]) - c * (s2 * m[axis]));
    (value, grad)
}

fn c12_tfa() -> Outcome {
    let mut r = rng(12);
    let w = {
        let m = Mat3::from_fn(|_, _| r.gen_range(-1.0..1.0));
        (m + m.transpose()) / 2.0
    };
    let v = random_unit(&mut r);
    let center = Vec3::new(0.3, -0.2, 0.5);
    let gradient_error = |h: f64| {
        let field = Volume::from_fn([5, 5, 5], [h; 3], |c| {
            analytic_field(&(center + Vec3::from_fn(|a, _| (c[a] as f64 - 2.0) * h))).0
        })
        .unwrap();
        let grad = tensor_gradient(&field, [2, 2, 2]);
        let tfa = project_gradient_to_vector(&w, &grad);
        let scalar = |c: [usize; 3]| w.component_mul(field.get(c)).sum();
        let fd = Vec3::from_fn(|a, _| {
            let mut fwd = [2, 2, 2];
            let mut bwd = [2, 2, 2];
            fwd[a] += 1;
            bwd[a] -= 1;
            (scalar(fwd) - scalar(bwd)) / (2.0 * h)
        });
        let exact = Vec3::from_fn(|a, _| w.component_mul(&analytic_field(&center).1[a]).sum());
        let directional = (project_gradient_to_scalar(&w, &grad, &v) - tfa.dot(&v)).abs();
        ((tfa - fd).norm(), (tfa - exact).norm(), directional)
    };
    let (fd1, e1, d1) = gradient_error(0.1);
    let (fd2, e2, d2) = gradient_error(0.05);
    let order = (e1 / e2).log2();
    let fd_match = fd1.max(fd2) < 1e-12 && d1.max(d2) < 1e-12;

    let mut symmetric = true;
    for _ in 0..100 {
        let g = TensorGradient(std::array::from_fn(|_| {
            let m = Mat3::from_fn(|_, _| r.gen_range(-1.0..1.0));
            m + m.transpose()
        }));
        let s = structure_tensor_4(&g);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let x = s.get(i, j, k, l);
                        symmetric &= x == s.get(j, i, k, l) && x == s.get(i, j, l, k) && x == g.get(i, j, k) * g.get(i, j, l);
                    }
                }
            }
        }
    }

    let mut tangent_err: f64 = 0.0;
    for _ in 0..50 {
        let frame = random_rotation(&mut r);
        let d = SpdTensor::from_eigen([1.7e-3, 0.9e-3, 0.3e-3], &frame).unwrap();
        for p in 1..=3 {
            let phi = rotation_tangent(&d, p).unwrap();
            let axis = d.eigen().vector(p - 1);
            let eps = 1e-6;
            let turn = |t: f64| {
                let rot = rotation_about(&axis, t);
                rot * d.matrix() * rot.transpose()
            };
            let fd = (turn(eps) - turn(-eps)) / (2.0 * eps);
            tangent_err = tangent_err.max((fd - phi).amax() / d.matrix().amax());
        }
    }
    let pass = fd_match && (1.8..2.2).contains(&order) && symmetric && tangent_err < 1e-6;
    outcome(
        pass,
        format!(
            "projection vs scalar FD {:.1e}, convergence order {order:.3}, minor symmetry exact: {symmetric}, tangent rel err {tangent_err:.1e}",
            fd1.max(fd2)
        ),
    )
}

fn run(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dfa"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn c13_cli_smoke() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    if let Err(e) = run(&["synth", "--kind", "twist", "--dims", "16,16,16", "--out", "t.nii", "--out-odf", "odf.nii"], d) {
        return outcome(false, e);
    }
    let start = Instant::now();
    let steps: [&[&str]; 4] = [
        &["oo-od", "--in", "odf.nii", "--out-oo", "oo.nii", "--out-od", "od.nii", "--out-mask", "m.nii"],
        &["peaks", "--in", "odf.nii", "--out", "peaks.nii"],
        &["frames", "--peaks", "peaks.nii", "--out", "frames.nii"],
        &["distortion", "--frames", "frames.nii", "--out-prefix", "dist_"],
    ];
    for args in steps {
        if let Err(e) = run(args, d) {
            return outcome(false, e);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let outputs = ["oo.nii", "od.nii", "dist_splay.nii", "dist_bend.nii", "dist_twist.nii", "dist_total.nii"];
    let missing: Vec<&str> = outputs.iter().copied().filter(|f| !d.join(f).exists()).collect();
    let twist = dfa::nifti::read_volume(d.join("dist_twist.nii"))
        .ok()
        .and_then(|v| dfa::pipeline::scalar_from_nifti(&v).ok());
    let constant = twist.is_some_and(|t| {
        let vals: Vec<f64> = interior(t.dims(), 1).iter().map(|x| *t.get(*x)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().all(|v| (v - mean).abs() < 1e-5 * mean)
    });
    outcome(
        secs < 10.0 && missing.is_empty() && constant,
        format!("16³ twist ODF: six maps in {secs:.2} s (limit 10 s), missing {missing:?}, interior twist constant: {constant}"),
    )
}
