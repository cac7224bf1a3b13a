//! Real spherical harmonics and even-order coefficient vectors.

use std::cell::RefCell;
use std::f64::consts::PI;

use crate::error::{DfaError, Result};
use crate::linalg::Vec3;

/// Number of even-order coefficients up to order `max_order`.
pub const fn num_coeffs(max_order: usize) -> usize {
    (max_order + 1) * (max_order + 2) / 2
}

/// Position of `(l, m)` in an even-order coefficient vector.
pub fn sh_index(l: usize, m: i32) -> usize {
    ((l * (l + 1) / 2) as i64 + m as i64) as usize
}

/// Recurrence factors of the normalized Legendre table for all orders up
/// to `lmax`, indexed like the table.
#[derive(Default)]
struct Recurrence {
    lmax: Option<usize>,
    diag: Vec<f64>,
    sub: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Recurrence {
    fn ensure(&mut self, lmax: usize) {
        if self.lmax.is_some_and(|l| l >= lmax) {
            return;
        }
        let n = (lmax + 1) * (lmax + 2) / 2;
        self.diag = (0..=lmax)
            .map(|m| if m == 0 { 0.0 } else { -((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt() })
            .collect();
        self.sub = (0..=lmax).map(|m| (2.0 * m as f64 + 3.0).sqrt()).collect();
        self.a = vec![0.0; n];
        self.b = vec![0.0; n];
        for l in 2..=lmax {
            let lf = l as f64;
            for m in 0..=(l - 2) {
                let mf = m as f64;
                let i = l * (l + 1) / 2 + m;
                self.a[i] = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                self.b[i] = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            }
        }
        self.lmax = Some(lmax);
    }
}

#[derive(Default)]
struct Scratch {
    rec: Recurrence,
    table: Vec<f64>,
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

/// Orthonormal associated Legendre values `P̄_l^m(cos θ)` (Condon–Shortley
/// phase, including the `1/√(4π)` factor) for `0 ≤ m ≤ l ≤ lmax`, stored
/// at `l(l+1)/2 + m`.
fn legendre_table(rec: &Recurrence, lmax: usize, cos_t: f64, sin_t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize((lmax + 1) * (lmax + 2) / 2, 0.0);
    let at = |l: usize, m: usize| l * (l + 1) / 2 + m;
    out[0] = 0.5 / PI.sqrt();
    for m in 1..=lmax {
        out[at(m, m)] = rec.diag[m] * sin_t * out[at(m - 1, m - 1)];
    }
    for m in 0..lmax {
        out[at(m + 1, m)] = rec.sub[m] * cos_t * out[at(m, m)];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let i = at(l, m);
            out[i] = rec.a[i] * (cos_t * out[at(l - 1, m)] - rec.b[i] * out[at(l - 2, m)]);
        }
    }
}

fn polar(u: &Vec3) -> (f64, f64, f64, f64) {
    let n = u.norm();
    let (x, y, z) = (u.x / n, u.y / n, u.z / n);
    let s = (x * x + y * y).sqrt();
    let (cp, sp) = if s > 0.0 { (x / s, y / s) } else { (1.0, 0.0) };
    (z, s, cp, sp)
}

/// Real spherical harmonic `Y_l^m(u)`:
/// `√2·P̄_l^{|m|}·cos(|m|φ)` for `m < 0`, `P̄_l^0` for `m = 0` and
/// `√2·P̄_l^m·sin(mφ)` for `m > 0`.
pub fn sh_basis(l: usize, m: i32, u: &Vec3) -> Result<f64> {
    if m.unsigned_abs() as usize > l {
        return Err(DfaError::InvalidOrder { l, m });
    }
    let (z, s, cp, sp) = polar(u);
    let am = m.unsigned_abs() as usize;
    let p = SCRATCH.with(|cell| {
        let scratch = &mut *cell.borrow_mut();
        scratch.rec.ensure(l);
        legendre_table(&scratch.rec, l, z, s, &mut scratch.table);
        scratch.table[l * (l + 1) / 2 + am]
    });
    let phi = sp.atan2(cp) * am as f64;
    Ok(match m {
        0 => p,
        m if m < 0 => std::f64::consts::SQRT_2 * p * phi.cos(),
        _ => std::f64::consts::SQRT_2 * p * phi.sin(),
    })
}

/// All even-order basis values up to `max_order` at `u`, in coefficient order.
pub fn sh_row(max_order: usize, u: &Vec3, out: &mut [f64]) {
    debug_assert_eq!(out.len(), num_coeffs(max_order));
    let (z, s, cp, sp) = polar(u);
    SCRATCH.with(|cell| {
        let Scratch {
            rec,
            table,
            cos_m,
            sin_m,
        } = &mut *cell.borrow_mut();
        rec.ensure(max_order);
        legendre_table(rec, max_order, z, s, table);
        cos_m.clear();
        cos_m.resize(max_order + 1, 1.0);
        sin_m.clear();
        sin_m.resize(max_order + 1, 0.0);
        for m in 1..=max_order {
            cos_m[m] = cos_m[m - 1] * cp - sin_m[m - 1] * sp;
            sin_m[m] = sin_m[m - 1] * cp + cos_m[m - 1] * sp;
        }
        let r2 = std::f64::consts::SQRT_2;
        for l in (0..=max_order).step_by(2) {
            let base = l * (l + 1) / 2;
            out[base] = table[base];
            for m in 1..=l {
                let p = table[base + m] * r2;
                out[base - m] = p * cos_m[m];
                out[base + m] = p * sin_m[m];
            }
        }
    });
}

/// Even-order real SH coefficients of one antipodally symmetric function.
#[derive(Debug, Clone, PartialEq)]
pub struct ShCoefficients {
    max_order: usize,
    coeffs: Vec<f64>,
}

impl ShCoefficients {
    pub fn new(max_order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if !max_order.is_multiple_of(2) {
            return Err(DfaError::InvalidArgument(format!("SH order must be even, got {max_order}")));
        }
        if coeffs.len() != num_coeffs(max_order) {
            return Err(DfaError::DimensionMismatch(format!(
                "order {max_order} needs {} coefficients, got {}",
                num_coeffs(max_order),
                coeffs.len()
            )));
        }
        Ok(Self { max_order, coeffs })
    }

    pub fn zeros(max_order: usize) -> Result<Self> {
        Self::new(max_order, vec![0.0; num_coeffs(max_order)])
    }

    /// The uniform density `1/(4π)`.
    pub fn isotropic(max_order: usize) -> Result<Self> {
        let mut c = Self::zeros(max_order)?;
        c.coeffs[0] = 0.5 / PI.sqrt();
        Ok(c)
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Coefficient `c_{l,m}`; zero for odd `l`, `l > max_order` or `|m| > l`.
    pub fn get(&self, l: usize, m: i32) -> f64 {
        if l % 2 == 1 || l > self.max_order || m.unsigned_abs() as usize > l {
            return 0.0;
        }
        self.coeffs[sh_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i32, value: f64) -> Result<()> {
        if l % 2 == 1 || l > self.max_order || m.unsigned_abs() as usize > l {
            return Err(DfaError::InvalidOrder { l, m });
        }
        self.coeffs[sh_index(l, m)] = value;
        Ok(())
    }

    pub fn c00(&self) -> f64 {
        self.coeffs[0]
    }

    /// `Σ_m c_{l,m}²`.
    pub fn order_norm2(&self, l: usize) -> f64 {
        if l % 2 == 1 || l > self.max_order {
            return 0.0;
        }
        let base = l * (l + 1) / 2;
        self.coeffs[base - l..=base + l].iter().map(|c| c * c).sum()
    }

    /// `f(u) = Σ c_{l,m} Y_l^m(u)`.
    pub fn eval(&self, u: &Vec3) -> f64 {
        let mut row = vec![0.0; self.coeffs.len()];
        sh_row(self.max_order, u, &mut row);
        row.iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }

    /// Same function padded with zeros or truncated to `max_order`.
    pub fn resized(&self, max_order: usize) -> Result<Self> {
        let mut out = Self::zeros(max_order)?;
        let n = out.coeffs.len().min(self.coeffs.len());
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Ok(out)
    }

    /// `a·self + b·other` (orders must agree).
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.max_order != other.max_order {
            return Err(DfaError::DimensionMismatch("SH orders differ".into()));
        }
        Ok(Self {
            max_order: self.max_order,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            max_order: self.max_order,
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }
}

/// Generalized fractional anisotropy `√(1 − c₀₀²/Σc²)`.
pub fn gfa(c: &ShCoefficients) -> Result<f64> {
    let total: f64 = c.coeffs.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return Err(DfaError::NullFunction);
    }
    Ok((1.0 - c.coeffs[0] * c.coeffs[0] / total).max(0.0).sqrt())
}
