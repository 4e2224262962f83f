//! Closed-form transmission and reflection amplitudes, the S-matrix, and
//! its symmetry diagnostics.
//!
//! Channel labels follow the direction of travel of the free states
//! `|R, k⟩ = e^{ikx}` and `|L, k⟩ = e^{-ikx}`. `t_R`, `r_R` describe a beam
//! moving right (incident from the left); `t_L`, `r_L` a beam moving left
//! (incident from the right). The S-matrix in the `(R, L)` basis is
//!
//! ```text
//! S = [[t_R, r_L],
//!      [r_R, t_L]]
//! ```
//!
//! Phases are referenced to `x = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{expm1, sinc, upper_sqrt, I, ONE, ZERO};
use crate::potential::{Family, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringData {
    pub k: f64,
    pub t_l: Complex64,
    pub t_r: Complex64,
    pub r_l: Complex64,
    pub r_r: Complex64,
}

impl ScatteringData {
    /// Amplitudes of the mirror-image potential (x → -x).
    pub fn mirrored(&self) -> Self {
        Self { k: self.k, t_l: self.t_r, t_r: self.t_l, r_l: self.r_r, r_r: self.r_l }
    }

    pub fn transmission(&self, side: Side) -> Complex64 {
        match side {
            Side::L => self.t_l,
            Side::R => self.t_r,
        }
    }

    pub fn reflection(&self, side: Side) -> Complex64 {
        match side {
            Side::L => self.r_l,
            Side::R => self.r_r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix(pub [[Complex64; 2]; 2]);

impl SMatrix {
    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.0
    }

    fn adjoint(&self) -> [[Complex64; 2]; 2] {
        let s = self.0;
        [[s[0][0].conj(), s[1][0].conj()], [s[0][1].conj(), s[1][1].conj()]]
    }
}

fn matmul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn defect_from_identity(m: [[Complex64; 2]; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((z - target).norm());
        }
    }
    worst
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("wavenumber must be positive, got {k}")))
    }
}

/// Model-I amplitudes for arbitrary real `lam`; the sign of `lam` only
/// exchanges the reflection amplitudes.
fn model_i_raw(v0: f64, a: f64, lam: f64, k: f64) -> ScatteringData {
    let q = (v0 + k * k).sqrt();
    let (sin, cos) = (q * a).sin_cos();
    let phase = Complex64::new(0.0, -k * a).exp();
    let denom = Complex64::new(2.0 * q * k * cos, -(q * q + k * k - lam * lam) * sin);
    let t = 2.0 * q * k * phase / denom;
    let r_l = I * ((q * q - (k + lam) * (k + lam)) * sin) * phase / denom;
    let r_r = I * ((q * q - (k - lam) * (k - lam)) * sin) * phase / denom;
    ScatteringData { k, t_l: t, t_r: t, r_l, r_r }
}

/// Model-II shared denominator. The bracket
/// `-(1 - iz) - 2iz e + (1 + iz) e²` with `z = μ/2k`, `e = e^{ika}` is
/// evaluated as `(e - 1)(e + 1) + iz (e - 1)²`, which is the same polynomial
/// without the cancellation at small `|ka|`.
fn model_ii_denominator(mu: f64, a: f64, lam: f64, k: Complex64) -> Complex64 {
    let z = mu / (2.0 * k);
    let w = lam / (2.0 * k);
    let em1 = expm1(I * k * a);
    let bracket = em1 * (em1 + 2.0) + I * z * em1 * em1;
    (ONE - I * z) + w * w * bracket
}

fn model_ii_raw(mu: f64, a: f64, lam: f64, k: f64) -> ScatteringData {
    let kc = Complex64::new(k, 0.0);
    let z = mu / (2.0 * k);
    let w = lam / (2.0 * k);
    let denom = model_ii_denominator(mu, a, lam, kc);
    let e = Complex64::new(0.0, k * a).exp();
    let term = (ONE + I * z) * w * e;
    let cc = term - term.conj();
    let t = 1.0 / denom;
    // The expression printed as the left-incidence reflection describes a beam
    // arriving from x = -∞, i.e. the right-moving channel in the S-matrix layout.
    let from_left = (I * z * (1.0 - lam / k + lam * lam / (2.0 * k * k)) + (1.0 - w) * cc) / denom;
    let from_right = (I * z * (1.0 + lam / k + lam * lam / (2.0 * k * k)) - (1.0 + w) * cc) / denom;
    ScatteringData { k, t_l: t, t_r: t, r_l: from_right, r_r: from_left }
}

pub fn amplitudes_model_i(spec: &PotentialSpec, k: f64) -> Result<ScatteringData> {
    if spec.family() != Family::ModelI {
        return Err(Error::InvalidSpec("expected a Model-I potential".into()));
    }
    check_k(k)?;
    Ok(model_i_raw(spec.v0(), spec.a(), spec.lam(), k))
}

pub fn amplitudes_model_ii(spec: &PotentialSpec, k: f64) -> Result<ScatteringData> {
    if spec.family() != Family::ModelII {
        return Err(Error::InvalidSpec("expected a Model-II potential".into()));
    }
    check_k(k)?;
    Ok(model_ii_raw(spec.v0(), spec.a(), spec.lam(), k))
}

pub fn amplitudes(spec: &PotentialSpec, k: f64) -> Result<ScatteringData> {
    match spec.family() {
        Family::ModelI => amplitudes_model_i(spec, k),
        Family::ModelII => amplitudes_model_ii(spec, k),
    }
}

/// Common denominator of the amplitudes at complex `k`.
///
/// Model I returns `D/q` with `D = 2qk cos(qa) - i(q² + k² - λ̃²) sin(qa)`,
/// which is entire in `k²`. Model II returns the printed denominator.
pub fn transmission_denominator(spec: &PotentialSpec, k: Complex64) -> Complex64 {
    let (v0, a, lam) = (spec.v0(), spec.a(), spec.lam());
    match spec.family() {
        Family::ModelI => {
            let q2 = v0 + k * k;
            let qa = upper_sqrt(q2) * a;
            2.0 * k * qa.cos() - I * (q2 + k * k - lam * lam) * a * sinc(qa)
        }
        Family::ModelII => model_ii_denominator(v0, a, lam, k),
    }
}

/// Magnitude of the transmission denominator at `k = iβ`.
///
/// Model I is scaled the same way as the Model-I eigencondition so the two
/// residuals are directly comparable.
pub fn transmission_pole_residual(spec: &PotentialSpec, beta: Complex64) -> f64 {
    let d = transmission_denominator(spec, I * beta);
    match spec.family() {
        Family::ModelI => d.norm() * spec.a() / crate::bound::model_i_scale(spec),
        Family::ModelII => d.norm(),
    }
}

pub fn s_matrix(data: &ScatteringData) -> SMatrix {
    SMatrix([[data.t_r, data.r_l], [data.r_r, data.t_l]])
}

/// Parity in the `(R, L)` channel basis.
pub const PARITY: [[Complex64; 2]; 2] = [[ZERO, ONE], [ONE, ZERO]];

/// Max-norm of `P⁻¹ S† P S - I`.
pub fn pseudo_unitarity_defect(s: &SMatrix) -> f64 {
    let product = matmul(matmul(matmul(PARITY, s.adjoint()), PARITY), s.0);
    defect_from_identity(product)
}

/// Max-norm of `S† S - I`.
pub fn unitarity_defect(s: &SMatrix) -> f64 {
    defect_from_identity(matmul(s.adjoint(), s.0))
}

/// `(|Re(r_L* t_L)|, |Re(r_R* t_R)|)`: zero when reflection and transmission
/// are a quarter period out of phase.
pub fn phase_defects(data: &ScatteringData) -> (f64, f64) {
    ((data.r_l.conj() * data.t_l).re.abs(), (data.r_r.conj() * data.t_r).re.abs())
}

/// `|r|² + |t|² - 1` for one incidence channel.
pub fn unitarity_deviation(data: &ScatteringData, side: Side) -> f64 {
    data.reflection(side).norm_sqr() + data.transmission(side).norm_sqr() - 1.0
}
