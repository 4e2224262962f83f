//! Transfer-matrix propagation through a [`PiecewiseSystem`].
//!
//! This module never looks at the closed-form amplitudes or eigenvalue
//! conditions; it is the independent reference they are checked against.
//!
//! # Basis
//!
//! At any point `x` the pair `(ψ(x), ψ'(x))` is encoded as free-wave
//! coefficients `(F, B)` of wavenumber `k`, referenced to `x = 0`:
//!
//! ```text
//! ψ(x)  = F e^{ikx} + B e^{-ikx}
//! ψ'(x) = ik (F e^{ikx} - B e^{-ikx})
//! ```
//!
//! In the asymptotic regions these are the physical plane-wave amplitudes.
//! A transfer matrix maps `(F, B)` on the left of a structure to `(F, B)` on
//! its right. The conversion `(ψ, ψ') ↔ (F, B)` has the same determinant at
//! every `x`, so every factor and every product is unimodular. A force-free
//! region maps to the identity.
//!
//! # Scattering and bound states
//!
//! With `M` the full product, a beam incident from the left has
//! `t_R = det M / M22`, `r_R = -M21 / M22`; a beam incident from the right has
//! `t_L = 1 / M22`, `r_L = M12 / M22`. At `k = iβ` the left-decaying solution
//! `(0, 1)` emerges as `(M12, M22)`, so bound states are the zeros of `M22`.
//!
//! Matrices carry a separate log-magnitude so that deep evanescent regions
//! at `k = iβ` do not overflow.

use num_complex::Complex64;
use std::ops::Mul;

use crate::error::{Error, Result};
use crate::numerics::{max_abs, sinc, upper_sqrt, I, ONE, ZERO};
use crate::potential::PiecewiseSystem;
use crate::scattering::ScatteringData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    m: [[Complex64; 2]; 2],
}

impl TransferMatrix {
    pub fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self { m: [[ONE, ZERO], [ZERO, ONE]] }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    /// Zero-based entry access.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    fn scaled(&self, factor: f64) -> Self {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|v| *v *= factor);
        Self { m }
    }

    fn max_entry(&self) -> f64 {
        max_abs(&[self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]])
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let (a, b) = (self.m, rhs.m);
        TransferMatrix {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
        }
    }
}

/// `e^{log_scale} · matrix`, with `matrix` normalized to unit max-entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledTransfer {
    matrix: TransferMatrix,
    log_scale: f64,
}

impl ScaledTransfer {
    pub fn identity() -> Self {
        Self { matrix: TransferMatrix::identity(), log_scale: 0.0 }
    }

    fn normalized(matrix: TransferMatrix, log_scale: f64) -> Self {
        let peak = matrix.max_entry();
        if peak == 0.0 || !peak.is_finite() {
            return Self { matrix, log_scale };
        }
        Self { matrix: matrix.scaled(1.0 / peak), log_scale: log_scale + peak.ln() }
    }

    /// Normalized mantissa (max entry magnitude 1).
    pub fn mantissa(&self) -> &TransferMatrix {
        &self.matrix
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// The plain matrix; overflows if the scale is extreme.
    pub fn to_matrix(&self) -> TransferMatrix {
        self.matrix.scaled(self.log_scale.exp())
    }

    pub fn det(&self) -> Complex64 {
        self.matrix.det() * (2.0 * self.log_scale).exp()
    }
}

impl Mul for ScaledTransfer {
    type Output = ScaledTransfer;

    fn mul(self, rhs: ScaledTransfer) -> ScaledTransfer {
        ScaledTransfer::normalized(self.matrix * rhs.matrix, self.log_scale + rhs.log_scale)
    }
}

/// `k_local = √(k² - u)` on the branch with Im ≥ 0.
pub fn local_wavenumber(k: Complex64, u: Complex64) -> Complex64 {
    upper_sqrt(k * k - u)
}

/// Wraps a `(ψ, ψ')` propagator `e^{w_log}·w`, applied between `x_from` and
/// `x_to`, into the free-wave basis of wavenumber `k`.
fn conjugate_into_basis(k: Complex64, w: [[Complex64; 2]; 2], w_log: f64, x_from: f64, x_to: f64) -> ScaledTransfer {
    let ik = I * k;
    let signs = [1.0, -1.0];
    let mut cores = [[ZERO; 2]; 2];
    let mut phases = [[ZERO; 2]; 2];
    for (i, &sigma) in signs.iter().enumerate() {
        for (j, &tau) in signs.iter().enumerate() {
            cores[i][j] = 0.5 * (w[0][0] + tau * ik * w[0][1] + sigma * w[1][0] / ik + sigma * tau * w[1][1]);
            phases[i][j] = -sigma * ik * x_to + tau * ik * x_from;
        }
    }
    let peak = phases
        .iter()
        .flatten()
        .zip(cores.iter().flatten())
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(p, _)| p.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let peak = if peak.is_finite() { peak } else { 0.0 };
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = (phases[i][j] - peak).exp() * cores[i][j];
        }
    }
    ScaledTransfer::normalized(TransferMatrix::new(m), w_log + peak)
}

/// `(ψ, ψ')` propagator across a constant region with `κ² = k_local²`,
/// returned as `(mantissa, log_scale)`.
fn region_propagator(k_local: Complex64, width: f64) -> ([[Complex64; 2]; 2], f64) {
    let z = k_local * width;
    let kappa2 = k_local * k_local;
    let damp = z.im.abs();
    if damp < 20.0 {
        let c = z.cos();
        let s = sinc(z) * width;
        ([[c, s], [-kappa2 * s, c]], 0.0)
    } else {
        // cos and sin/κ both grow like e^{|Im z|}; factor it out.
        let up = (I * z - damp).exp();
        let down = (-I * z - damp).exp();
        let c = 0.5 * (up + down);
        let s = (up - down) / (2.0 * I * k_local);
        ([[c, s], [-kappa2 * s, c]], damp)
    }
}

fn scaled_region(k: Complex64, k_local: Complex64, x_from: f64, x_to: f64) -> ScaledTransfer {
    let (w, w_log) = region_propagator(k_local, x_to - x_from);
    conjugate_into_basis(k, w, w_log, x_from, x_to)
}

fn scaled_delta(strength: Complex64, k: Complex64, x0: f64) -> ScaledTransfer {
    conjugate_into_basis(k, [[ONE, ZERO], [strength, ONE]], 0.0, x0, x0)
}

/// Propagation across a constant region between `x_from` and `x_to` whose
/// local wavenumber is `k_local`, in the free-wave basis of wavenumber `k`.
///
/// Requires `k ≠ 0`. Only `k_local²` matters, so either branch gives the same
/// matrix.
pub fn region_matrix(k: Complex64, k_local: Complex64, x_from: f64, x_to: f64) -> TransferMatrix {
    debug_assert!(k.norm() > 0.0);
    scaled_region(k, k_local, x_from, x_to).to_matrix()
}

/// Continuity of ψ and the jump `ψ'(x0⁺) - ψ'(x0⁻) = strength · ψ(x0)`.
pub fn delta_matrix(strength: Complex64, k: Complex64, x0: f64) -> Result<TransferMatrix> {
    if k.norm() == 0.0 {
        return Err(Error::Domain("delta matrix needs k != 0".into()));
    }
    Ok(scaled_delta(strength, k, x0).to_matrix())
}

/// Transfer-matrix evaluator with a configurable delta-jump sign.
///
/// The default follows the convention documented in [`crate::potential`].
/// [`Oracle::flipped`] negates every jump; it exists to show that the
/// closed-form comparison is sensitive to the convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle {
    jump_sign: f64,
}

impl Default for Oracle {
    fn default() -> Self {
        Self { jump_sign: 1.0 }
    }
}

impl Oracle {
    pub fn flipped() -> Self {
        Self { jump_sign: -1.0 }
    }

    pub fn is_flipped(&self) -> bool {
        self.jump_sign < 0.0
    }

    /// Elementary factors in left-to-right order.
    pub fn factors(&self, system: &PiecewiseSystem, k: Complex64) -> Result<Vec<ScaledTransfer>> {
        if k.norm() == 0.0 {
            return Err(Error::Domain("transfer matrices need k != 0".into()));
        }
        let xs = system.interfaces();
        let us = system.region_potentials();
        let strengths = system.delta_strengths();
        let mut out = Vec::with_capacity(2 * xs.len());
        for (idx, &x) in xs.iter().enumerate() {
            out.push(scaled_delta(self.jump_sign * strengths[idx], k, x));
            if let Some(&next) = xs.get(idx + 1) {
                let u = us[idx + 1];
                if u != ZERO {
                    out.push(scaled_region(k, local_wavenumber(k, u), x, next));
                }
            }
        }
        Ok(out)
    }

    /// Full product of [`Oracle::factors`].
    ///
    /// Chaining free-wave factors loses about `(κ/k)²` per interface at small
    /// `k`, so the product is accumulated on `(ψ, ψ')` instead and moved into
    /// the free-wave basis once, between the outermost interfaces.
    pub fn transfer(&self, system: &PiecewiseSystem, k: Complex64) -> Result<ScaledTransfer> {
        if k.norm() == 0.0 {
            return Err(Error::Domain("transfer matrices need k != 0".into()));
        }
        let xs = system.interfaces();
        let (Some(&first), Some(&last)) = (xs.first(), xs.last()) else {
            return Ok(ScaledTransfer::identity());
        };
        let us = system.region_potentials();
        let strengths = system.delta_strengths();
        let mut cauchy = ScaledTransfer::identity();
        for (idx, &x) in xs.iter().enumerate() {
            let jump = [[ONE, ZERO], [self.jump_sign * strengths[idx], ONE]];
            cauchy = ScaledTransfer::normalized(TransferMatrix::new(jump), 0.0) * cauchy;
            if let Some(&next) = xs.get(idx + 1) {
                let (w, w_log) = region_propagator(local_wavenumber(k, us[idx + 1]), next - x);
                cauchy = ScaledTransfer::normalized(TransferMatrix::new(w), w_log) * cauchy;
            }
        }
        Ok(conjugate_into_basis(k, cauchy.matrix.m, cauchy.log_scale, first, last))
    }

    pub fn amplitudes(&self, system: &PiecewiseSystem, k: f64) -> Result<ScatteringData> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
        }
        let total = self.transfer(system, Complex64::new(k, 0.0))?;
        let m = total.mantissa();
        let m22 = m.get(1, 1);
        let scale = total.log_scale().exp();
        if (m22 * scale).norm() < 1e-14 {
            return Err(Error::DegenerateSystem((m22 * scale).norm()));
        }
        let t_r = m.det() * scale / m22;
        let r_r = -m.get(1, 0) / m22;
        let t_l = 1.0 / (m22 * scale);
        let r_l = m.get(0, 1) / m22;
        Ok(ScatteringData { k, t_l, t_r, r_l, r_r })
    }

    /// `M22` at `k = iβ`, divided by the largest entry of `M`.
    pub fn bound_condition(&self, system: &PiecewiseSystem, beta: Complex64) -> Result<Complex64> {
        let total = self.transfer(system, I * beta)?;
        Ok(total.mantissa().get(1, 1))
    }

    /// Real roots of the bound-state condition on `(beta_min, beta_max)`.
    ///
    /// Scans `n` uniform points for sign changes of `Re M22(iβ)` and bisects
    /// each bracket to machine precision. Brackets whose endpoint residual
    /// stays above `tol` are dropped.
    pub fn real_bound_roots(
        &self,
        system: &PiecewiseSystem,
        beta_min: f64,
        beta_max: f64,
        n: usize,
        tol: f64,
    ) -> Result<Vec<f64>> {
        let eval = |b: f64| -> Result<f64> { Ok(self.bound_condition(system, Complex64::new(b, 0.0))?.re) };
        let mut roots = Vec::new();
        if !(beta_max > beta_min) || n < 2 {
            return Ok(roots);
        }
        let step = (beta_max - beta_min) / (n - 1) as f64;
        let mut lo = beta_min;
        let mut f_lo = eval(lo)?;
        for i in 1..n {
            let hi = if i == n - 1 { beta_max } else { beta_min + step * i as f64 };
            let f_hi = eval(hi)?;
            if f_lo == 0.0 {
                roots.push(lo);
            } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
                let (mut a, mut b, mut fa) = (lo, hi, f_lo);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    let fm = eval(mid)?;
                    if fm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                let root = 0.5 * (a + b);
                if self.bound_condition(system, Complex64::new(root, 0.0))?.norm() < tol {
                    roots.push(root);
                }
            }
            lo = hi;
            f_lo = f_hi;
        }
        if f_lo == 0.0 {
            roots.push(lo);
        }
        Ok(roots)
    }
}

pub fn oracle_amplitudes(system: &PiecewiseSystem, k: f64) -> Result<ScatteringData> {
    Oracle::default().amplitudes(system, k)
}

pub fn oracle_bound_condition(system: &PiecewiseSystem, beta: Complex64) -> Result<Complex64> {
    Oracle::default().bound_condition(system, beta)
}
