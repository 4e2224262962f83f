//! Bound states: eigenvalue conditions, real and complex root finding, the
//! near-threshold expansion, and binding curves.
//!
//! A bound state has `E = -β²` with tails `e^{βx}` on the left and `e^{-βx}`
//! on the right, so it is normalizable iff `Re β > 0`.

mod wavefunction;

pub use wavefunction::{build_wavefunction, eta_inner_product, norm_squared, pt_defect, Region, WaveFunction};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{expm1, sinc};
use crate::potential::{Family, PotentialSpec};

/// Uniform scan density for real roots.
pub const GRID_POINTS: usize = 2048;
/// Lower scan cutoff in units of 1/a; excludes the β = 0 roots.
pub const GRID_EPSILON: f64 = 1e-9;
/// Default residual tolerance for accepting a root.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Real,
    ComplexPairMember,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub beta: Complex64,
    pub energy: Complex64,
    pub kind: StateKind,
    pub residual: f64,
}

impl BoundState {
    fn new(beta: Complex64, kind: StateKind, residual: f64) -> Self {
        Self { beta, energy: -beta * beta, kind, residual }
    }
}

/// Which form of the Model-II eigenvalue condition to evaluate.
/// `Printed` carries the factor `(1 + e^{βa})`; it is kept as a selectable fault.
/// `Printed` carries the factor `(1 + e^{βa})` exactly as published.
/// `Corrected` uses `(1 + e^{-βa})`, which is what the transfer-matrix
/// quantization condition and the amplitude denominator at `k = iβ` both
/// reduce to. The two agree at λ̃ = 0 and share the threshold `μ_cr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelIICondition {
    Printed,
    #[default]
    Corrected,
}

impl std::str::FromStr for ModelIICondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "printed" | "a" => Ok(Self::Printed),
            "corrected" | "b" => Ok(Self::Corrected),
            other => Err(Error::Usage(format!("unknown Model-II condition `{other}`"))),
        }
    }
}

pub(crate) fn model_i_scale(spec: &PotentialSpec) -> f64 {
    let a2 = spec.a() * spec.a();
    1.0f64.max(spec.v0() * a2).max(spec.lam() * spec.lam() * a2)
}

/// `(q² - β² - λ̃²) sin(qa) - 2βq cos(qa)` with `q² = ṽ₀ - β²`, divided by `q`
/// so it is entire in β, then made dimensionless.
pub fn eigencondition_model_i(spec: &PotentialSpec, beta: Complex64) -> Complex64 {
    let (v0, a, lam) = (spec.v0(), spec.a(), spec.lam());
    let q2 = v0 - beta * beta;
    let qa = q2.sqrt() * a;
    let g = (q2 - beta * beta - lam * lam) * a * sinc(qa) - 2.0 * beta * qa.cos();
    g * a / model_i_scale(spec)
}

/// Residual of `8β³ - 4μ̃β² = λ̃²(1 - e^{-βa})[μ̃(1 - e^{-βa}) - 2β(1 + ·)]`,
/// dimensionless (times a³/8). The printed variant is multiplied through by
/// `e^{-βa}` so it stays bounded for large `Re β`.
pub fn eigencondition_model_ii(spec: &PotentialSpec, beta: Complex64, variant: ModelIICondition) -> Complex64 {
    let (mu, a, lam) = (spec.v0(), spec.a(), spec.lam());
    let l2 = lam * lam;
    let decay = (-beta * a).exp();
    let one_minus = -expm1(-beta * a);
    let cubic = 8.0 * beta * beta * beta - 4.0 * mu * beta * beta;
    let raw = match variant {
        ModelIICondition::Corrected => cubic - l2 * one_minus * (mu * one_minus - 2.0 * beta * (1.0 + decay)),
        ModelIICondition::Printed => {
            cubic * decay - l2 * one_minus * (mu * one_minus * decay - 2.0 * beta * (decay + 1.0))
        }
    };
    raw * a * a * a / 8.0
}

/// Dispatches to the family's condition (Model II in its corrected form).
pub fn eigencondition(spec: &PotentialSpec, beta: Complex64) -> Complex64 {
    eigencondition_with(spec, beta, ModelIICondition::default())
}

pub fn eigencondition_with(spec: &PotentialSpec, beta: Complex64, variant: ModelIICondition) -> Complex64 {
    match spec.family() {
        Family::ModelI => eigencondition_model_i(spec, beta),
        Family::ModelII => eigencondition_model_ii(spec, beta, variant),
    }
}

/// Real search window `(β_min, β_max)` for the family.
///
/// Model I is capped at `√ṽ₀` because a bound state needs `B < V₀`. Model II
/// roots never reach `μ̃/2`, so `μ̃` is a safe cap.
pub fn scan_window(spec: &PotentialSpec) -> Option<(f64, f64)> {
    let eps = GRID_EPSILON / spec.a();
    let hi = match spec.family() {
        Family::ModelI => spec.v0().sqrt() - eps,
        Family::ModelII => spec.v0(),
    };
    (hi > eps).then_some((eps, hi))
}

pub fn find_real_bound_states(spec: &PotentialSpec, tol: f64) -> Vec<BoundState> {
    find_real_bound_states_with(spec, tol, ModelIICondition::default())
}

/// Bracket-and-bisect on a uniform grid of [`GRID_POINTS`] over
/// [`scan_window`]. Returned states are sorted by ascending β.
pub fn find_real_bound_states_with(spec: &PotentialSpec, tol: f64, variant: ModelIICondition) -> Vec<BoundState> {
    let Some((lo, hi)) = scan_window(spec) else {
        return Vec::new();
    };
    let f = |b: f64| eigencondition_with(spec, Complex64::new(b, 0.0), variant).re;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> =
        (0..GRID_POINTS).map(|i| if i == GRID_POINTS - 1 { hi } else { lo + step * i as f64 }).collect();
    let values: Vec<f64> = grid.iter().map(|&b| f(b)).collect();

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..GRID_POINTS - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (values[i], values[i + 1]);
        let root = if fa == 0.0 {
            Some(a)
        } else if fb != 0.0 && fa.signum() != fb.signum() {
            Some(bisect(&f, a, b, fa))
        } else {
            None
        };
        if let Some(r) = root {
            roots.push(r);
        }
    }
    if values[GRID_POINTS - 1] == 0.0 {
        roots.push(hi);
    }

    let merge = 1e-9 * hi;
    roots.dedup_by(|b, a| (*b - *a).abs() < merge);

    let eps = GRID_EPSILON / spec.a();
    roots
        .into_iter()
        .filter(|&r| {
            if r >= 10.0 * eps {
                return true;
            }
            // Next to the β = 0 double root: keep only genuinely simple roots.
            let h = 0.5 * r;
            let slope = (f(r + h) - f(r - h)) / (2.0 * h);
            slope.abs() > 1e-12
        })
        .filter_map(|r| {
            let residual = eigencondition_with(spec, Complex64::new(r, 0.0), variant).norm();
            (residual < tol).then(|| BoundState::new(Complex64::new(r, 0.0), StateKind::Real, residual))
        })
        .collect()
}

/// Bisection to machine precision; `fa = f(a)` and `f(a)`, `f(b)` differ in sign.
fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

/// Near-threshold seed `β a = (3/8)|ε| + i√(|ε|/2)` with `ε = (ṽ₀ - λ̃²) a²`.
/// Only Model I has one.
pub fn default_complex_seed(spec: &PotentialSpec) -> Option<Complex64> {
    match spec.family() {
        Family::ModelI => {
            let a = spec.a();
            let eps = ((spec.v0() - spec.lam() * spec.lam()) * a * a).abs();
            Some(Complex64::new(0.375 * eps, (0.5 * eps).sqrt()) / a)
        }
        Family::ModelII => None,
    }
}

const NEWTON_MAX_ITER: usize = 200;

/// Damped Newton iteration on the complex residual; returns the root and its
/// conjugate, both verified.
pub fn find_complex_pair(spec: &PotentialSpec, tol: f64, seed: Option<Complex64>) -> Result<[BoundState; 2]> {
    find_complex_pair_with(spec, tol, seed, ModelIICondition::default())
}

pub fn find_complex_pair_with(
    spec: &PotentialSpec,
    tol: f64,
    seed: Option<Complex64>,
    variant: ModelIICondition,
) -> Result<[BoundState; 2]> {
    let seed = seed
        .or_else(|| default_complex_seed(spec))
        .ok_or_else(|| Error::Domain("a seed is required for Model-II complex roots".into()))?;
    let f = |b: Complex64| eigencondition_with(spec, b, variant);
    let root = newton(&f, seed, tol)?;
    if root.re <= 0.0 {
        return Err(Error::InvalidState(format!("converged to {root}, which does not decay at both ends")));
    }
    let partner = root.conj();
    let (r1, r2) = (f(root).norm(), f(partner).norm());
    if r2 >= tol {
        return Err(Error::InvalidState(format!("conjugate {partner} is not a root (residual {r2:e})")));
    }
    Ok([
        BoundState::new(root, StateKind::ComplexPairMember, r1),
        BoundState::new(partner, StateKind::ComplexPairMember, r2),
    ])
}

fn newton(f: &impl Fn(Complex64) -> Complex64, seed: Complex64, tol: f64) -> Result<Complex64> {
    let mut beta = seed;
    let mut value = f(beta);
    for _ in 0..NEWTON_MAX_ITER {
        let h = 1e-7 * beta.norm().max(1.0);
        let slope = (f(beta + h) - f(beta - h)) / (2.0 * h);
        if !(slope.is_finite() && value.is_finite()) || slope.norm() == 0.0 {
            break;
        }
        let step = value / slope;
        let mut damping = 1.0;
        let mut next = beta - step;
        let mut next_value = f(next);
        while !(next_value.norm() < value.norm()) && damping > 1e-6 {
            damping *= 0.5;
            next = beta - step * damping;
            next_value = f(next);
        }
        let moved = (next - beta).norm();
        beta = next;
        value = next_value;
        if value.norm() < tol && moved <= 1e-12 * beta.norm().max(1.0) {
            return Ok(beta);
        }
        if damping <= 1e-6 && value.norm() >= tol {
            // Stuck: no descent direction from here.
            break;
        }
    }
    Err(Error::Divergence { last: beta, iterations: NEWTON_MAX_ITER })
}

/// One root of the near-threshold cubic, in units of 1/a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeRoot {
    pub beta_a: Complex64,
    /// `Re β > 0`: the tails decay.
    pub physical: bool,
    /// Complex β: the state is not PT-invariant.
    pub pt_broken: bool,
}

/// Roots of the cubic obtained by expanding the Model-I condition around
/// `√ṽ₀ a = π/2`, `λ̃²a² = ṽ₀a² - ε`:
///
/// * ε > 0: `βa = -(3/8)ε ± √(ε/2)` and `βa = -2`
/// * ε < 0: `βa = (3/8)|ε| ± i√(|ε|/2)` and `βa = -2`
pub fn perturbative_roots_model_i(epsilon: f64) -> Vec<PerturbativeRoot> {
    let shift = 0.375 * epsilon.abs();
    let split = (0.5 * epsilon.abs()).sqrt();
    let values = if epsilon >= 0.0 {
        [Complex64::new(-shift + split, 0.0), Complex64::new(-shift - split, 0.0), Complex64::new(-2.0, 0.0)]
    } else {
        [Complex64::new(shift, split), Complex64::new(shift, -split), Complex64::new(-2.0, 0.0)]
    };
    values
        .into_iter()
        .map(|beta_a| PerturbativeRoot { beta_a, physical: beta_a.re > 0.0, pt_broken: beta_a.im != 0.0 })
        .collect()
}

/// Least-bound real β at each imaginary strength; `None` past threshold.
/// Grid points are evaluated in parallel and returned in input order.
pub fn binding_curve(spec: &PotentialSpec, lam_grid: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
    binding_curve_with(spec, lam_grid, ModelIICondition::default())
}

pub fn binding_curve_with(
    spec: &PotentialSpec,
    lam_grid: &[f64],
    variant: ModelIICondition,
) -> Result<Vec<(f64, Option<f64>)>> {
    lam_grid
        .par_iter()
        .map(|&lam| {
            let point = spec.with_lam(lam)?;
            let states = find_real_bound_states_with(&point, DEFAULT_TOL, variant);
            Ok((lam, states.first().map(|s| s.beta.re)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Even square-well level from `q tan(qa/2) = β`, bisected on q.
    fn square_well_even_level(v0: f64, a: f64) -> f64 {
        let g = |q: f64| q * (0.5 * q * a).tan() - (v0 - q * q).sqrt();
        let (mut lo, mut hi) = (1e-12, v0.sqrt().min(PI / a - 1e-12));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        (v0 - q * q).sqrt()
    }

    #[test]
    fn zero_binding_condition() {
        for (lam, a) in [(1.0, 1.0), (0.7, 2.0), (2.0, 0.3)] {
            let spec = PotentialSpec::model_i(lam * lam, a, lam).unwrap();
            assert!(eigencondition_model_i(&spec, c(0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn square_well_level() {
        let reference = square_well_even_level(1.0, 1.0);
        assert!((reference - 0.4351).abs() < 1e-4);
        let spec = PotentialSpec::model_i(1.0, 1.0, 0.0).unwrap();
        let states = find_real_bound_states(&spec, DEFAULT_TOL);
        assert_eq!(states.len(), 1);
        assert!((states[0].beta.re - reference).abs() < 1e-12);
        assert!(eigencondition_model_i(&spec, c(reference)).norm() < 1e-12);
    }

    #[test]
    fn no_potential_no_level() {
        let spec = PotentialSpec::model_i(0.0, 1.0, 0.0).unwrap();
        assert!(find_real_bound_states(&spec, DEFAULT_TOL).is_empty());
        // The regularized residual is nonzero for every β > 0.
        for b in [0.1, 1.0, 3.0] {
            let expected = -2.0 * (b * b) * (1.0f64 * b).sinh() / b - 2.0 * b * (1.0f64 * b).cosh();
            assert!((eigencondition_model_i(&spec, c(b)).re - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_well_level() {
        let spec = PotentialSpec::model_ii(1.0, 1.0, 0.0).unwrap();
        for variant in [ModelIICondition::Printed, ModelIICondition::Corrected] {
            let states = find_real_bound_states_with(&spec, DEFAULT_TOL, variant);
            assert_eq!(states.len(), 1);
            assert!((states[0].beta.re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn model_ii_double_root_at_zero() {
        for variant in [ModelIICondition::Printed, ModelIICondition::Corrected] {
            let spec = PotentialSpec::model_ii(1.3, 0.9, 0.8).unwrap();
            let f = |b: f64| eigencondition_model_ii(&spec, c(b), variant);
            assert_eq!(f(0.0).norm(), 0.0);
            let h = 1e-6;
            let slope = (f(h) - f(-h)) / (2.0 * h);
            assert!(slope.norm() < 1e-10);
            let curvature = (f(h) + f(-h) - 2.0 * f(0.0)) / (h * h);
            assert!(curvature.norm() > 1e-3);
        }
    }

    #[test]
    fn model_ii_nontrivial_root_reaches_zero_at_critical_depth() {
        let (lam, a) = (1.0, 1.0);
        let mu_cr = crate::potential::critical_depth(Family::ModelII, lam, a).unwrap();
        let spec = PotentialSpec::model_ii(mu_cr, a, lam).unwrap();
        let f = |b: f64| eigencondition_model_ii(&spec, c(b), ModelIICondition::Corrected).re;
        // With the β² coefficient gone, f/β³ tends to a finite nonzero limit.
        let h = 1e-3;
        assert!((f(h) / h.powi(3)).abs() > 1e-3);
        assert!((f(h) / (h * h)).abs() < 1e-2);
    }

    #[test]
    fn above_critical_strength_is_empty() {
        let spec = PotentialSpec::model_i(1.0, 1.0, 1.0).unwrap();
        assert!(find_real_bound_states(&spec, DEFAULT_TOL).is_empty());
        let spec = PotentialSpec::model_i(1.0, 1.0, 1.2).unwrap();
        assert!(find_real_bound_states(&spec, DEFAULT_TOL).is_empty());
    }

    #[test]
    fn deep_well_levels_are_sorted_and_distinct() {
        let spec = PotentialSpec::model_i(100.0, 10.0, 5.0).unwrap();
        let states = find_real_bound_states(&spec, DEFAULT_TOL);
        assert!(states.len() > 10);
        assert!(states.windows(2).all(|w| w[0].beta.re < w[1].beta.re));
        assert!(states.iter().all(|s| s.kind == StateKind::Real && s.residual < DEFAULT_TOL));
    }

    #[test]
    fn perturbative_formula_values() {
        let roots = perturbative_roots_model_i(0.01);
        assert!((roots[0].beta_a.re - 0.066_961_1).abs() < 1e-6);
        assert!((roots[0].beta_a.re - (0.005f64.sqrt() - 0.00375)).abs() < 1e-15);
        assert_eq!(roots.iter().filter(|r| r.physical).count(), 1);
        assert!(roots.iter().all(|r| !r.pt_broken));

        let roots = perturbative_roots_model_i(0.0);
        let values: Vec<f64> = roots.iter().map(|r| r.beta_a.re).collect();
        assert_eq!(values, vec![0.0, 0.0, -2.0]);
        assert!(roots.iter().all(|r| !r.physical));

        let roots = perturbative_roots_model_i(-0.01);
        assert!((roots[0].beta_a - Complex64::new(0.00375, 0.070_710_678_118_654_75)).norm() < 1e-15);
        assert_eq!(roots[1].beta_a, roots[0].beta_a.conj());
        assert!(roots[..2].iter().all(|r| r.physical && r.pt_broken));
        assert!(!roots[2].physical);
    }

    #[test]
    fn complex_pair_near_threshold() {
        let v0 = PI * PI / 4.0;
        let spec = PotentialSpec::model_i(v0, 1.0, (v0 + 1e-3).sqrt()).unwrap();
        let [p, q] = find_complex_pair(&spec, 1e-12, None).unwrap();
        assert_eq!(q.beta, p.beta.conj());
        assert!(p.beta.im.abs() > 0.0 && p.beta.re > 0.0);
        assert!((p.beta.im.abs() - (0.5e-3f64).sqrt()).abs() < 1e-3);
        assert!(q.residual < 1e-12);
    }

    #[test]
    fn far_seed_diverges() {
        let spec = PotentialSpec::model_i(1.0, 1.0, 1.5).unwrap();
        let result = find_complex_pair(&spec, 1e-12, Some(Complex64::new(10.0, 10.0)));
        assert!(result.is_err(), "{result:?}");
    }

    #[test]
    fn model_ii_needs_seed() {
        let spec = PotentialSpec::model_ii(1.0, 1.0, 2.0).unwrap();
        assert!(matches!(find_complex_pair(&spec, 1e-12, None), Err(Error::Domain(_))));
    }

    #[test]
    fn binding_curve_keeps_grid_order() {
        let spec = PotentialSpec::model_i(1.0, 1.0, 0.0).unwrap();
        let curve = binding_curve(&spec, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(curve.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert!((curve[0].1.unwrap() - 0.4351).abs() < 1e-4);
        assert!(curve[1].1.unwrap() < curve[0].1.unwrap());
        assert_eq!(curve[2].1, None);
        let spec = PotentialSpec::model_ii(1.0, 1.0, 0.0).unwrap();
        assert_eq!(binding_curve(&spec, &[0.0]).unwrap()[0].1, Some(0.5));
    }
}
