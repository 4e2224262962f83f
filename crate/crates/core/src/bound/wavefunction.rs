//! Bound-state wavefunctions and the integrals built from them.
//!
//! In every region `ψ'' = (β² + u) ψ`. With `ρ² = β² + u` a region is stored
//! either as `c₊ e^{ρ(x-A)} + c₋ e^{-ρ(x-A)}` or, when `ρ` vanishes, as
//! `v + s (x-A)`. `A` is the region's finite edge (the right edge for the
//! leftmost region, the left edge otherwise). Overlap integrals are done
//! term by term in closed form.

use num_complex::Complex64;

use super::BoundState;
use crate::error::{Error, Result};
use crate::numerics::{expm1c, sinhc, ONE, ZERO};
use crate::potential::{decompose, PotentialSpec};

/// Largest tolerated relative slope mismatch where the solutions shot in
/// from the two tails meet.
pub const GROWTH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Exponential { rate: Complex64, c_plus: Complex64, c_minus: Complex64 },
    Linear { value: Complex64, slope: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    pub anchor: f64,
    pub profile: Profile,
}

impl Region {
    pub fn value_at(&self, x: f64) -> Complex64 {
        let t = x - self.anchor;
        match self.profile {
            Profile::Exponential { rate, c_plus, c_minus } => exp_term(c_plus, rate * t) + exp_term(c_minus, -rate * t),
            Profile::Linear { value, slope } => value + slope * t,
        }
    }

    pub fn slope_at(&self, x: f64) -> Complex64 {
        let t = x - self.anchor;
        match self.profile {
            Profile::Exponential { rate, c_plus, c_minus } => {
                rate * (exp_term(c_plus, rate * t) - exp_term(c_minus, -rate * t))
            }
            Profile::Linear { slope, .. } => slope,
        }
    }

    /// `(c₊, c₋)` for exponential regions.
    pub fn coefficients(&self) -> Option<(Complex64, Complex64)> {
        match self.profile {
            Profile::Exponential { c_plus, c_minus, .. } => Some((c_plus, c_minus)),
            Profile::Linear { .. } => None,
        }
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

fn exp_term(coef: Complex64, exponent: Complex64) -> Complex64 {
    if coef == ZERO {
        ZERO
    } else {
        coef * exponent.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    beta: Complex64,
    interfaces: Vec<f64>,
    regions: Vec<Region>,
}

impl WaveFunction {
    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    fn region_of(&self, x: f64) -> &Region {
        self.regions.iter().find(|r| r.contains(x)).unwrap_or(&self.regions[self.regions.len() - 1])
    }

    /// ψ(x). At an interface the left region is used; ψ is continuous there.
    pub fn value(&self, x: f64) -> Complex64 {
        self.region_of(x).value_at(x)
    }

    /// One-sided derivatives `(ψ'(x⁻), ψ'(x⁺))`.
    pub fn slopes(&self, x: f64) -> (Complex64, Complex64) {
        let left = self.regions.iter().find(|r| x > r.lo && x <= r.hi);
        let right = self.regions.iter().find(|r| x >= r.lo && x < r.hi);
        let at = |r: Option<&Region>| r.map(|r| r.slope_at(x)).unwrap_or(ZERO);
        (at(left), at(right))
    }
}

/// Cauchy data `(ψ, ψ')` carried across a region of width `w` with `ρ² = β² + u`.
fn carry(value: Complex64, slope: Complex64, rho2: Complex64, w: f64) -> (Complex64, Complex64) {
    let rho = rho2.sqrt();
    let (ch, sh) = ((rho * w).cosh(), sinhc(rho * w) * w);
    (value * ch + slope * sh, value * rho2 * sh + slope * ch)
}

fn region_profile(value: Complex64, slope: Complex64, rho2: Complex64, width: f64) -> Profile {
    let rho = rho2.sqrt();
    if rho.norm() * width < 1e-8 {
        Profile::Linear { value, slope }
    } else {
        Profile::Exponential { rate: rho, c_plus: 0.5 * (value + slope / rho), c_minus: 0.5 * (value - slope / rho) }
    }
}

/// Shoots in from both tails, `e^{β(x - x₁)}` on the left and `e^{-β(x - x_n)}`
/// on the right, and joins the two at the interface where the left solution
/// is largest. Both sweeps run in their growing direction, so neither loses
/// accuracy to the other's decaying mode. The slope mismatch at the joint
/// re-verifies the eigenvalue.
pub fn build_wavefunction(spec: &PotentialSpec, state: &BoundState) -> Result<WaveFunction> {
    if !(state.beta.is_finite() && state.residual.is_finite()) {
        return Err(Error::InvalidState("non-finite bound state".into()));
    }
    let system = decompose(spec);
    let beta = state.beta;
    let xs = system.interfaces();
    let us = system.region_potentials();
    let strengths = system.delta_strengths();
    let n = xs.len();
    let rho2 = |j: usize| beta * beta + us[j];

    // Left sweep: data just left of each interface.
    let mut from_left = Vec::with_capacity(n);
    let (mut value, mut slope) = (ONE, beta);
    for j in 0..n {
        from_left.push((value, slope));
        if j + 1 < n {
            (value, slope) = carry(value, slope + strengths[j] * value, rho2(j + 1), xs[j + 1] - xs[j]);
        }
    }
    // Right sweep: data just right of each interface.
    let mut from_right = vec![(ZERO, ZERO); n];
    let (mut value, mut slope) = (ONE, -beta);
    for j in (0..n).rev() {
        from_right[j] = (value, slope);
        if j > 0 {
            (value, slope) = carry(value, -(slope - strengths[j] * value), rho2(j), xs[j] - xs[j - 1]);
            slope = -slope;
        }
    }

    let joint = (0..n)
        .max_by(|&a, &b| from_left[a].0.norm().total_cmp(&from_left[b].0.norm()))
        .expect("at least one interface");
    let (v_left, s_left) = from_left[joint];
    let (v_right, s_right) = from_right[joint];
    if v_right.norm() == 0.0 || !v_right.is_finite() {
        return Err(Error::InvalidState(format!("right solution vanishes at the joint, beta = {beta}")));
    }
    let scale = v_left / v_right;
    // Bring the right solution to the left side of the joint before comparing.
    let s_right_minus = scale * (s_right - strengths[joint] * v_right);
    let rate = beta.norm() + 1.0 / system.span().max(spec.a());
    let mismatch = (s_left - s_right_minus).norm() / (s_left.norm() + s_right_minus.norm() + rate * v_left.norm());
    if !(mismatch < GROWTH_TOL) {
        return Err(Error::InvalidState(format!(
            "left and right solutions do not join (relative slope mismatch {mismatch:e}) at beta = {beta}"
        )));
    }

    let mut regions = Vec::with_capacity(n + 1);
    regions.push(Region { lo: f64::NEG_INFINITY, hi: xs[0], anchor: xs[0], profile: tail_profile(beta, ONE, true) });
    for j in 0..n - 1 {
        let (lo, hi) = (xs[j], xs[j + 1]);
        // Each region is anchored on the side its data came from.
        let (anchor, v, s) = if j < joint {
            let (v, s) = from_left[j];
            (lo, v, s + strengths[j] * v)
        } else {
            let (v, s) = from_right[j + 1];
            (hi, scale * v, scale * (s - strengths[j + 1] * v))
        };
        regions.push(Region { lo, hi, anchor, profile: region_profile(v, s, rho2(j + 1), hi - lo) });
    }
    regions.push(Region {
        lo: xs[n - 1],
        hi: f64::INFINITY,
        anchor: xs[n - 1],
        profile: tail_profile(beta, scale, false),
    });

    Ok(WaveFunction { beta, interfaces: xs.to_vec(), regions })
}

fn tail_profile(beta: Complex64, amplitude: Complex64, left: bool) -> Profile {
    if beta.norm() == 0.0 {
        Profile::Linear { value: amplitude, slope: ZERO }
    } else if left {
        Profile::Exponential { rate: beta, c_plus: amplitude, c_minus: ZERO }
    } else {
        Profile::Exponential { rate: beta, c_plus: ZERO, c_minus: amplitude }
    }
}

/// `coef · t^power · e^{rate·t}` in a region's local coordinate `t = x - A`.
#[derive(Debug, Clone, Copy)]
struct Term {
    coef: Complex64,
    rate: Complex64,
    power: u32,
}

#[derive(Debug, Clone, Copy)]
enum Span {
    /// `t ∈ [0, len]`
    Finite(f64),
    /// `t ∈ [-len, 0]`
    FiniteBack(f64),
    /// `t ∈ (-∞, 0]`
    LeftTail,
    /// `t ∈ [0, ∞)`
    RightTail,
}

fn span_of(region: &Region) -> Span {
    if region.lo == f64::NEG_INFINITY {
        Span::LeftTail
    } else if region.hi == f64::INFINITY {
        Span::RightTail
    } else if region.anchor == region.lo {
        Span::Finite(region.hi - region.lo)
    } else {
        Span::FiniteBack(region.hi - region.lo)
    }
}

fn terms_of(region: &Region) -> Vec<Term> {
    match region.profile {
        Profile::Exponential { rate, c_plus, c_minus } => {
            vec![Term { coef: c_plus, rate, power: 0 }, Term { coef: c_minus, rate: -rate, power: 0 }]
        }
        Profile::Linear { value, slope } => {
            vec![Term { coef: value, rate: ZERO, power: 0 }, Term { coef: slope, rate: ZERO, power: 1 }]
        }
    }
}

fn conj_terms(terms: &[Term]) -> Vec<Term> {
    terms.iter().map(|t| Term { coef: t.coef.conj(), rate: t.rate.conj(), power: t.power }).collect()
}

/// `ψ(-x)` restricted to region `j`, written in region `j`'s coordinate.
fn reflected_terms(psi: &WaveFunction, j: usize) -> Vec<Term> {
    let here = &psi.regions[j];
    let mirror = &psi.regions[psi.regions.len() - 1 - j];
    // x - A = t, so -x - A' = -t - (A + A').
    let offset = here.anchor + mirror.anchor;
    terms_of(mirror)
        .into_iter()
        .flat_map(|term| match term.power {
            0 => vec![Term { coef: term.coef * (-term.rate * offset).exp(), rate: -term.rate, power: 0 }],
            // slope·(-t - offset)
            _ => vec![
                Term { coef: -term.coef * offset, rate: ZERO, power: 0 },
                Term { coef: -term.coef, rate: ZERO, power: 1 },
            ],
        })
        .collect()
}

/// Sums terms with the same power and (numerically) the same rate.
fn merge_terms(terms: Vec<Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for term in terms {
        let scale = term.rate.norm();
        match out
            .iter_mut()
            .find(|t| t.power == term.power && (t.rate - term.rate).norm() <= 1e-13 * scale.max(t.rate.norm()))
        {
            Some(existing) => existing.coef += term.coef,
            None => out.push(term),
        }
    }
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫ t^n e^{αt} dt` over the span.
fn moment(alpha: Complex64, n: u32, span: Span) -> Result<Complex64> {
    match span {
        Span::Finite(len) => Ok(finite_moment(alpha, n, len)),
        Span::FiniteBack(len) => {
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            Ok(sign * finite_moment(-alpha, n, len))
        }
        Span::LeftTail => {
            if alpha.re <= 0.0 {
                return Err(Error::DivergentIntegral(format!("left tail rate {alpha}")));
            }
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            Ok(sign * factorial(n) / alpha.powu(n + 1))
        }
        Span::RightTail => {
            if alpha.re >= 0.0 {
                return Err(Error::DivergentIntegral(format!("right tail rate {alpha}")));
            }
            Ok(factorial(n) / (-alpha).powu(n + 1))
        }
    }
}

fn finite_moment(alpha: Complex64, n: u32, len: f64) -> Complex64 {
    let z = alpha * len;
    if n == 0 {
        return len * expm1c(z);
    }
    if z.norm() < 0.5 {
        // Σ_m z^m / (m! (m+n+1)) · len^{n+1}
        let mut sum = ZERO;
        let mut power = ONE;
        for m in 0..40u32 {
            if m > 0 {
                power *= z / f64::from(m);
            }
            sum += power / f64::from(m + n + 1);
        }
        return sum * len.powi(n as i32 + 1);
    }
    // Integration by parts: I_n = len^n e^{z}/α - (n/α) I_{n-1}.
    let ez = z.exp();
    let mut acc = finite_moment(alpha, 0, len);
    for m in 1..=n {
        acc = (len.powi(m as i32) * ez - f64::from(m) * acc) / alpha;
    }
    acc
}

fn integrate(u: &[Term], v: &[Term], span: Span) -> Result<Complex64> {
    let mut total = ZERO;
    for a in u {
        for b in v {
            let coef = a.coef * b.coef;
            if coef == ZERO {
                continue;
            }
            total += coef * moment(a.rate + b.rate, a.power + b.power, span)?;
        }
    }
    Ok(total)
}

fn require_mirror_symmetric(psi: &WaveFunction) -> Result<()> {
    let xs = psi.interfaces();
    let scale = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let symmetric = xs.iter().zip(xs.iter().rev()).all(|(a, b)| (a + b).abs() <= 1e-12 * scale);
    if symmetric {
        Ok(())
    } else {
        Err(Error::Domain("parity needs interfaces symmetric about x = 0".into()))
    }
}

/// `∫ |ψ|² dx`.
pub fn norm_squared(psi: &WaveFunction) -> Result<f64> {
    let mut total = ZERO;
    for region in psi.regions() {
        let terms = merge_terms(terms_of(region));
        total += integrate(&conj_terms(&terms), &terms, span_of(region))?;
    }
    Ok(total.re)
}

/// `⟪ψ₁|ψ₂⟫_P = ∫ ψ₁*(x) ψ₂(-x) dx`.
pub fn eta_inner_product(psi1: &WaveFunction, psi2: &WaveFunction) -> Result<Complex64> {
    let (a, b) = (psi1.interfaces(), psi2.interfaces());
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0)) {
        return Err(Error::Domain("wavefunctions live on different systems".into()));
    }
    require_mirror_symmetric(psi1)?;
    let mut total = ZERO;
    for (j, region) in psi1.regions().iter().enumerate() {
        let left = conj_terms(&terms_of(region));
        let right = reflected_terms(psi2, j);
        total += integrate(&left, &right, span_of(region))?;
    }
    Ok(total)
}

/// Distance from PT invariance: `min_{|c|=1} ‖ψ*(-x) - c ψ(x)‖ / ‖ψ‖`.
pub fn pt_defect(psi: &WaveFunction) -> Result<f64> {
    require_mirror_symmetric(psi)?;
    let norm2 = norm_squared(psi)?;
    if !(norm2 > 0.0) {
        return Err(Error::InvalidState("zero wavefunction".into()));
    }
    // ⟨φ, ψ⟩ with φ(x) = ψ*(-x) is ∫ ψ(-x) ψ(x) dx.
    let mut overlap = ZERO;
    for (j, region) in psi.regions().iter().enumerate() {
        overlap += integrate(&reflected_terms(psi, j), &terms_of(region), span_of(region))?;
    }
    let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { ONE };

    let mut distance2 = 0.0;
    for (j, region) in psi.regions().iter().enumerate() {
        let mut diff = conj_terms(&reflected_terms(psi, j));
        diff.extend(terms_of(region).into_iter().map(|t| Term { coef: -phase * t.coef, ..t }));
        let diff = merge_terms(diff);
        distance2 += integrate(&conj_terms(&diff), &diff, span_of(region))?.re;
    }
    Ok((distance2.max(0.0) / norm2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{find_complex_pair, find_real_bound_states, StateKind, DEFAULT_TOL};
    use std::f64::consts::PI;

    fn real_state(beta: f64) -> BoundState {
        BoundState {
            beta: Complex64::new(beta, 0.0),
            energy: Complex64::new(-beta * beta, 0.0),
            kind: StateKind::Real,
            residual: 0.0,
        }
    }

    /// Composite Gauss-Legendre on [lo, hi]; independent of the closed forms.
    fn quadrature(f: impl Fn(f64) -> Complex64, lo: f64, hi: f64, panels: usize) -> Complex64 {
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let h = (hi - lo) / panels as f64;
        let mut sum = ZERO;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            for (x, w) in nodes {
                sum += w * 0.5 * h * f(mid + 0.5 * h * x);
            }
        }
        sum
    }

    /// Panels aligned with the kinks of ψ so each piece is smooth.
    fn piecewise_quadrature(psi: &WaveFunction, f: impl Fn(f64) -> Complex64, reach: f64) -> Complex64 {
        let mut cuts = vec![-reach];
        cuts.extend(psi.interfaces().iter().flat_map(|&x| [x, -x]));
        cuts.push(reach);
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        cuts.windows(2).map(|w| quadrature(&f, w[0], w[1], 2000)).sum()
    }

    #[test]
    fn zero_binding_closed_form() {
        let (lam, a) = (0.8, 1.5);
        let spec = PotentialSpec::model_i(lam * lam, a, lam).unwrap();
        let psi = build_wavefunction(&spec, &real_state(0.0)).unwrap();
        for x in [-5.0, -1.0, -0.75] {
            assert!((psi.value(x) - ONE).norm() < 1e-12);
        }
        for x in [-0.5, 0.0, 0.3, 0.75] {
            let expected = Complex64::new(0.0, -lam * (x + 0.5 * a)).exp();
            assert!((psi.value(x) - expected).norm() < 1e-12, "x = {x}");
        }
        for x in [0.8, 3.0, 40.0] {
            let expected = Complex64::new(0.0, -lam * a).exp();
            assert!((psi.value(x) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn square_well_ground_state_is_even() {
        let spec = PotentialSpec::model_i(1.0, 1.0, 0.0).unwrap();
        let state = find_real_bound_states(&spec, DEFAULT_TOL)[0];
        let psi = build_wavefunction(&spec, &state).unwrap();
        for x in [0.1, 0.45, 0.5, 0.9, 3.0] {
            assert!((psi.value(x) - psi.value(-x)).norm() < 1e-10);
        }
        let eta = eta_inner_product(&psi, &psi).unwrap();
        let norm = norm_squared(&psi).unwrap();
        assert!(norm > 0.0);
        assert!((eta - norm).norm() < 1e-12 * norm);
        assert!(pt_defect(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn continuity_and_jumps() {
        for spec in [
            PotentialSpec::model_i(1.0, 1.0, 0.5).unwrap(),
            PotentialSpec::model_ii(1.0, 1.0, 0.5).unwrap(),
            PotentialSpec::model_i(100.0, 10.0, 5.0).unwrap(),
        ] {
            let system = decompose(&spec);
            for state in find_real_bound_states(&spec, DEFAULT_TOL) {
                let psi = build_wavefunction(&spec, &state).unwrap();
                for (idx, &x) in system.interfaces().iter().enumerate() {
                    let left = psi.regions()[idx].value_at(x);
                    let right = psi.regions()[idx + 1].value_at(x);
                    let scale = left.norm().max(1e-300);
                    assert!((left - right).norm() <= 1e-10 * scale.max(1.0));
                    let (d_minus, d_plus) = psi.slopes(x);
                    let jump = d_plus - d_minus;
                    let expected = system.delta_strengths()[idx] * left;
                    let size = d_minus.norm().max(d_plus.norm()).max(expected.norm()).max(1.0);
                    assert!((jump - expected).norm() <= 1e-10 * size, "jump at {x}");
                }
            }
        }
    }

    #[test]
    fn off_eigenvalue_state_is_rejected() {
        let spec = PotentialSpec::model_i(1.0, 1.0, 0.0).unwrap();
        let result = build_wavefunction(&spec, &real_state(0.3));
        assert!(matches!(result, Err(Error::InvalidState(_))));
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let spec = PotentialSpec::model_i(2.0, 1.3, 0.9).unwrap();
        let state = find_real_bound_states(&spec, DEFAULT_TOL)[0];
        let psi = build_wavefunction(&spec, &state).unwrap();
        let reach = 60.0 / state.beta.re;
        let density = |x: f64| Complex64::new(psi.value(x).norm_sqr(), 0.0);
        let numeric = piecewise_quadrature(&psi, density, reach);
        let closed = norm_squared(&psi).unwrap();
        assert!((closed - numeric.re).abs() < 1e-8 * numeric.re, "{closed} vs {numeric}");
        let eta = piecewise_quadrature(&psi, |x| psi.value(x).conj() * psi.value(-x), reach);
        assert!((eta_inner_product(&psi, &psi).unwrap() - eta).norm() < 1e-8 * eta.norm().max(1.0));
    }

    #[test]
    fn deep_delta_level_builds() {
        // βa ≈ 41: one-sided shooting would drown in the growing mode.
        let spec = PotentialSpec::model_ii(16.7, 4.9, 0.0).unwrap();
        let psi = build_wavefunction(&spec, &real_state(8.35)).unwrap();
        let peak = psi.value(0.0).norm();
        assert!((peak - (8.35f64 * 2.45).exp()).abs() < 1e-6 * peak);
        assert!((psi.value(3.0) - psi.value(-3.0)).norm() < 1e-9 * psi.value(3.0).norm());
    }

    #[test]
    fn complex_pair_has_null_self_products() {
        let v0 = PI * PI / 4.0;
        let spec = PotentialSpec::model_i(v0, 1.0, (v0 + 1e-2).sqrt()).unwrap();
        let [s1, s2] = find_complex_pair(&spec, 1e-12, None).unwrap();
        let p1 = build_wavefunction(&spec, &s1).unwrap();
        let p2 = build_wavefunction(&spec, &s2).unwrap();
        let cross = eta_inner_product(&p1, &p2).unwrap();
        assert!(cross.norm() > 1e-3);
        assert!(eta_inner_product(&p1, &p1).unwrap().norm() < 1e-8 * cross.norm());
        assert!(eta_inner_product(&p2, &p2).unwrap().norm() < 1e-8 * cross.norm());
        assert!(pt_defect(&p1).unwrap() > 0.1);
        // Decaying at both ends.
        assert!(p1.value(-2.0e4).norm() < 1e-9 && p1.value(2.0e4).norm() < 1e-9);
    }

    #[test]
    fn real_state_with_imaginary_part_is_pt_symmetric() {
        let spec = PotentialSpec::model_i(1.0, 1.0, 0.6).unwrap();
        let state = find_real_bound_states(&spec, DEFAULT_TOL)[0];
        let psi = build_wavefunction(&spec, &state).unwrap();
        assert!(pt_defect(&psi).unwrap() < 1e-8);
    }

    #[test]
    fn non_decaying_tail_diverges() {
        let (lam, a) = (1.0, 1.0);
        let spec = PotentialSpec::model_i(lam * lam, a, lam).unwrap();
        let psi = build_wavefunction(&spec, &real_state(0.0)).unwrap();
        assert!(matches!(norm_squared(&psi), Err(Error::DivergentIntegral(_))));
    }
}
