//! The two potential families and their piecewise decomposition.
//!
//! Everything is in reduced units with ħ²/(2m) = 1, so the Schrödinger
//! equation reads `-ψ'' + U(x) ψ = E ψ`. A delta spike `s δ(x - x0)` makes the
//! derivative jump by `ψ'(x0⁺) - ψ'(x0⁻) = s ψ(x0)`.
//!
//! * Model I: square well of depth `v0` and width `a`, with imaginary spikes
//!   `-iλ` at `-a/2` and `+iλ` at `+a/2`.
//! * Model II: attractive delta `-μ δ(x)` flanked by the same imaginary
//!   spikes at `±a/2`.
//!
//! A negative imaginary strength describes the mirror image of the
//! nonnegative one. [`PotentialSpec::new`] stores `|λ|`; the mirrored
//! problem has the same transmission and exchanged `r_L`/`r_R`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    ModelI,
    ModelII,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::ModelI => "I",
            Family::ModelII => "II",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" | "model-i" | "modeli" => Ok(Family::ModelI),
            "ii" | "2" | "model-ii" | "modelii" => Ok(Family::ModelII),
            other => Err(Error::InvalidSpec(format!("unknown model family `{other}`"))),
        }
    }
}

/// Parameters of one member of a potential family.
///
/// `v0` is the reduced well depth ṽ₀ (1/length²) for Model I and the reduced
/// delta strength μ̃ (1/length) for Model II. `lam` is the reduced imaginary
/// strength λ̃ (1/length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    family: Family,
    v0: f64,
    a: f64,
    lam: f64,
}

impl PotentialSpec {
    pub fn new(family: Family, v0: f64, a: f64, lam: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidSpec(format!("range a must be positive, got {a}")));
        }
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(Error::InvalidSpec(format!("depth must be nonnegative, got {v0}")));
        }
        if !lam.is_finite() {
            return Err(Error::InvalidSpec(format!("imaginary strength must be finite, got {lam}")));
        }
        Ok(Self { family, v0, a, lam: lam.abs() })
    }

    pub fn model_i(v0: f64, a: f64, lam: f64) -> Result<Self> {
        Self::new(Family::ModelI, v0, a, lam)
    }

    pub fn model_ii(mu: f64, a: f64, lam: f64) -> Result<Self> {
        Self::new(Family::ModelII, mu, a, lam)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn lam(&self) -> f64 {
        self.lam
    }

    pub fn with_lam(&self, lam: f64) -> Result<Self> {
        Self::new(self.family, self.v0, self.a, lam)
    }

    pub fn with_v0(&self, v0: f64) -> Result<Self> {
        Self::new(self.family, v0, self.a, self.lam)
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(self.family, self.v0, a, self.lam)
    }
}

/// Constant-potential regions separated by interfaces that may carry complex
/// delta spikes. The outermost regions are force-free.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSystem {
    interfaces: Vec<f64>,
    region_potentials: Vec<Complex64>,
    delta_strengths: Vec<Complex64>,
}

impl PiecewiseSystem {
    pub fn new(
        interfaces: Vec<f64>,
        region_potentials: Vec<Complex64>,
        delta_strengths: Vec<Complex64>,
    ) -> Result<Self> {
        if region_potentials.len() != interfaces.len() + 1 {
            return Err(Error::InvalidSpec(format!(
                "{} interfaces need {} region potentials, got {}",
                interfaces.len(),
                interfaces.len() + 1,
                region_potentials.len()
            )));
        }
        if delta_strengths.len() != interfaces.len() {
            return Err(Error::InvalidSpec(format!(
                "{} interfaces need as many delta strengths, got {}",
                interfaces.len(),
                delta_strengths.len()
            )));
        }
        if interfaces.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("interface positions must be finite".into()));
        }
        if interfaces.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("interface positions must increase strictly".into()));
        }
        let outer = [region_potentials[0], region_potentials[region_potentials.len() - 1]];
        if outer.iter().any(|u| *u != Complex64::new(0.0, 0.0)) {
            return Err(Error::InvalidSpec("outermost regions must be force-free".into()));
        }
        Ok(Self { interfaces, region_potentials, delta_strengths })
    }

    /// A system with no structure at all.
    pub fn free() -> Self {
        Self { interfaces: Vec::new(), region_potentials: vec![Complex64::new(0.0, 0.0)], delta_strengths: Vec::new() }
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn region_potentials(&self) -> &[Complex64] {
        &self.region_potentials
    }

    pub fn delta_strengths(&self) -> &[Complex64] {
        &self.delta_strengths
    }

    /// Extent between the first and last interface (zero for fewer than two).
    pub fn span(&self) -> f64 {
        match (self.interfaces.first(), self.interfaces.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Image under x → -x followed by complex conjugation of every potential.
    pub fn reflected_conjugate(&self) -> Self {
        Self {
            interfaces: self.interfaces.iter().rev().map(|x| -x).collect(),
            region_potentials: self.region_potentials.iter().rev().map(|u| u.conj()).collect(),
            delta_strengths: self.delta_strengths.iter().rev().map(|s| s.conj()).collect(),
        }
    }

    /// `V(-x) = V(x)*`, the structural form of `H† = P H P⁻¹`.
    pub fn is_p_pseudo_hermitian(&self, tol: f64) -> bool {
        let image = self.reflected_conjugate();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
        let close_c = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol);
        close(&self.interfaces, &image.interfaces)
            && close_c(&self.region_potentials, &image.region_potentials)
            && close_c(&self.delta_strengths, &image.delta_strengths)
    }

    /// Same system with every delta strength negated.
    pub fn with_flipped_jumps(&self) -> Self {
        Self {
            interfaces: self.interfaces.clone(),
            region_potentials: self.region_potentials.clone(),
            delta_strengths: self.delta_strengths.iter().map(|s| -s).collect(),
        }
    }

    /// Recovers the family parameters when the system has one of the two
    /// canonical shapes produced by [`decompose`].
    pub fn to_spec(&self) -> Option<PotentialSpec> {
        let zero = Complex64::new(0.0, 0.0);
        match self.interfaces.as_slice() {
            [lo, hi] => {
                let a = hi - lo;
                let depth = -self.region_potentials[1];
                let lam = self.delta_strengths[1].im;
                let ok = (lo + hi).abs() <= 1e-15 * a
                    && depth.im == 0.0
                    && self.delta_strengths[0] == Complex64::new(0.0, -lam)
                    && self.delta_strengths[1].re == 0.0;
                if ok {
                    PotentialSpec::model_i(depth.re, a, lam).ok()
                } else {
                    None
                }
            }
            [lo, mid, hi] => {
                let a = hi - lo;
                let lam = self.delta_strengths[2].im;
                let mu = -self.delta_strengths[1];
                let ok = *mid == 0.0
                    && (lo + hi).abs() <= 1e-15 * a
                    && self.region_potentials.iter().all(|u| *u == zero)
                    && mu.im == 0.0
                    && self.delta_strengths[0] == Complex64::new(0.0, -lam)
                    && self.delta_strengths[2].re == 0.0;
                if ok {
                    PotentialSpec::model_ii(mu.re, a, lam).ok()
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

pub fn decompose(spec: &PotentialSpec) -> PiecewiseSystem {
    let half = 0.5 * spec.a;
    let zero = Complex64::new(0.0, 0.0);
    let left = Complex64::new(0.0, -spec.lam);
    let right = Complex64::new(0.0, spec.lam);
    match spec.family {
        Family::ModelI => PiecewiseSystem {
            interfaces: vec![-half, half],
            region_potentials: vec![zero, Complex64::new(-spec.v0, 0.0), zero],
            delta_strengths: vec![left, right],
        },
        Family::ModelII => PiecewiseSystem {
            interfaces: vec![-half, 0.0, half],
            region_potentials: vec![zero; 4],
            delta_strengths: vec![left, Complex64::new(-spec.v0, 0.0), right],
        },
    }
}

/// Imaginary strength at which the least-bound state reaches zero binding.
///
/// Model I: `λ̃ = √ṽ₀`. Model II: the λ̃ solving `μ̃ = 4λ̃²a / (4 + λ̃²a²)`,
/// which only exists for `μ̃ a < 4`.
pub fn critical_imaginary_strength(spec: &PotentialSpec) -> Result<f64> {
    match spec.family {
        Family::ModelI => Ok(spec.v0.sqrt()),
        Family::ModelII => {
            let mu_a = spec.v0 * spec.a;
            if mu_a >= 4.0 {
                return Err(Error::NoCriticalStrength { mu_a });
            }
            Ok(2.0 * (spec.v0 / (spec.a * (4.0 - mu_a))).sqrt())
        }
    }
}

/// Depth below which no bound state survives a given imaginary strength.
pub fn critical_depth(family: Family, lam: f64, a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidSpec(format!("range a must be positive, got {a}")));
    }
    if !(lam.is_finite() && lam >= 0.0) {
        return Err(Error::InvalidSpec(format!("imaginary strength must be nonnegative, got {lam}")));
    }
    Ok(match family {
        Family::ModelI => lam * lam,
        Family::ModelII => {
            let l2 = lam * lam;
            4.0 * l2 * a / (4.0 + l2 * a * a)
        }
    })
}
