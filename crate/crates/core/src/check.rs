//! The invariant suite behind `pseudowell check`.
//!
//! Every item reports the largest defect it saw next to its tolerance. Items
//! run concurrently; the report keeps a fixed order.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bound::{
    build_wavefunction, eta_inner_product, find_complex_pair_with, find_real_bound_states_with,
    perturbative_roots_model_i, pt_defect, scan_window, BoundState, ModelIICondition, DEFAULT_TOL, GRID_POINTS,
};
use crate::error::Result;
use crate::oracle::Oracle;
use crate::potential::{critical_depth, decompose, Family, PotentialSpec};
use crate::scattering::{
    amplitudes, phase_defects, pseudo_unitarity_defect, s_matrix, transmission_pole_residual, unitarity_defect,
    unitarity_deviation, ScatteringData, Side,
};
use crate::sweep::{figure_table, FigurePreset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub critical_point: f64,
    pub amplitude: f64,
    pub bound_beta: f64,
    pub pseudo_unitarity: f64,
    pub t_equal: f64,
    /// Allowed max/min spread of `error/ε²` across decades.
    pub order_spread: f64,
    pub conjugate: f64,
    pub eta: f64,
    pub pt_unbroken: f64,
    pub pt_broken: f64,
    pub pole: f64,
    pub figure_tail: f64,
    pub hermitian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            critical_point: 1e-6,
            amplitude: 1e-10,
            bound_beta: 1e-8,
            pseudo_unitarity: 1e-10,
            t_equal: 1e-15,
            order_spread: 5.0,
            conjugate: 1e-10,
            eta: 1e-8,
            pt_unbroken: 1e-8,
            pt_broken: 0.1,
            pole: 1e-8,
            figure_tail: 1e-2,
            hermitian: 1e-12,
        }
    }
}

/// What to run against. The two non-default settings are fault injections.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckOptions {
    pub tolerances: Tolerances,
    pub oracle: Oracle,
    pub condition: ModelIICondition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub max_defect: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<26} max_defect={:<10.3e} tol={:<8.1e} {:>6.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_defect,
            self.tolerance,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.items.iter().filter(|i| !i.passed).map(|i| i.name).collect()
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        let failed = self.failures();
        if failed.is_empty() {
            write!(f, "all {} items passed", self.items.len())
        } else {
            write!(f, "{} of {} items failed: {}", failed.len(), self.items.len(), failed.join(", "))
        }
    }
}

struct Outcome {
    max_defect: f64,
    passed: bool,
    detail: String,
}

fn bounded(max_defect: f64, tolerance: f64, detail: String) -> Outcome {
    Outcome { max_defect, passed: max_defect < tolerance, detail }
}

type Probe = fn(&CheckOptions) -> Result<Outcome>;
type Entry = (&'static str, Probe, fn(&Tolerances) -> f64);

const ITEMS: [Entry; 12] = [
    ("critical_strength_model_i", critical_strength_model_i, |t| t.critical_point),
    ("critical_depth_model_ii", critical_depth_model_ii, |_| 1.0),
    ("oracle_scattering", oracle_scattering, |t| t.amplitude),
    ("oracle_bound_states", oracle_bound_states, |t| t.bound_beta),
    ("pseudo_unitarity", pseudo_unitarity, |t| t.pseudo_unitarity),
    ("t_left_equals_right", t_left_equals_right, |t| t.t_equal),
    ("perturbative_order", perturbative_order, |t| t.order_spread),
    ("complex_pair", complex_pair, |t| t.eta),
    ("bound_state_poles", bound_state_poles, |t| t.pole),
    ("figures", figures, |t| t.figure_tail),
    ("hermitian_limit", hermitian_limit, |t| t.hermitian),
    ("model_ii_condition", model_ii_condition, |t| t.bound_beta),
];

pub fn item_names() -> Vec<&'static str> {
    ITEMS.iter().map(|(n, _, _)| *n).collect()
}

fn execute(entry: &Entry, options: &CheckOptions) -> CheckItem {
    let (name, probe, tol) = entry;
    let start = Instant::now();
    let outcome = probe(options).unwrap_or_else(|e| Outcome {
        max_defect: f64::INFINITY,
        passed: false,
        detail: format!("error: {e}"),
    });
    CheckItem {
        name,
        passed: outcome.passed,
        max_defect: outcome.max_defect,
        tolerance: tol(&options.tolerances),
        detail: outcome.detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every item concurrently; the report keeps the fixed item order.
pub fn run_check(options: &CheckOptions) -> CheckReport {
    CheckReport { items: ITEMS.par_iter().map(|entry| execute(entry, options)).collect() }
}

/// One item on the calling thread, so its timing is not shared with others.
pub fn run_item(name: &str, options: &CheckOptions) -> Option<CheckItem> {
    ITEMS.iter().find(|(n, _, _)| *n == name).map(|entry| execute(entry, options))
}

/// Parameter sets for the amplitude comparisons, six per family. Each family
/// includes one point above its critical strength.
pub fn scattering_sets() -> Vec<PotentialSpec> {
    let i = |v0, a, lam| PotentialSpec::model_i(v0, a, lam).expect("valid");
    let ii = |mu, a, lam| PotentialSpec::model_ii(mu, a, lam).expect("valid");
    vec![
        i(1.0, 1.0, 0.0),
        i(1.0, 1.0, 0.5),
        i(1.0, 1.0, 1.5),
        i(100.0, 10.0, 5.0),
        i(PI * PI / 4.0, 1.0, 1.6),
        i(10.0, 2.0, 0.3),
        ii(1.0, 1.0, 0.0),
        ii(1.0, 1.0, 0.5),
        ii(1.0, 1.0, 2.0),
        ii(0.0, 1.0, 1.0),
        ii(0.8, 1.0, 1.0),
        ii(3.0, 2.0, 0.7),
    ]
}

/// 64 points on `[0.05, 10]/a`.
pub fn k_grid(spec: &PotentialSpec) -> Vec<f64> {
    let (lo, hi) = (0.05 / spec.a(), 10.0 / spec.a());
    (0..64).map(|i| lo + (hi - lo) * i as f64 / 63.0).collect()
}

/// `|x - y| / max(1, |y|)`.
pub fn relative_gap(x: Complex64, y: Complex64) -> f64 {
    (x - y).norm() / y.norm().max(1.0)
}

pub fn amplitude_gap(a: &ScatteringData, b: &ScatteringData) -> f64 {
    [relative_gap(a.t_l, b.t_l), relative_gap(a.t_r, b.t_r), relative_gap(a.r_l, b.r_l), relative_gap(a.r_r, b.r_r)]
        .into_iter()
        .fold(0.0, f64::max)
}

/// The two figure-(a) settings, with λ̃ running past threshold.
pub fn binding_grids() -> Vec<(PotentialSpec, Vec<f64>)> {
    let grid = |hi: f64| (0..20).map(|i| hi * i as f64 / 19.0).collect::<Vec<_>>();
    vec![
        (PotentialSpec::model_i(1.0, 1.0, 0.0).expect("valid"), grid(1.6)),
        (PotentialSpec::model_ii(1.0, 1.0, 0.0).expect("valid"), grid(2.0)),
    ]
}

/// Oracle roots over the solver's own scan window.
///
/// Below `10 ε_grid` the plane-wave basis is hopeless: delta factors carry
/// entries of size `s/2β` and their product cancels to far below rounding, so
/// `M22` there is noise. The solver's own scan excludes the same zone.
pub fn oracle_roots(oracle: &Oracle, spec: &PotentialSpec) -> Result<Vec<f64>> {
    let Some((lo, hi)) = scan_window(spec) else {
        return Ok(Vec::new());
    };
    let roots = oracle.real_bound_roots(&decompose(spec), lo, hi, GRID_POINTS, 1e-8)?;
    Ok(roots.into_iter().filter(|&r| r >= 10.0 * lo).collect())
}

/// Largest distance from any root in one set to the nearest root in the other,
/// or infinity when the counts differ.
pub fn root_set_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let nearest = |x: f64, set: &[f64]| set.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
    a.iter().map(|&x| nearest(x, b)).chain(b.iter().map(|&y| nearest(y, a))).fold(0.0, f64::max)
}

fn has_state(spec: &PotentialSpec, condition: ModelIICondition) -> bool {
    !find_real_bound_states_with(spec, DEFAULT_TOL, condition).is_empty()
}

/// Bisects on "has a real bound state" in λ̃.
pub fn existence_threshold(spec: &PotentialSpec, mut lo: f64, mut hi: f64) -> Result<f64> {
    let condition = ModelIICondition::default();
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if has_state(&spec.with_lam(mid)?, condition) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn critical_strength_model_i(opts: &CheckOptions) -> Result<Outcome> {
    let spec = PotentialSpec::model_i(1.0, 1.0, 0.0)?;
    let star = existence_threshold(&spec, 0.5, 1.5)?;
    let gap = (star - 1.0).abs();
    Ok(bounded(gap, opts.tolerances.critical_point, format!("lambda* = {star:.9}")))
}

fn critical_depth_model_ii(opts: &CheckOptions) -> Result<Outcome> {
    let mu_cr = critical_depth(Family::ModelII, 1.0, 1.0)?;
    let above = has_state(&PotentialSpec::model_ii(mu_cr + 1e-3, 1.0, 1.0)?, opts.condition);
    let below = has_state(&PotentialSpec::model_ii(mu_cr - 1e-3, 1.0, 1.0)?, opts.condition);
    let passed = above && !below;
    Ok(Outcome {
        max_defect: if passed { 0.0 } else { 1.0 },
        passed,
        detail: format!("mu_cr = {mu_cr}; bound above: {above}, bound below: {below}"),
    })
}

fn oracle_scattering(opts: &CheckOptions) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for spec in scattering_sets() {
        let system = decompose(&spec);
        for k in k_grid(&spec) {
            let gap = amplitude_gap(&amplitudes(&spec, k)?, &opts.oracle.amplitudes(&system, k)?);
            worst = worst.max(gap);
            count += 1;
        }
    }
    let convention = if opts.oracle.is_flipped() { "flipped jump sign" } else { "standard jumps" };
    Ok(bounded(worst, opts.tolerances.amplitude, format!("{count} points, {convention}")))
}

fn oracle_bound_states(opts: &CheckOptions) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut roots = 0;
    for (base, lams) in binding_grids() {
        for lam in lams {
            let spec = base.with_lam(lam)?;
            let solver: Vec<f64> =
                find_real_bound_states_with(&spec, DEFAULT_TOL, opts.condition).iter().map(|s| s.beta.re).collect();
            let reference = oracle_roots(&opts.oracle, &spec)?;
            worst = worst.max(root_set_gap(&solver, &reference));
            roots += solver.len();
        }
    }
    Ok(bounded(worst, opts.tolerances.bound_beta, format!("{roots} solver roots on 40 grid points")))
}

fn pseudo_unitarity(opts: &CheckOptions) -> Result<Outcome> {
    let (mut closed, mut phase, mut via_oracle): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for spec in scattering_sets() {
        let system = decompose(&spec);
        for k in k_grid(&spec) {
            let data = amplitudes(&spec, k)?;
            closed = closed.max(pseudo_unitarity_defect(&s_matrix(&data)));
            let (l, r) = phase_defects(&data);
            phase = phase.max(l).max(r);
            let reference = opts.oracle.amplitudes(&system, k)?;
            via_oracle = via_oracle.max(pseudo_unitarity_defect(&s_matrix(&reference)));
        }
    }
    let worst = closed.max(phase).max(via_oracle);
    Ok(bounded(
        worst,
        opts.tolerances.pseudo_unitarity,
        format!("closed form {closed:.1e}, phases {phase:.1e}, oracle {via_oracle:.1e}"),
    ))
}

fn t_left_equals_right(opts: &CheckOptions) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for spec in scattering_sets() {
        for k in k_grid(&spec) {
            let data = amplitudes(&spec, k)?;
            worst = worst.max((data.t_l - data.t_r).norm());
        }
    }
    Ok(Outcome { max_defect: worst, passed: worst < opts.tolerances.t_equal, detail: "closed forms".into() })
}

/// `|β_numeric a - β_expansion a| / ε²` at ε = ±10⁻², ±10⁻³, ±10⁻⁴ around
/// `√ṽ₀ a = π/2`, per sign of ε.
pub fn perturbative_ratios() -> Result<[[f64; 3]; 2]> {
    let v0 = PI * PI / 4.0;
    let mut out = [[0.0; 3]; 2];
    for (row, sign) in [1.0, -1.0].into_iter().enumerate() {
        for (col, mag) in [1e-2, 1e-3, 1e-4].into_iter().enumerate() {
            let eps = sign * mag;
            let spec = PotentialSpec::model_i(v0, 1.0, (v0 - eps).sqrt())?;
            let predicted = perturbative_roots_model_i(eps)
                .into_iter()
                .find(|r| r.physical && r.beta_a.im >= 0.0)
                .expect("one physical root with Im >= 0")
                .beta_a;
            let numeric = if eps > 0.0 {
                find_real_bound_states_with(&spec, DEFAULT_TOL, ModelIICondition::default())
                    .first()
                    .map(|s| s.beta)
                    .ok_or_else(|| crate::Error::InvalidState(format!("no real root at eps = {eps}")))?
            } else {
                let [s, t] = find_complex_pair_with(&spec, DEFAULT_TOL, None, ModelIICondition::default())?;
                if s.beta.im >= 0.0 {
                    s.beta
                } else {
                    t.beta
                }
            };
            let diff = numeric - predicted;
            out[row][col] = diff.re.abs().max(diff.im.abs()) / (eps * eps);
        }
    }
    Ok(out)
}

fn perturbative_order(opts: &CheckOptions) -> Result<Outcome> {
    let ratios = perturbative_ratios()?;
    let spread = |r: &[f64; 3]| {
        let hi = r.iter().cloned().fold(0.0, f64::max);
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    };
    let worst = spread(&ratios[0]).max(spread(&ratios[1]));
    let fmt = |r: &[f64; 3]| format!("{:.3e}/{:.3e}/{:.3e}", r[0], r[1], r[2]);
    Ok(bounded(
        worst,
        opts.tolerances.order_spread,
        format!("err/eps^2 at 1e-2/1e-3/1e-4: eps>0 {}, eps<0 {}", fmt(&ratios[0]), fmt(&ratios[1])),
    ))
}

fn complex_pair(opts: &CheckOptions) -> Result<Outcome> {
    let t = &opts.tolerances;
    let v0 = PI * PI / 4.0;
    let spec = PotentialSpec::model_i(v0, 1.0, (v0 + 1e-2).sqrt())?;
    let [s1, s2] = find_complex_pair_with(&spec, DEFAULT_TOL, None, opts.condition)?;
    let conj_gap = (s2.beta - s1.beta.conj()).norm().max(s2.residual);
    let p1 = build_wavefunction(&spec, &s1)?;
    let p2 = build_wavefunction(&spec, &s2)?;
    let cross = eta_inner_product(&p1, &p2)?.norm();
    let self_ratio = eta_inner_product(&p1, &p1)?.norm().max(eta_inner_product(&p2, &p2)?.norm()) / cross;
    let broken = pt_defect(&p1)?.min(pt_defect(&p2)?);

    let mut unbroken: f64 = 0.0;
    for (base, lams) in binding_grids() {
        for lam in lams {
            let point = base.with_lam(lam)?;
            for state in find_real_bound_states_with(&point, DEFAULT_TOL, opts.condition) {
                unbroken = unbroken.max(pt_defect(&build_wavefunction(&point, &state)?)?);
            }
        }
    }
    let passed = conj_gap < t.conjugate && self_ratio < t.eta && broken > t.pt_broken && unbroken < t.pt_unbroken;
    Ok(Outcome {
        max_defect: self_ratio,
        passed,
        detail: format!(
            "beta = {:.6e}, conjugate gap {conj_gap:.1e}, PT defect pair {broken:.3}, real states {unbroken:.1e}",
            s1.beta
        ),
    })
}

/// Every real state on the binding grids plus the complex pair.
pub fn pole_states(condition: ModelIICondition) -> Result<Vec<(PotentialSpec, BoundState)>> {
    let mut states = Vec::new();
    for (base, lams) in binding_grids() {
        for lam in lams {
            let spec = base.with_lam(lam)?;
            for s in find_real_bound_states_with(&spec, DEFAULT_TOL, condition) {
                states.push((spec, s));
            }
        }
    }
    let v0 = PI * PI / 4.0;
    let spec = PotentialSpec::model_i(v0, 1.0, (v0 + 1e-2).sqrt())?;
    for s in find_complex_pair_with(&spec, DEFAULT_TOL, None, condition)? {
        states.push((spec, s));
    }
    Ok(states)
}

fn bound_state_poles(opts: &CheckOptions) -> Result<Outcome> {
    let states = pole_states(opts.condition)?;
    let worst = states.iter().map(|(spec, s)| transmission_pole_residual(spec, s.beta)).fold(0.0, f64::max);
    Ok(bounded(worst, opts.tolerances.pole, format!("{} states", states.len())))
}

fn figures(opts: &CheckOptions) -> Result<Outcome> {
    let mut problems = Vec::new();
    let mut tail: f64 = 0.0;
    for preset in FigurePreset::ALL {
        let first = figure_table(preset)?;
        if first.to_csv() != figure_table(preset)?.to_csv() {
            problems.push(format!("{preset} not deterministic"));
        }
        if matches!(preset, FigurePreset::Fig1d | FigurePreset::Fig2d) {
            let last = first.rows.last().expect("non-empty grid");
            tail = tail.max(last[1].unwrap_or(f64::INFINITY).abs()).max(last[2].unwrap_or(f64::INFINITY).abs());
        }
        if preset == FigurePreset::Fig1a {
            let betas = first.column("beta").expect("beta column");
            let lams = first.column("lam").expect("lam column");
            let present: Vec<f64> = betas.iter().flatten().copied().collect();
            if present.windows(2).any(|w| w[1] > w[0]) {
                problems.push("fig1a beta increases".into());
            }
            let cut = betas.iter().position(Option::is_none).unwrap_or(betas.len());
            if betas[cut..].iter().any(Option::is_some) {
                problems.push("fig1a beta reappears past threshold".into());
            }
            let (last_bound, first_free) = (lams[cut - 1].unwrap_or(0.0), lams.get(cut).copied().flatten());
            if !(last_bound < 1.0 && first_free.is_none_or(|l| l >= 1.0 - 1e-6)) {
                problems.push(format!("fig1a ends at {last_bound}, not at 1"));
            }
        }
    }
    let passed = problems.is_empty() && tail < opts.tolerances.figure_tail;
    Ok(Outcome {
        max_defect: tail,
        passed,
        detail: if problems.is_empty() {
            "8 presets deterministic; max tail deviation shown".into()
        } else {
            problems.join("; ")
        },
    })
}

fn hermitian_limit(opts: &CheckOptions) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for spec in scattering_sets().into_iter().filter(|s| s.lam() == 0.0) {
        for k in k_grid(&spec) {
            let data = amplitudes(&spec, k)?;
            worst = worst
                .max(unitarity_deviation(&data, Side::L).abs())
                .max(unitarity_deviation(&data, Side::R).abs())
                .max(unitarity_defect(&s_matrix(&data)));
        }
    }
    for mu in [0.3, 1.0, 2.5, 7.0] {
        let spec = PotentialSpec::model_ii(mu, 1.0, 0.0)?;
        let beta = find_real_bound_states_with(&spec, DEFAULT_TOL, opts.condition)
            .first()
            .map(|s| s.beta.re)
            .unwrap_or(f64::INFINITY);
        worst = worst.max((beta - 0.5 * mu).abs());
    }
    Ok(bounded(worst, opts.tolerances.hermitian, "unitarity and delta-well levels".into()))
}

/// Which Model-II condition reproduces the oracle's roots on the binding grid.
pub fn model_ii_arbitration() -> Result<Vec<(ModelIICondition, f64)>> {
    let (base, lams) = binding_grids().remove(1);
    let mut out = Vec::new();
    for variant in [ModelIICondition::Printed, ModelIICondition::Corrected] {
        let mut worst: f64 = 0.0;
        for &lam in &lams {
            let spec = base.with_lam(lam)?;
            let roots: Vec<f64> =
                find_real_bound_states_with(&spec, DEFAULT_TOL, variant).iter().map(|s| s.beta.re).collect();
            worst = worst.max(root_set_gap(&roots, &oracle_roots(&Oracle::default(), &spec)?));
        }
        out.push((variant, worst));
    }
    Ok(out)
}

fn model_ii_condition(opts: &CheckOptions) -> Result<Outcome> {
    let results = model_ii_arbitration()?;
    let matching: Vec<String> = results
        .iter()
        .filter(|(_, gap)| *gap < opts.tolerances.bound_beta)
        .map(|(v, _)| format!("{v:?}").to_lowercase())
        .collect();
    let active = results.iter().find(|(v, _)| *v == opts.condition).map(|(_, gap)| *gap).unwrap_or(f64::INFINITY);
    Ok(bounded(
        active,
        opts.tolerances.bound_beta,
        format!(
            "active: {}; matches oracle: {}",
            format!("{:?}", opts.condition).to_lowercase(),
            if matching.is_empty() { "none".into() } else { matching.join(", ") }
        ),
    ))
}
