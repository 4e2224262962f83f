//! Declarative parameter sweeps, the figure presets and CSV output.
//!
//! Config files are flat `key = value` lines; `#` starts a comment. Keys:
//!
//! ```text
//! family  = model-i | model-ii
//! v0      = <depth>        # alias: mu
//! a       = <range>
//! lam     = <strength>
//! k       = <wavenumber>   # needed for scattering outputs unless k is swept
//! sweep   = lam | v0 | k | a
//! min     = <f64>
//! max     = <f64>
//! count   = <usize>        # >= 2
//! spacing = linear
//! outputs = beta, abs_t2, ...
//! oracle  = true | false
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bound::{find_real_bound_states_with, scan_window, ModelIICondition, DEFAULT_TOL, GRID_POINTS};
use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::potential::{decompose, Family, PotentialSpec};
use crate::scattering::{amplitudes, pseudo_unitarity_defect, s_matrix, unitarity_deviation, ScatteringData, Side};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "PSEUDOWELL_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Swept {
    Lam,
    V0,
    K,
    A,
}

impl Swept {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lam => "lam",
            Self::V0 => "v0",
            Self::K => "k",
            Self::A => "a",
        }
    }
}

impl FromStr for Swept {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lam" => Ok(Self::Lam),
            "v0" | "mu" => Ok(Self::V0),
            "k" => Ok(Self::K),
            "a" => Ok(Self::A),
            other => Err(Error::Usage(format!("cannot sweep `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    Beta,
    TL,
    TR,
    RL,
    RR,
    AbsT2,
    AbsRL2,
    AbsRR2,
    DevL,
    DevR,
    PseudoDefect,
}

impl Output {
    pub const ALL: [Output; 11] = [
        Self::Beta,
        Self::TL,
        Self::TR,
        Self::RL,
        Self::RR,
        Self::AbsT2,
        Self::AbsRL2,
        Self::AbsRR2,
        Self::DevL,
        Self::DevR,
        Self::PseudoDefect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::TL => "tL",
            Self::TR => "tR",
            Self::RL => "rL",
            Self::RR => "rR",
            Self::AbsT2 => "abs_t2",
            Self::AbsRL2 => "abs_rL2",
            Self::AbsRR2 => "abs_rR2",
            Self::DevL => "dev_L",
            Self::DevR => "dev_R",
            Self::PseudoDefect => "pseudo_defect",
        }
    }

    fn is_complex(self) -> bool {
        matches!(self, Self::TL | Self::TR | Self::RL | Self::RR)
    }

    fn needs_scattering(self) -> bool {
        self != Self::Beta
    }

    fn columns(self) -> Vec<String> {
        if self.is_complex() {
            vec![format!("{}_re", self.name()), format!("{}_im", self.name())]
        } else {
            vec![self.name().to_string()]
        }
    }
}

impl FromStr for Output {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL.into_iter().find(|o| o.name() == s).ok_or_else(|| Error::Usage(format!("unknown output `{s}`")))
    }
}

/// Linear grid, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Usage(format!("grid needs at least 2 points, got {count}")));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Usage(format!("grid needs min < max, got [{min}, {max}]")));
        }
        Ok(Self { min, max, count })
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// The swept parameter's value in here is a placeholder.
    pub model: PotentialSpec,
    pub k: Option<f64>,
    pub swept: Swept,
    pub grid: Grid,
    pub outputs: Vec<Output>,
    pub oracle: bool,
    pub condition: ModelIICondition,
}

impl SweepSpec {
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec![self.swept.name().to_string()];
        cols.extend(self.outputs.iter().flat_map(|o| o.columns()));
        cols
    }

    fn point(&self, x: f64) -> Result<(PotentialSpec, Option<f64>)> {
        Ok(match self.swept {
            Swept::Lam => (self.model.with_lam(x)?, self.k),
            Swept::V0 => (self.model.with_v0(x)?, self.k),
            Swept::A => (self.model.with_a(x)?, self.k),
            Swept::K => (self.model, Some(x)),
        })
    }
}

/// Raw settings from a config file or the command line, before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepConfig {
    pub family: Option<Family>,
    pub v0: Option<f64>,
    pub a: Option<f64>,
    pub lam: Option<f64>,
    pub k: Option<f64>,
    pub sweep: Option<Swept>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: Option<usize>,
    pub outputs: Option<Vec<Output>>,
    pub oracle: Option<bool>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Usage(format!("`{key}` expects a number, got `{value}`")))
}

pub fn parse_outputs(value: &str) -> Result<Vec<Output>> {
    let outputs =
        value.split(',').filter(|s| !s.trim().is_empty()).map(Output::from_str).collect::<Result<Vec<_>>>()?;
    if outputs.is_empty() {
        return Err(Error::Usage("no outputs requested".into()));
    }
    Ok(outputs)
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let canonical = if key == "mu" { "v0" } else { key };
            if let Some(prev) = seen.insert(canonical.to_string(), lineno + 1) {
                return Err(Error::Usage(format!("line {}: `{key}` already set on line {prev}", lineno + 1)));
            }
            match canonical {
                "family" => cfg.family = Some(value.parse().map_err(|e: Error| Error::Usage(e.to_string()))?),
                "v0" => cfg.v0 = Some(parse_num(key, value)?),
                "a" => cfg.a = Some(parse_num(key, value)?),
                "lam" => cfg.lam = Some(parse_num(key, value)?),
                "k" => cfg.k = Some(parse_num(key, value)?),
                "sweep" => cfg.sweep = Some(value.parse()?),
                "min" => cfg.min = Some(parse_num(key, value)?),
                "max" => cfg.max = Some(parse_num(key, value)?),
                "count" => cfg.count = Some(parse_num(key, value)?),
                "spacing" if value == "linear" => {}
                "spacing" => return Err(Error::Usage(format!("unsupported spacing `{value}`"))),
                "outputs" => cfg.outputs = Some(parse_outputs(value)?),
                "oracle" => {
                    cfg.oracle = Some(match value {
                        "true" | "yes" | "1" => true,
                        "false" | "no" | "0" => false,
                        _ => return Err(Error::Usage(format!("`oracle` expects true/false, got `{value}`"))),
                    })
                }
                _ => return Err(Error::Usage(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        Ok(cfg)
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: SweepConfig) -> Self {
        Self {
            family: top.family.or(self.family),
            v0: top.v0.or(self.v0),
            a: top.a.or(self.a),
            lam: top.lam.or(self.lam),
            k: top.k.or(self.k),
            sweep: top.sweep.or(self.sweep),
            min: top.min.or(self.min),
            max: top.max.or(self.max),
            count: top.count.or(self.count),
            outputs: top.outputs.or(self.outputs),
            oracle: top.oracle.or(self.oracle),
        }
    }

    pub fn build(&self, condition: ModelIICondition) -> Result<SweepSpec> {
        let missing = |what: &str| Error::Usage(format!("missing `{what}`"));
        let family = self.family.ok_or_else(|| missing("family"))?;
        let swept = self.sweep.ok_or_else(|| missing("sweep"))?;
        let fixed = match swept {
            Swept::Lam => self.lam,
            Swept::V0 => self.v0,
            Swept::K => self.k,
            Swept::A => self.a,
        };
        if fixed.is_some() {
            return Err(Error::Usage(format!("`{}` is swept and cannot also be fixed", swept.name())));
        }
        let grid = Grid::new(
            self.min.ok_or_else(|| missing("min"))?,
            self.max.ok_or_else(|| missing("max"))?,
            self.count.ok_or_else(|| missing("count"))?,
        )?;
        let placeholder = grid.max;
        let pick = |value: Option<f64>, which: Swept, name: &str| -> Result<f64> {
            if swept == which {
                Ok(placeholder)
            } else {
                value.ok_or_else(|| missing(name))
            }
        };
        let v0 = pick(self.v0, Swept::V0, "v0")?;
        let a = pick(self.a, Swept::A, "a")?;
        let lam = if swept == Swept::Lam { placeholder } else { self.lam.unwrap_or(0.0) };
        let model = PotentialSpec::new(family, v0, a, lam).map_err(|e| Error::Usage(e.to_string()))?;

        let outputs = self.outputs.clone().ok_or_else(|| missing("outputs"))?;
        let scattering = outputs.iter().any(|o| o.needs_scattering());
        if scattering && swept != Swept::K && self.k.is_none() {
            return Err(Error::Usage("scattering outputs need `k` or `sweep = k`".into()));
        }
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Usage(format!("k must be positive, got {k}")));
            }
        }
        let must_be_positive = matches!(swept, Swept::K | Swept::A);
        if (must_be_positive && grid.min <= 0.0) || grid.min < 0.0 {
            return Err(Error::Usage(format!(
                "`{}` grid must stay in its domain, got min = {}",
                swept.name(),
                grid.min
            )));
        }
        Ok(SweepSpec { model, k: self.k, swept, grid, outputs, oracle: self.oracle.unwrap_or(false), condition })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigurePreset {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig1d,
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 8] =
        [Self::Fig1a, Self::Fig1b, Self::Fig1c, Self::Fig1d, Self::Fig2a, Self::Fig2b, Self::Fig2c, Self::Fig2d];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1a => "fig1a",
            Self::Fig1b => "fig1b",
            Self::Fig1c => "fig1c",
            Self::Fig1d => "fig1d",
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig2c => "fig2c",
            Self::Fig2d => "fig2d",
        }
    }

    /// The Model-I scattering panels use a = 10, ṽ₀ = 100, λ̃ = 5 and run k
    /// well past √ṽ₀ so the high-energy tail is visible; 2000 points resolve
    /// the resonances, which are about π/a apart. The Model-II scattering
    /// panels use μ̃ = 1, a = 1, λ̃ = 0.5.
    pub fn spec(self) -> SweepSpec {
        use Output::*;
        let (family, v0, a, lam, swept, grid, outputs) = match self {
            Self::Fig1a => (Family::ModelI, 1.0, 1.0, 0.0, Swept::Lam, (0.0, 1.6, 400), vec![Beta]),
            Self::Fig2a => (Family::ModelII, 1.0, 1.0, 0.0, Swept::Lam, (0.0, 2.0, 400), vec![Beta]),
            Self::Fig1b | Self::Fig1c | Self::Fig1d => {
                (Family::ModelI, 100.0, 10.0, 5.0, Swept::K, (0.05, 100.0, 2000), self.scattering_outputs())
            }
            Self::Fig2b | Self::Fig2c | Self::Fig2d => {
                (Family::ModelII, 1.0, 1.0, 0.5, Swept::K, (0.05, 50.0, 400), self.scattering_outputs())
            }
        };
        SweepSpec {
            model: PotentialSpec::new(family, v0, a, lam).expect("preset parameters are valid"),
            k: None,
            swept,
            grid: Grid::new(grid.0, grid.1, grid.2).expect("preset grid is valid"),
            outputs,
            oracle: false,
            condition: ModelIICondition::default(),
        }
    }

    fn scattering_outputs(self) -> Vec<Output> {
        match self {
            Self::Fig1b | Self::Fig2b => vec![Output::AbsT2],
            Self::Fig1c | Self::Fig2c => vec![Output::AbsRL2, Output::AbsRR2],
            _ => vec![Output::DevL, Output::DevR],
        }
    }
}

impl FromStr for FigurePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Usage(format!("unknown figure `{s}`")))
    }
}

impl fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Columns plus rows; `None` is written as an empty cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Comma separated, LF terminated, shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                if let Some(v) = cell {
                    line.push_str(&v.to_string());
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Smallest real β, from the closed-form condition or from the oracle.
pub fn least_bound_beta(spec: &PotentialSpec, oracle: bool, condition: ModelIICondition) -> Result<Option<f64>> {
    if !oracle {
        return Ok(find_real_bound_states_with(spec, DEFAULT_TOL, condition).first().map(|s| s.beta.re));
    }
    let Some((lo, hi)) = scan_window(spec) else {
        return Ok(None);
    };
    let roots = Oracle::default().real_bound_roots(&decompose(spec), lo, hi, GRID_POINTS, 1e-8)?;
    Ok(roots.first().copied())
}

fn scattering_at(spec: &PotentialSpec, k: f64, oracle: bool) -> Result<ScatteringData> {
    if oracle {
        Oracle::default().amplitudes(&decompose(spec), k)
    } else {
        amplitudes(spec, k)
    }
}

fn evaluate(sweep: &SweepSpec, x: f64) -> Result<Vec<Option<f64>>> {
    let (spec, k) = sweep.point(x)?;
    let data = match (sweep.outputs.iter().any(|o| o.needs_scattering()), k) {
        (true, Some(k)) => Some(scattering_at(&spec, k, sweep.oracle)?),
        (true, None) => return Err(Error::Usage("scattering outputs need k".into())),
        (false, _) => None,
    };
    let mut row = vec![Some(x)];
    for out in &sweep.outputs {
        let c = |z: Complex64| [Some(z.re), Some(z.im)];
        let d = data.as_ref();
        match out {
            Output::Beta => row.push(least_bound_beta(&spec, sweep.oracle, sweep.condition)?),
            Output::TL => row.extend(c(d.expect("scattering data").t_l)),
            Output::TR => row.extend(c(d.expect("scattering data").t_r)),
            Output::RL => row.extend(c(d.expect("scattering data").r_l)),
            Output::RR => row.extend(c(d.expect("scattering data").r_r)),
            Output::AbsT2 => row.push(d.map(|d| d.t_l.norm_sqr())),
            Output::AbsRL2 => row.push(d.map(|d| d.r_l.norm_sqr())),
            Output::AbsRR2 => row.push(d.map(|d| d.r_r.norm_sqr())),
            Output::DevL => row.push(d.map(|d| unitarity_deviation(d, Side::L))),
            Output::DevR => row.push(d.map(|d| unitarity_deviation(d, Side::R))),
            Output::PseudoDefect => row.push(d.map(|d| pseudo_unitarity_defect(&s_matrix(d)))),
        }
    }
    Ok(row)
}

/// Evaluates every grid point, possibly in parallel; rows come back in grid order.
pub fn run_sweep(sweep: &SweepSpec) -> Result<Table> {
    let rows =
        with_thread_cap(|| sweep.grid.points().par_iter().map(|&x| evaluate(sweep, x)).collect::<Result<Vec<_>>>())??;
    Ok(Table { columns: sweep.columns(), rows })
}

pub fn figure_table(preset: FigurePreset) -> Result<Table> {
    run_sweep(&preset.spec())
}

pub fn emit_figure(preset: FigurePreset, path: &std::path::Path) -> Result<()> {
    let table = figure_table(preset)?;
    let file =
        std::fs::File::create(path).map_err(|e| Error::Usage(format!("cannot create {}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    table
        .write_csv(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Runs `f` on a pool limited by [`THREADS_ENV`] when it is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(f());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
