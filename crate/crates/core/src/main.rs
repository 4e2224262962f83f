use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use pseudowell::bound::{find_complex_pair_with, find_real_bound_states_with, BoundState, ModelIICondition, StateKind};
use pseudowell::check::{run_check, CheckOptions};
use pseudowell::oracle::Oracle;
use pseudowell::potential::decompose;
use pseudowell::scattering::{amplitudes, pseudo_unitarity_defect, s_matrix, unitarity_deviation, Side};
use pseudowell::sweep::{parse_outputs, run_sweep, with_thread_cap, FigurePreset, SweepConfig, Table};
use pseudowell::{Error, Family, PotentialSpec, Result};

#[derive(Parser)]
#[command(
    name = "pseudowell",
    version,
    about = "Bound states and scattering for P-pseudo-Hermitian complex potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and write a CSV table.
    Sweep(SweepArgs),
    /// Regenerate the data behind one figure panel.
    Figure {
        /// fig1a ... fig2d
        preset: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Check {
        /// Negate every delta jump in the transfer-matrix reference.
        #[arg(long)]
        flip_jump_sign: bool,
        #[arg(long, default_value = "corrected")]
        model_ii_condition: String,
    },
    /// Bound states at one parameter point.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        /// Search for a complex-conjugate pair instead of real roots.
        #[arg(long)]
        complex: bool,
        #[arg(long, requires = "complex", allow_hyphen_values = true)]
        seed_re: Option<f64>,
        #[arg(long, requires = "seed_re", allow_hyphen_values = true)]
        seed_im: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = "corrected")]
        model_ii_condition: String,
    },
    /// Amplitudes and diagnostics at one wavenumber.
    Scatter {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: f64,
        /// Use the transfer-matrix reference instead of the closed forms.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// model-i or model-ii
    #[arg(long)]
    family: String,
    /// ṽ₀ for Model I, μ̃ for Model II
    #[arg(long, alias = "mu")]
    v0: f64,
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lam: f64,
}

impl ModelArgs {
    fn spec(&self) -> Result<PotentialSpec> {
        PotentialSpec::new(self.family.parse()?, self.v0, self.a, self.lam)
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Flat `key = value` config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long, alias = "mu")]
    v0: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lam: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    /// lam, v0, k or a
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    max: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated output names.
    #[arg(long)]
    outputs: Option<String>,
    /// Use the transfer-matrix reference for every value.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value = "corrected")]
    model_ii_condition: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl SweepArgs {
    fn config(&self) -> Result<SweepConfig> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
                SweepConfig::parse(&text)?
            }
            None => SweepConfig::default(),
        };
        let family = match &self.family {
            Some(f) => Some(f.parse::<Family>().map_err(|e| Error::Usage(e.to_string()))?),
            None => None,
        };
        let top = SweepConfig {
            family,
            v0: self.v0,
            a: self.a,
            lam: self.lam,
            k: self.k,
            sweep: self.sweep.as_deref().map(str::parse).transpose()?,
            min: self.min,
            max: self.max,
            count: self.count,
            outputs: self.outputs.as_deref().map(parse_outputs).transpose()?,
            oracle: self.oracle.then_some(true),
        };
        Ok(base.overlay(top))
    }
}

fn write_out(table: &Table, path: Option<&PathBuf>) -> Result<()> {
    let io = |e: std::io::Error| Error::Usage(format!("write failed: {e}"));
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(io)?;
            let mut w = std::io::BufWriter::new(file);
            table.write_csv(&mut w).map_err(io)?;
            w.flush().map_err(io)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(&mut lock).map_err(io)?;
            lock.flush().map_err(io)
        }
    }
}

fn condition(raw: &str) -> Result<ModelIICondition> {
    raw.parse()
}

fn print_states(states: &[BoundState]) {
    println!("beta_re,beta_im,energy_re,energy_im,kind,residual");
    for s in states {
        let kind = match s.kind {
            StateKind::Real => "real",
            StateKind::ComplexPairMember => "complex_pair",
        };
        println!("{},{},{},{},{kind},{}", s.beta.re, s.beta.im, s.energy.re, s.energy.im, s.residual);
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep(args) => {
            let spec = args.config()?.build(condition(&args.model_ii_condition)?)?;
            let table = run_sweep(&spec)?;
            eprintln!("{} rows", table.rows.len());
            write_out(&table, args.output.as_ref())?;
        }
        Command::Figure { preset, output } => {
            let preset: FigurePreset = preset.parse()?;
            let table = run_sweep(&preset.spec())?;
            write_out(&table, output.as_ref())?;
            eprintln!("{preset}: {} rows", table.rows.len());
        }
        Command::Check { flip_jump_sign, model_ii_condition } => {
            let options = CheckOptions {
                oracle: if flip_jump_sign { Oracle::flipped() } else { Oracle::default() },
                condition: condition(&model_ii_condition)?,
                ..Default::default()
            };
            let report = with_thread_cap(|| run_check(&options))?;
            println!("{report}");
            return Ok(ExitCode::from(report.exit_code() as u8));
        }
        Command::Bound { model, complex, seed_re, seed_im, tol, model_ii_condition } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::Usage(format!("tol must be positive, got {tol}")));
            }
            let spec = model.spec()?;
            let variant = condition(&model_ii_condition)?;
            let states = if complex {
                let seed = seed_re.map(|re| Complex64::new(re, seed_im.unwrap_or(0.0)));
                find_complex_pair_with(&spec, tol, seed, variant)?.to_vec()
            } else {
                find_real_bound_states_with(&spec, tol, variant)
            };
            if states.is_empty() {
                eprintln!("no real bound state");
            }
            print_states(&states);
        }
        Command::Scatter { model, k, oracle } => {
            let spec = model.spec()?;
            let data = if oracle { Oracle::default().amplitudes(&decompose(&spec), k)? } else { amplitudes(&spec, k)? };
            let columns = [
                "k",
                "tL_re",
                "tL_im",
                "tR_re",
                "tR_im",
                "rL_re",
                "rL_im",
                "rR_re",
                "rR_im",
                "abs_t2",
                "abs_rL2",
                "abs_rR2",
                "dev_L",
                "dev_R",
                "pseudo_defect",
            ];
            let row = vec![
                k,
                data.t_l.re,
                data.t_l.im,
                data.t_r.re,
                data.t_r.im,
                data.r_l.re,
                data.r_l.im,
                data.r_r.re,
                data.r_r.im,
                data.t_l.norm_sqr(),
                data.r_l.norm_sqr(),
                data.r_r.norm_sqr(),
                unitarity_deviation(&data, Side::L),
                unitarity_deviation(&data, Side::R),
                pseudo_unitarity_defect(&s_matrix(&data)),
            ];
            let table = Table {
                columns: columns.iter().map(|c| c.to_string()).collect(),
                rows: vec![row.into_iter().map(Some).collect()],
            };
            write_out(&table, None)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
