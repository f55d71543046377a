//! `rabi-topo`: spectra, single-state reports, sweeps, phase diagrams and
//! code strings of the anisotropic quantum Rabi model as CSV or JSON.

mod code;
mod output;
mod scan;
mod spectrum;
mod state;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use rabi_topo::{critical_coupling, AxisRange, ModelParamsF64, PipelineConfigF64, ScanConfigF64, SweepAxis, TopoConfigF64};

use output::{Format, Target};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<rabi_topo::Error> for CliError {
    fn from(e: rabi_topo::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GUnit {
    /// Units of the level splitting.
    Omega,
    /// Units of the critical coupling g_s = sqrt(omega)/2.
    Gs,
}

/// `AXIS=lo:hi:n`, e.g. `g=0:4:400` or `lambda=0:2:40`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("sweep {s:?} must look like AXIS=lo:hi:n with AXIS g or lambda");
        let (axis, range) = s.split_once('=').ok_or_else(bad)?;
        let axis: SweepAxis = axis.trim().parse().map_err(|_| bad())?;
        let parts: Vec<&str> = range.split(':').collect();
        let [lo, hi, n] = parts[..] else { return Err(bad()) };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("sweep {s:?}: need finite lo < hi"));
        }
        if n < 2 {
            return Err(format!("sweep {s:?}: need at least 2 points"));
        }
        Ok(Self { axis, lo, hi, n })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Bosonic frequency in units of the level splitting.
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    /// Coupling strength, in the unit chosen by --g-unit.
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long = "g-unit", value_enum, default_value_t = GUnit::Gs)]
    pub g_unit: GUnit,
    /// Ratio of counter-rotating to rotating coupling.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Highest photon number per parity block (at least 8).
    #[arg(long = "n-cut", default_value_t = 120)]
    pub n_cut: usize,
    /// Levels kept per spectrum.
    #[arg(long = "n-levels", default_value_t = 16)]
    pub n_levels: usize,
    /// Odd number of position grid points.
    #[arg(long = "grid-points", default_value_t = 4001)]
    pub grid_points: usize,
    /// Relative density below which zeros count as tail noise.
    #[arg(long = "eps-tail", default_value_t = 1e-6)]
    pub eps_tail: f64,
    /// Axis exclusion band for diagonal knots, relative to the largest radius.
    #[arg(long = "tol-axis", default_value_t = 1e-3)]
    pub tol_axis: f64,
    /// Gaps below this count as exact level crossings.
    #[arg(long = "gap-zero-tol", default_value_t = 1e-6)]
    pub gap_zero_tol: f64,
}

/// Everything that determines a command's numbers; echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunParams {
    pub omega: f64,
    pub big_omega: f64,
    /// Coupling in units of the level splitting.
    pub g: f64,
    pub g_unit: GUnit,
    pub g_s: f64,
    pub lambda: f64,
    pub n_cut: usize,
    pub n_levels: usize,
    pub grid_points: usize,
    pub eps_tail: f64,
    pub tol_axis: f64,
    pub gap_zero_tol: f64,
}

impl ModelArgs {
    pub fn validate(&self) -> Result<RunParams, CliError> {
        for (name, v) in [("eps-tail", self.eps_tail), ("tol-axis", self.tol_axis), ("gap-zero-tol", self.gap_zero_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Validation(format!("--{name} must be positive (got {v})")));
            }
        }
        if self.grid_points < 3 || self.grid_points % 2 == 0 {
            return Err(CliError::Validation(format!(
                "--grid-points must be odd and at least 3 (got {})",
                self.grid_points
            )));
        }
        let base = ModelParamsF64::new(self.omega, 0.0, self.lambda).with_truncation(self.n_cut, self.n_levels);
        let g_s = critical_coupling(&base);
        let rp = RunParams {
            omega: self.omega,
            big_omega: base.big_omega,
            g: self.to_abs_g(self.g, g_s),
            g_unit: self.g_unit,
            g_s,
            lambda: self.lambda,
            n_cut: self.n_cut,
            n_levels: self.n_levels,
            grid_points: self.grid_points,
            eps_tail: self.eps_tail,
            tol_axis: self.tol_axis,
            gap_zero_tol: self.gap_zero_tol,
        };
        rp.model().validate().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(rp)
    }

    fn to_abs_g(&self, g: f64, g_s: f64) -> f64 {
        match self.g_unit {
            GUnit::Omega => g,
            GUnit::Gs => g * g_s,
        }
    }
}

impl RunParams {
    pub fn model(&self) -> ModelParamsF64 {
        ModelParamsF64::new(self.omega, self.g, self.lambda).with_truncation(self.n_cut, self.n_levels)
    }

    pub fn pipeline(&self) -> PipelineConfigF64 {
        PipelineConfigF64 {
            grid_points: self.grid_points,
            topo: TopoConfigF64 {
                eps_tail: self.eps_tail,
                tol_axis: self.tol_axis,
                ..Default::default()
            },
        }
    }

    pub fn scan_config(&self, workers: Option<usize>) -> ScanConfigF64 {
        ScanConfigF64 {
            pipeline: self.pipeline(),
            gap_zero_tol: self.gap_zero_tol,
            workers,
            ..Default::default()
        }
    }

    /// Sweep range in absolute units.
    pub fn range(&self, s: &Sweep) -> AxisRange<f64> {
        let scale = match (s.axis, self.g_unit) {
            (SweepAxis::G, GUnit::Gs) => self.g_s,
            _ => 1.0,
        };
        AxisRange::new(s.lo * scale, s.hi * scale, s.n)
    }

    /// These parameters plus command-specific entries, as a JSON object.
    pub fn to_json(&self, extra: Value) -> Value {
        let mut v = serde_json::to_value(self).expect("params serialize");
        if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
            m.extend(e);
        }
        v
    }
}

pub fn check_level(j_e: usize, p: &RunParams) -> Result<(), CliError> {
    if j_e == 0 || j_e > p.n_levels {
        return Err(CliError::Validation(format!(
            "--j-e {j_e} is outside 1..={} (raise --n-levels)",
            p.n_levels
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when absent. Side tables need a file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    pub fn target(&self) -> Target {
        Target {
            path: self.out.clone(),
            format: self.format,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rabi-topo", version, about = "Spectra, spin textures and topological counters of the anisotropic quantum Rabi model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energies, parities and gaps at one point or along a sweep.
    Spectrum(spectrum::SpectrumArgs),
    /// Wavefunctions, spin texture, zeros, trajectory and counters of one level.
    State(state::StateArgs),
    /// Phase diagram over a g-lambda grid, resumable.
    Scan(scan::ScanArgs),
    /// Code string of a level, or the counters encoded in a given code.
    Code(code::CodeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => spectrum::run(&a),
        Command::State(a) => state::run(&a),
        Command::Scan(a) => scan::run(&a),
        Command::Code(a) => code::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rabi-topo: {e}");
            ExitCode::from(e.code())
        }
    }
}
