use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use rabi_topo::realspace::amplify;
use rabi_topo::topology::{AxisZero, Axis};
use rabi_topo::{analyze, solve_spectrum, to_position, Grid, TopoAnalysisF64};

use crate::output::{write_csv, write_json, Format};
use crate::{check_level, CliError, ModelArgs, OutputArgs};

pub const SCHEMA: &str = "rabi-topo/state/v1";
pub const ZEROS_SCHEMA: &str = "rabi-topo/state-zeros/v1";
pub const TRAJECTORY_SCHEMA: &str = "rabi-topo/state-trajectory/v1";

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long = "j-e", default_value_t = 1)]
    pub j_e: usize,
    /// Also emit sign(v)|v|^P of the texture and trajectory, for display.
    #[arg(long)]
    pub amplify: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: f64,
    pub psi_up: f64,
    pub psi_down: f64,
    pub psi_x_up: f64,
    pub psi_x_down: f64,
    pub s_z: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub density: f64,
    pub s_z_amp: Option<f64>,
    pub s_x_amp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRow {
    pub x: f64,
    pub axis: String,
    pub digit: u8,
    pub companion_sign: i8,
    /// Vanishing spinor component, empty for virtual zeros.
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub x: f64,
    pub s_z: f64,
    pub s_x: f64,
    pub zero: bool,
    pub chord: bool,
    pub s_z_amp: Option<f64>,
    pub s_x_amp: Option<f64>,
}

fn zero_row(z: &AxisZero<f64>) -> ZeroRow {
    ZeroRow {
        x: z.x,
        axis: match z.axis {
            Axis::SigmaX => "sigma_x".into(),
            Axis::SigmaZ => "sigma_z".into(),
        },
        digit: z.digit(),
        companion_sign: z.companion_sign,
        source: z.source.map(|c| format!("{c:?}")),
    }
}

pub fn run(a: &StateArgs) -> Result<(), CliError> {
    let p = a.model.validate()?;
    check_level(a.j_e, &p)?;
    if let Some(power) = a.amplify {
        if !(power > 0.0 && power.is_finite()) {
            return Err(CliError::Validation(format!("--amplify must be positive (got {power})")));
        }
    }
    let model = p.model();
    let cfg = p.pipeline();
    let spectrum = solve_spectrum(&model).map_err(rabi_topo::Error::from)?;
    let level = spectrum.level(a.j_e).ok_or(rabi_topo::Error::LevelOutOfRange {
        j_e: a.j_e,
        n_levels: spectrum.levels.len(),
    })?;
    let grid = Grid::for_params(&model, cfg.grid_points).map_err(rabi_topo::Error::from)?;
    let st = to_position(level, &grid).map_err(rabi_topo::Error::from)?;
    let an: TopoAnalysisF64 = analyze(level, &st, &cfg.topo).map_err(rabi_topo::Error::from)?;

    let amp = |v: f64| a.amplify.map(|power| amplify(v, power));
    let tex = &an.texture;
    let grid_rows: Vec<GridRow> = (0..tex.x.len())
        .map(|i| GridRow {
            x: tex.x[i],
            psi_up: st.z_up[i],
            psi_down: st.z_down[i],
            psi_x_up: st.x_up[i],
            psi_x_down: st.x_down[i],
            s_z: tex.s_z[i],
            s_x: tex.s_x[i],
            s_y: tex.s_y[i],
            density: tex.density[i],
            s_z_amp: amp(tex.s_z[i]),
            s_x_amp: amp(tex.s_x[i]),
        })
        .collect();
    let mut zeros: Vec<ZeroRow> = an.x_zeros.iter().chain(&an.z_zeros).chain(&an.trajectory.bridge_zeros).map(zero_row).collect();
    zeros.sort_by(|l, r| l.x.total_cmp(&r.x));
    let trajectory: Vec<TrajectoryRow> = an
        .trajectory
        .points
        .iter()
        .map(|t| TrajectoryRow {
            x: t.x,
            s_z: t.s_z,
            s_x: t.s_x,
            zero: t.zero,
            chord: t.chord,
            s_z_amp: amp(t.s_z),
            s_x_amp: amp(t.s_x),
        })
        .collect();

    let s = &an.summary;
    let params = p.to_json(json!({ "j_e": a.j_e, "amplify": a.amplify }));
    let target = a.output.target();
    match target.format {
        Format::Csv => {
            let meta = [
                ("summary", serde_json::to_string(s).map_err(|e| CliError::Io(e.to_string()))?),
                ("tuple", format!("{{{},{},{},{}}}", s.n_z, s.n_w, s.n_ex, s.n_dk)),
                ("code", s.code.clone()),
            ];
            write_csv(target.open()?, SCHEMA, &params, &meta, &grid_rows)?;
            if let Some(path) = target.sidecar("zeros") {
                let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                write_csv(f, ZEROS_SCHEMA, &params, &[], &zeros)?;
            }
            if let Some(path) = target.sidecar("trajectory") {
                let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                write_csv(f, TRAJECTORY_SCHEMA, &params, &[], &trajectory)?;
            }
            Ok(())
        }
        Format::Json => {
            let data = json!({
                "summary": s,
                "tuple": [s.n_z, s.n_w, s.n_ex, s.n_dk],
                "grid": grid_rows,
                "zeros": zeros,
                "knots": an.knots,
                "trajectory": trajectory,
            });
            write_json(target.open()?, SCHEMA, &params, data, vec![])
        }
    }
}
