use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use rabi_topo::scan::{classify_gap_events, sweep_line, ScanRecord, SweepSpec};
use rabi_topo::{solve_spectrum, GapEvent};

use crate::output::{write_csv, write_json, Format};
use crate::{check_level, CliError, ModelArgs, OutputArgs, Sweep};

pub const SCHEMA: &str = "rabi-topo/spectrum/v1";
pub const EVENTS_SCHEMA: &str = "rabi-topo/gap-events/v1";

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Sweep one parameter, e.g. g=0:4:400; emits one row per point for --j-e.
    #[arg(long)]
    pub sweep: Option<Sweep>,
    /// Level tracked along a sweep.
    #[arg(long = "j-e", default_value_t = 1)]
    pub j_e: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub j_e: usize,
    pub g: f64,
    pub g_over_gs: f64,
    pub lambda: f64,
    pub energy: Option<f64>,
    pub parity: Option<i8>,
    pub delta_plus: Option<f64>,
    pub delta_minus: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub side: String,
    pub location: f64,
    pub kind: String,
    pub gap_at_min: f64,
    pub parity_flip: bool,
    pub node_jump: Option<i64>,
    pub partial: bool,
}

impl From<&GapEvent<f64>> for EventRow {
    fn from(e: &GapEvent<f64>) -> Self {
        let text = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
        Self {
            side: text(json!(e.side)),
            location: e.location,
            kind: text(json!(e.kind)),
            gap_at_min: e.gap_at_min,
            parity_flip: e.parity_flip,
            node_jump: e.node_jump,
            partial: e.partial,
        }
    }
}

fn row(r: &ScanRecord<f64>, g_s: f64) -> SpectrumRow {
    SpectrumRow {
        j_e: r.j_e,
        g: r.g,
        g_over_gs: r.g / g_s,
        lambda: r.lambda,
        energy: r.energy,
        parity: r.parity.map(|p| p.sign()),
        delta_plus: r.delta_plus,
        delta_minus: r.delta_minus,
        error: r.error.as_ref().map(|e| e.message.clone()),
    }
}

pub fn run(a: &SpectrumArgs) -> Result<(), CliError> {
    let p = a.model.validate()?;
    let target = a.output.target();
    let Some(sweep) = a.sweep else {
        let spectrum = solve_spectrum(&p.model()).map_err(rabi_topo::Error::from)?;
        let rows: Vec<SpectrumRow> = spectrum
            .levels
            .iter()
            .zip(&spectrum.gaps)
            .map(|(l, gaps)| SpectrumRow {
                j_e: l.j_e,
                g: p.g,
                g_over_gs: p.g / p.g_s,
                lambda: p.lambda,
                energy: Some(l.energy),
                parity: Some(l.parity.sign()),
                delta_plus: Some(gaps.delta_plus),
                delta_minus: gaps.delta_minus,
                error: None,
            })
            .collect();
        let params = p.to_json(json!({}));
        return match target.format {
            Format::Csv => write_csv(target.open()?, SCHEMA, &params, &[], &rows),
            Format::Json => write_json(target.open()?, SCHEMA, &params, json!(rows), vec![]),
        };
    };

    check_level(a.j_e, &p)?;
    let spec = SweepSpec {
        axis: sweep.axis,
        range: p.range(&sweep),
        level: a.j_e,
        base: p.model(),
    };
    let mut cfg = p.scan_config(Some(1));
    cfg.topology = false;
    let records = sweep_line(&spec, &cfg)?;
    let events: Vec<EventRow> = classify_gap_events(&spec, &records, &cfg)?.iter().map(EventRow::from).collect();
    let rows: Vec<SpectrumRow> = records.iter().map(|r| row(r, p.g_s)).collect();
    let params = p.to_json(json!({ "sweep": sweep, "j_e": a.j_e }));
    match target.format {
        Format::Csv => {
            write_csv(target.open()?, SCHEMA, &params, &[], &rows)?;
            if let Some(path) = target.sidecar("events") {
                let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                write_csv(f, EVENTS_SCHEMA, &params, &[], &events)?;
            }
        }
        Format::Json => write_json(target.open()?, SCHEMA, &params, json!(rows), vec![("events", json!(events))])?,
    }
    match rows.iter().find_map(|r| r.error.as_ref()) {
        Some(e) => Err(CliError::Numerical(format!("sweep point failed: {e}"))),
        None => Ok(()),
    }
}
