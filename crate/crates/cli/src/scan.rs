use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rabi_topo::scan::{assemble_phase_diagrams, cell_points, compute_cells, validate_diagram, Failure};
use rabi_topo::{AxisRange, Parity, PhaseDiagram, ScanRecordF64, SweepAxis, TopoSummary};

use crate::output::{read_csv, read_json, sidecar_path, write_csv, write_json, Format};
use crate::{CliError, ModelArgs, OutputArgs, RunParams, Sweep};

pub const SCHEMA: &str = "rabi-topo/scan/v1";
pub const BOUNDARY_SCHEMA: &str = "rabi-topo/scan-boundaries/v1";

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Grid axes, given twice: --sweep g=0:6:60 --sweep lambda=0:2:40.
    #[arg(long, required = true)]
    pub sweep: Vec<Sweep>,
    /// Levels to map, comma separated.
    #[arg(long = "j-e", value_delimiter = ',', default_value = "1")]
    pub j_e: Vec<usize>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Skip re-checking boundary cells under grid and truncation refinement.
    #[arg(long = "no-near-boundary")]
    pub no_near_boundary: bool,
    /// Skip the minimum-gap search along boundary edges.
    #[arg(long = "no-edge-gaps")]
    pub no_edge_gaps: bool,
}

/// One level at one cell, flattened for CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub ig: usize,
    pub il: usize,
    pub g: f64,
    pub g_over_gs: f64,
    pub lambda: f64,
    pub j_e: usize,
    pub energy: Option<f64>,
    pub parity: Option<i8>,
    pub delta_plus: Option<f64>,
    pub delta_minus: Option<f64>,
    pub n_z: Option<usize>,
    pub n_zx: Option<f64>,
    pub n_w: Option<i64>,
    pub n_w_alg: Option<f64>,
    pub n_aw: Option<usize>,
    pub n_ex: Option<usize>,
    pub n_dk: Option<usize>,
    pub code: Option<String>,
    pub degenerate: Option<bool>,
    pub knot_uncertain: Option<bool>,
    pub near_boundary: bool,
    pub error: Option<String>,
    pub error_validation: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub j_e: usize,
    pub ig_a: usize,
    pub il_a: usize,
    pub ig_b: usize,
    pub il_b: usize,
    /// Quantities that change across the edge, `;`-separated.
    pub changes: String,
    pub min_gap: Option<f64>,
    pub gap_closes: Option<bool>,
}

impl ScanRow {
    fn new(ig: usize, il: usize, r: &ScanRecordF64, g_s: f64) -> Self {
        let t = r.topo.as_ref();
        Self {
            ig,
            il,
            g: r.g,
            g_over_gs: r.g / g_s,
            lambda: r.lambda,
            j_e: r.j_e,
            energy: r.energy,
            parity: r.parity.map(i8::from),
            delta_plus: r.delta_plus,
            delta_minus: r.delta_minus,
            n_z: t.map(|t| t.n_z),
            n_zx: t.map(|t| t.n_zx),
            n_w: t.map(|t| t.n_w),
            n_w_alg: t.map(|t| t.n_w_alg),
            n_aw: t.map(|t| t.n_aw),
            n_ex: t.map(|t| t.n_ex),
            n_dk: t.map(|t| t.n_dk),
            code: t.map(|t| t.code.clone()),
            degenerate: t.map(|t| t.degenerate),
            knot_uncertain: t.map(|t| t.knot_uncertain),
            near_boundary: r.near_boundary,
            error: r.error.as_ref().map(|e| e.message.clone()),
            error_validation: r.error.as_ref().map(|e| e.validation),
        }
    }

    fn record(&self) -> Result<ScanRecordF64, CliError> {
        let parity = self
            .parity
            .map(Parity::try_from)
            .transpose()
            .map_err(|e| CliError::Validation(format!("bad parity in existing output: {e}")))?;
        let topo = match (self.n_z, self.n_zx, self.n_w, self.n_w_alg, self.n_aw, self.n_ex, self.n_dk, &self.code) {
            (Some(n_z), Some(n_zx), Some(n_w), Some(n_w_alg), Some(n_aw), Some(n_ex), Some(n_dk), Some(code)) => {
                Some(TopoSummary {
                    j_e: self.j_e,
                    energy: self.energy.unwrap_or(f64::NAN),
                    parity: parity.unwrap_or(Parity::Positive),
                    n_z,
                    n_zx,
                    n_w,
                    n_w_alg,
                    n_aw,
                    n_ex,
                    n_dk,
                    code: code.clone(),
                    degenerate: self.degenerate.unwrap_or(false),
                    knot_uncertain: self.knot_uncertain.unwrap_or(false),
                })
            }
            _ => None,
        };
        Ok(ScanRecordF64 {
            g: self.g,
            lambda: self.lambda,
            j_e: self.j_e,
            energy: self.energy,
            parity,
            delta_plus: self.delta_plus,
            delta_minus: self.delta_minus,
            topo,
            error: self.error.as_ref().map(|m| Failure {
                message: m.clone(),
                validation: self.error_validation.unwrap_or(false),
            }),
            near_boundary: self.near_boundary,
        })
    }
}

fn partial_path(out: &Path) -> PathBuf {
    sidecar_path(out, "partial")
}

/// Rows of an earlier run with the same schema and parameters.
fn previous_rows(path: &Path, format: Format, params: &Value) -> Result<Vec<ScanRow>, CliError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let (schema, old_params, rows) = match format {
        Format::Csv => {
            let f = read_csv::<ScanRow>(path)?;
            (f.schema, f.params, f.rows)
        }
        Format::Json => {
            let doc = read_json(path)?;
            let rows: Vec<ScanRow> = serde_json::from_value(doc["data"]["records"].clone())
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            (doc["schema"].as_str().unwrap_or_default().to_string(), doc["params"].clone(), rows)
        }
    };
    if schema != SCHEMA || &old_params != params {
        return Err(CliError::Validation(format!(
            "{} was written with a different schema or parameters; remove it or choose another --out",
            path.display()
        )));
    }
    Ok(rows)
}

/// Appends finished cells to the progress file so an interrupted run can resume.
struct Progress {
    path: PathBuf,
    params: Value,
    has_rows: bool,
}

impl Progress {
    fn append(&mut self, rows: &[ScanRow]) -> Result<(), CliError> {
        if rows.is_empty() {
            return Ok(());
        }
        let fresh = !self.path.exists();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| CliError::io(&self.path, e))?;
        if fresh {
            writeln!(f, "# schema: {SCHEMA}\n# params: {}", self.params).map_err(|e| CliError::io(&self.path, e))?;
        }
        let mut w = csv::WriterBuilder::new().has_headers(!self.has_rows).from_writer(f);
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::io(&self.path, e))?;
        self.has_rows = true;
        Ok(())
    }
}

fn axes(p: &RunParams, sweeps: &[Sweep]) -> Result<(AxisRange<f64>, AxisRange<f64>), CliError> {
    let find = |axis| sweeps.iter().find(|s| s.axis == axis);
    let (Some(g), Some(l)) = (find(SweepAxis::G), find(SweepAxis::Lambda)) else {
        return Err(CliError::Validation("scan needs --sweep g=lo:hi:n and --sweep lambda=lo:hi:n".into()));
    };
    if sweeps.len() != 2 {
        return Err(CliError::Validation("scan takes exactly one g and one lambda sweep".into()));
    }
    Ok((p.range(g), p.range(l)))
}

pub fn run(a: &ScanArgs) -> Result<(), CliError> {
    let p = a.model.validate()?;
    let (g_axis, l_axis) = axes(&p, &a.sweep)?;
    let base = p.model();
    validate_diagram(&g_axis, &l_axis, &a.j_e, &base)?;
    let mut cfg = p.scan_config(a.workers);
    cfg.near_boundary_check = !a.no_near_boundary;
    cfg.boundary_gaps = !a.no_edge_gaps;
    let params = p.to_json(json!({
        "sweeps": a.sweep,
        "j_e": a.j_e,
        "near_boundary_check": cfg.near_boundary_check,
        "edge_gaps": cfg.boundary_gaps,
    }));
    let target = a.output.target();
    let (ng, nl) = (g_axis.n, l_axis.n);
    let points = cell_points(&g_axis, &l_axis);

    // Earlier results, keyed by cell index then level.
    let mut done: BTreeMap<usize, BTreeMap<usize, ScanRow>> = BTreeMap::new();
    let mut final_complete = false;
    let mut progress = None;
    if let Some(out) = &target.path {
        let finished = previous_rows(out, target.format, &params)?;
        final_complete = out.exists();
        let partial = partial_path(out);
        let partial_rows = if partial.exists() {
            let f = read_csv::<ScanRow>(&partial)?;
            if f.schema != SCHEMA || f.params != params {
                return Err(CliError::Validation(format!(
                    "{} belongs to a run with different parameters; remove it",
                    partial.display()
                )));
            }
            f.rows
        } else {
            Vec::new()
        };
        let has_rows = !partial_rows.is_empty();
        for r in finished.into_iter().chain(partial_rows) {
            if r.ig < ng && r.il < nl && r.error.is_none() {
                done.entry(r.il * ng + r.ig).or_default().insert(r.j_e, r);
            }
        }
        progress = Some(Progress {
            path: partial,
            params: params.clone(),
            has_rows,
        });
    }
    let complete = |k: usize| done.get(&k).is_some_and(|m| a.j_e.iter().all(|j| m.contains_key(j)));
    let missing: Vec<usize> = (0..points.len()).filter(|&k| !complete(k)).collect();
    if missing.is_empty() && final_complete {
        eprintln!("rabi-topo: all {} cells already complete", points.len());
        return Ok(());
    }
    if !missing.is_empty() && missing.len() < points.len() {
        eprintln!("rabi-topo: resuming, {} of {} cells left", missing.len(), points.len());
    }

    let chunk = (4 * rayon_threads(a.workers)).max(ng);
    for ks in missing.chunks(chunk) {
        let pts: Vec<(f64, f64)> = ks.iter().map(|&k| points[k]).collect();
        let cells = compute_cells(&base, &pts, &a.j_e, &cfg);
        let mut rows = Vec::new();
        for (&k, cell) in ks.iter().zip(cells) {
            for r in &cell {
                let row = ScanRow::new(k % ng, k / ng, r, p.g_s);
                rows.push(row.clone());
                done.entry(k).or_default().insert(r.j_e, row);
            }
        }
        if let Some(pr) = progress.as_mut() {
            pr.append(&rows)?;
        }
    }

    let mut cells: Vec<Vec<ScanRecordF64>> = Vec::with_capacity(points.len());
    for k in 0..points.len() {
        let m = done.get(&k);
        let mut cell = Vec::with_capacity(a.j_e.len());
        for j in &a.j_e {
            let row = m.and_then(|m| m.get(j)).ok_or_else(|| CliError::Numerical(format!("cell {k} level {j} missing")))?;
            let mut r = row.record()?;
            r.near_boundary = false;
            cell.push(r);
        }
        cells.push(cell);
    }
    let diagrams = assemble_phase_diagrams(&g_axis, &l_axis, &a.j_e, &base, cells, &cfg)?;
    write_outputs(&target, &params, &diagrams, p.g_s)?;
    if let Some(pr) = &progress {
        if pr.path.exists() {
            fs::remove_file(&pr.path).map_err(|e| CliError::io(&pr.path, e))?;
        }
    }

    let failures: Vec<&rabi_topo::scan::Failure> = diagrams.iter().flat_map(|d| d.records.iter().filter_map(|r| r.error.as_ref())).collect();
    match failures.first() {
        None => Ok(()),
        Some(first) => {
            let msg = format!("{} cell levels failed, first: {}", failures.len(), first.message);
            if failures.iter().all(|f| f.validation) {
                Err(CliError::Validation(msg))
            } else {
                Err(CliError::Numerical(msg))
            }
        }
    }
}

fn rayon_threads(workers: Option<usize>) -> usize {
    workers.filter(|&n| n > 0).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn write_outputs(target: &crate::output::Target, params: &Value, diagrams: &[PhaseDiagram<f64>], g_s: f64) -> Result<(), CliError> {
    let Some(first) = diagrams.first() else { return Ok(()) };
    let ng = first.g_axis.n;
    let mut rows = Vec::new();
    for k in 0..first.records.len() {
        for d in diagrams {
            rows.push(ScanRow::new(k % ng, k / ng, &d.records[k], g_s));
        }
    }
    let boundaries: Vec<BoundaryRow> = diagrams
        .iter()
        .flat_map(|d| {
            d.boundaries.iter().map(|b| BoundaryRow {
                j_e: d.level,
                ig_a: b.a.0,
                il_a: b.a.1,
                ig_b: b.b.0,
                il_b: b.b.1,
                changes: b.changes.iter().map(|q| q.name()).collect::<Vec<_>>().join(";"),
                min_gap: b.min_gap,
                gap_closes: b.gap_closes,
            })
        })
        .collect();
    match target.format {
        Format::Csv => {
            write_csv(target.open()?, SCHEMA, params, &[], &rows)?;
            if let Some(path) = target.sidecar("boundaries") {
                let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                write_csv(f, BOUNDARY_SCHEMA, params, &[], &boundaries)?;
            }
            Ok(())
        }
        Format::Json => write_json(
            target.open()?,
            SCHEMA,
            params,
            json!({ "records": rows, "boundaries": boundaries }),
            vec![],
        ),
    }
}
