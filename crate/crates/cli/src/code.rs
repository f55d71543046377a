use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use rabi_topo::analyze_point;
use rabi_topo::topology::{normalize_code, winding_from_code};

use crate::output::{write_csv, write_json, Format};
use crate::{check_level, CliError, ModelArgs, OutputArgs};

pub const SCHEMA: &str = "rabi-topo/code/v1";

#[derive(Debug, Clone, Args)]
pub struct CodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long = "j-e", default_value_t = 1)]
    pub j_e: usize,
    /// Decode this code string instead of computing one; spaces are ignored.
    #[arg(long)]
    pub parse: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeRow {
    pub code: String,
    /// Counters read back from the digits alone.
    pub n_z: usize,
    pub n_w: f64,
    pub n_ex: usize,
    pub n_dk: usize,
    /// Integral winding of the computed state; empty for decoded strings.
    pub n_w_integral: Option<i64>,
    pub j_e: Option<usize>,
    pub energy: Option<f64>,
}

pub fn run(a: &CodeArgs) -> Result<(), CliError> {
    let (row, params) = match &a.parse {
        Some(text) => {
            let c = winding_from_code(text).map_err(|e| CliError::Validation(e.to_string()))?;
            let row = CodeRow {
                code: normalize_code(text),
                n_z: c.n_z,
                n_w: c.n_w,
                n_ex: c.n_ex,
                n_dk: c.n_dk,
                n_w_integral: None,
                j_e: None,
                energy: None,
            };
            (row, json!({ "parse": text }))
        }
        None => {
            let p = a.model.validate()?;
            check_level(a.j_e, &p)?;
            let s = analyze_point(&p.model(), a.j_e, &p.pipeline())?.summary;
            let c = winding_from_code(&s.code).map_err(|e| CliError::Numerical(e.to_string()))?;
            let row = CodeRow {
                code: s.code.clone(),
                n_z: c.n_z,
                n_w: c.n_w,
                n_ex: c.n_ex,
                n_dk: c.n_dk,
                n_w_integral: Some(s.n_w),
                j_e: Some(a.j_e),
                energy: Some(s.energy),
            };
            (row, p.to_json(json!({ "j_e": a.j_e })))
        }
    };
    let target = a.output.target();
    match target.format {
        Format::Csv => write_csv(target.open()?, SCHEMA, &params, &[], &[row]),
        Format::Json => write_json(target.open()?, SCHEMA, &params, json!(row), vec![]),
    }
}
