//! CSV and JSON writers with schema metadata, and the matching readers.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Where a command's main table goes. `None` is stdout.
pub struct Target {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Target {
    pub fn open(&self) -> Result<Box<dyn Write>, CliError> {
        self.open_path(self.path.as_deref())
    }

    fn open_path(&self, path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
        match path {
            Some(p) => {
                let f = File::create(p).map_err(|e| CliError::io(p, e))?;
                Ok(Box::new(BufWriter::new(f)))
            }
            None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        }
    }

    /// Sibling file `<stem>.<suffix>.csv`, only when writing to a file.
    pub fn sidecar(&self, suffix: &str) -> Option<PathBuf> {
        self.path.as_ref().map(|p| sidecar_path(p, suffix))
    }
}

pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name
        .strip_suffix(".csv")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(&name)
        .to_string();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Writes `# schema:` and `# params:` lines, extra `# key: value` lines,
/// then a header row and the rows.
pub fn write_csv<R: Serialize>(
    mut w: impl Write,
    schema: &str,
    params: &Value,
    meta: &[(&str, String)],
    rows: &[R],
) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io(e.to_string());
    writeln!(w, "# schema: {schema}").map_err(io_err)?;
    writeln!(w, "# params: {params}").map_err(io_err)?;
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}").map_err(io_err)?;
    }
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    csv.flush().map_err(io_err)
}

pub fn write_json(mut w: impl Write, schema: &str, params: &Value, data: Value, extra: Vec<(&str, Value)>) -> Result<(), CliError> {
    let mut doc = json!({ "schema": schema, "params": params, "data": data });
    for (k, v) in extra {
        doc[k] = v;
    }
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w).map_err(|e| CliError::Io(e.to_string()))
}

/// Metadata lines and rows of a CSV file written by [`write_csv`].
pub struct CsvFile<R> {
    pub schema: String,
    pub params: Value,
    pub rows: Vec<R>,
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<CsvFile<R>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut schema = None;
    let mut params = None;
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let Some(meta) = line.strip_prefix("# ") else { break };
        if let Some(s) = meta.strip_prefix("schema: ") {
            schema = Some(s.to_string());
        } else if let Some(p) = meta.strip_prefix("params: ") {
            params = Some(serde_json::from_str(p).map_err(|e| CliError::Validation(format!("{}: bad params line: {e}", path.display())))?);
        }
    }
    let (Some(schema), Some(params)) = (schema, params) else {
        return Err(CliError::Validation(format!("{} has no schema/params header", path.display())));
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(CsvFile { schema, params, rows })
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
