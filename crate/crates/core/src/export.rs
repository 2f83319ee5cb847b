//! CSV output with a `#`-prefixed provenance manifest.
//!
//! Every file starts with `# key: value` lines (tool version, config hash,
//! equation variant, units, and the resolved configuration), followed by a
//! plain CSV table. Colormaps are written as a matrix whose first row holds
//! the x axis and whose first column holds the y axis.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
    /// Resolved configuration, echoed as `# config <line>`.
    pub config: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool", format!("injlock {TOOL_VERSION}"));
        m.push("command", command);
        m
    }

    pub fn for_config(command: &str, config: &RunConfig) -> Self {
        let mut m = Self::new(command);
        m.push("config_hash", config.hash());
        m.push("variant", config.model.variant.as_str());
        m.config = config.canonical().lines().map(str::to_string).collect();
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        for line in &self.config {
            writeln!(w, "# config {line}")?;
        }
        Ok(())
    }
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // shortest representation that round-trips
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    Error::Io { path: path.to_path_buf(), source }
}

/// Writes a manifest followed by a CSV table. `header` names the columns
/// and should carry units, e.g. `omega_rs_rad_s`.
pub fn write_table(path: &Path, manifest: &Manifest, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
        return Err(Error::invalid("table", format!("row {i} has {} cells, header has {}", r.len(), header.len())));
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    manifest.write_to(&mut w).map_err(io_err(path))?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        csv.write_record(row.iter().map(Cell::render)).map_err(|e| csv_err(path, e))?;
    }
    csv.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes `values[iy][ix]` with the x axis in the first row and the y axis
/// in the first column; `corner` labels the top-left cell.
pub fn write_matrix(
    path: &Path,
    manifest: &Manifest,
    corner: &str,
    x_axis: &[f64],
    y_axis: &[f64],
    values: &[Vec<f64>],
) -> Result<()> {
    if values.len() != y_axis.len() || values.iter().any(|r| r.len() != x_axis.len()) {
        return Err(Error::invalid("matrix", "shape must be y_axis.len() x x_axis.len()"));
    }
    let mut header = vec![corner.to_string()];
    header.extend(x_axis.iter().map(|x| format!("{x:?}")));
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    manifest.write_to(&mut w).map_err(io_err(path))?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (y, row) in y_axis.iter().zip(values) {
        let mut rec = vec![format!("{y:?}")];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        csv.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    csv.flush().map_err(io_err(path))?;
    Ok(())
}

/// Creates `dir` if needed and returns `dir/name`.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir.join(name))
}
