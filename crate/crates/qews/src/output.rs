//! File formats: density-matrix and Wigner JSON containers, CSV tables.
//!
//! Every float is written with 17 significant digits so files round-trip
//! bit-exactly and two runs with the same inputs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qews_core::phase_space::WignerGridSpec;
use qews_core::{DensityMatrix, WignerGrid, C64};
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `x` with 17 significant digits; non-finite values become `NaN`/`inf`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        fmt17(x)
    } else {
        "null".into()
    }
}

/// Provenance block embedded in every JSON output.
pub fn metadata(params: &Value, seed: u64, kind: &str) -> Value {
    serde_json::json!({
        "kind": kind,
        "params": params,
        "seed": seed,
        "tool_version": TOOL_VERSION,
    })
}

fn pretty(v: &Value, indent: &str) -> String {
    let s = serde_json::to_string_pretty(v).expect("serializable");
    s.replace('\n', &format!("\n{indent}"))
}

pub fn density_json(rho: &DensityMatrix, meta: &Value) -> String {
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"schema_version\": {SCHEMA_VERSION},");
    let _ = writeln!(s, "  \"cutoff\": {},", rho.cutoff());
    s.push_str("  \"entries\": [\n");
    let n = rho.entries().len();
    for (i, c) in rho.entries().iter().enumerate() {
        let sep = if i + 1 == n { "" } else { "," };
        let _ = writeln!(s, "    [{}, {}]{sep}", json_num(c.re), json_num(c.im));
    }
    s.push_str("  ],\n");
    let _ = writeln!(s, "  \"metadata\": {}", pretty(meta, "  "));
    s.push_str("}\n");
    s
}

#[derive(Debug, Deserialize)]
struct StateFile {
    schema_version: u32,
    cutoff: usize,
    entries: Vec<[f64; 2]>,
    #[allow(dead_code)]
    metadata: Value,
}

pub fn read_density(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let fmt_err = |msg: String| CliError::Format {
        path: path.display().to_string(),
        msg,
    };
    let f: StateFile = serde_json::from_str(&text).map_err(|e| fmt_err(e.to_string()))?;
    if f.schema_version != SCHEMA_VERSION {
        return Err(fmt_err(format!("unsupported schema_version {}", f.schema_version)));
    }
    let entries = f.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    DensityMatrix::from_entries(f.cutoff, entries).map_err(|e| fmt_err(e.to_string()))
}

pub fn wigner_json(grid: &WignerGrid, meta: &Value) -> String {
    let g: &WignerGridSpec = &grid.spec;
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"schema_version\": {SCHEMA_VERSION},");
    let _ = writeln!(
        s,
        "  \"grid\": {{\"q_min\": {}, \"q_max\": {}, \"p_min\": {}, \"p_max\": {}, \"nq\": {}, \"np\": {}}},",
        json_num(g.q_min),
        json_num(g.q_max),
        json_num(g.p_min),
        json_num(g.p_max),
        g.nq,
        g.np
    );
    let warnings: Vec<String> = grid.warnings.iter().map(|w| format!("{w:?}")).collect();
    let _ = writeln!(s, "  \"warnings\": {},", serde_json::to_string(&warnings).expect("strings"));
    s.push_str("  \"values\": [\n");
    for i in 0..g.nq {
        let row: Vec<String> = (0..g.np).map(|j| json_num(grid.get(i, j))).collect();
        let sep = if i + 1 == g.nq { "" } else { "," };
        let _ = writeln!(s, "    [{}]{sep}", row.join(", "));
    }
    s.push_str("  ],\n");
    let _ = writeln!(s, "  \"metadata\": {}", pretty(meta, "  "));
    s.push_str("}\n");
    s
}

/// CSV table with a header row; floats at 17 significant digits.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x as usize)
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(
            row.into_iter()
                .map(|c| match c {
                    Cell::F(x) => fmt17(x),
                    Cell::I(x) => x.to_string(),
                    Cell::U(x) => x.to_string(),
                })
                .collect(),
        );
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |e: csv::Error| CliError::Format {
            path: "<csv>".into(),
            msg: e.to_string(),
        };
        w.write_record(&self.header).map_err(wrap)?;
        for r in &self.rows {
            w.write_record(r).map_err(wrap)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Format {
            path: "<csv>".into(),
            msg: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("ASCII output"))
    }
}

pub fn wigner_table(grid: &WignerGrid) -> Table {
    let mut t = Table::new(&["q", "p", "w"]);
    for i in 0..grid.spec.nq {
        for j in 0..grid.spec.np {
            t.push(vec![
                grid.spec.q(i).into(),
                grid.spec.p(j).into(),
                grid.get(i, j).into(),
            ]);
        }
    }
    t
}

/// Output directory; files are written whole.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let p = self.root.join(name);
        fs::write(&p, content).map_err(|e| CliError::io(&p, e))?;
        self.written.push(p);
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, t: &Table) -> Result<(), CliError> {
        let csv = t.to_csv()?;
        self.write(name, &csv)
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).expect("serializable");
        s.push('\n');
        self.write(name, &s)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0, -0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn density_round_trip() {
        let rho = qews_core::fock::coherent_density(C64::new(0.3, -0.7), 6).unwrap();
        let text = density_json(&rho, &metadata(&serde_json::json!({"a": 1}), 9, "density_matrix"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        fs::write(&p, &text).unwrap();
        let back = read_density(&p).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["n", "p"]);
        t.push(vec![3usize.into(), 0.25.into()]);
        assert_eq!(t.to_csv().unwrap(), "n,p\n3,2.5000000000000000e-1\n");
    }
}
