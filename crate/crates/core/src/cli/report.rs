use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use crate::error::Result;
use crate::montecarlo::{fmt_num, CellEstimate, EstimateTable};

/// Bumped whenever a field of the JSON report or a CSV column changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Toolkit {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Toolkit {
    fn default() -> Self {
        Toolkit {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Status {
    /// Some design produced an empty feasible set.
    pub infeasible: bool,
    /// Some reported estimate is flagged (heavy censoring or too few
    /// retained paths).
    pub unreliable: bool,
}

/// Output of one subcommand: `report.json` plus named CSV tables.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub toolkit: Toolkit,
    pub command: &'static str,
    pub config: RunConfig,
    pub status: Status,
    pub results: serde_json::Value,
    #[serde(skip)]
    pub tables: Vec<CsvTable>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub file: String,
    pub contents: String,
}

impl Report {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            toolkit: Toolkit::default(),
            command,
            config: config.echo(),
            status: Status::default(),
            results: serde_json::Value::Null,
            tables: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json`, `config.toml` and every table into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        std::fs::write(dir.join("config.toml"), self.config.to_toml_string()?)?;
        for t in &self.tables {
            std::fs::write(dir.join(&t.file), &t.contents)?;
        }
        Ok(())
    }
}

/// Accumulates CSV rows with a fixed header.
pub struct CsvBuilder {
    file: String,
    buf: String,
}

impl CsvBuilder {
    pub fn new(file: impl Into<String>, header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        CsvBuilder { file: file.into(), buf }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            self.buf.push_str(f.as_ref());
            first = false;
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> CsvTable {
        CsvTable {
            file: self.file,
            contents: self.buf,
        }
    }
}

pub fn num(x: f64) -> String {
    fmt_num(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// `estimate,se,censored,n` fields of one cell.
pub fn cell_fields(c: &CellEstimate) -> [String; 4] {
    [num(c.estimate), num(c.se), c.censored.to_string(), c.n.to_string()]
}

pub const ESTIMATE_HEADER: [&str; 8] = ["variant", "b", "h", "metric", "estimate", "se", "censored", "n"];

/// Appends every cell of `table` as `variant,b,h,metric,estimate,se,censored,n`.
pub fn push_table(csv: &mut CsvBuilder, variant: &str, table: &EstimateTable) {
    let label = table.metric.label();
    for row in 0..table.rows() {
        let h = table.h.get(row).map(|h| num(*h)).unwrap_or_default();
        for (col, b) in table.b.iter().enumerate() {
            let c = table.get(col, row);
            let [e, se, cens, n] = cell_fields(c);
            csv.row([variant, &num(*b), &h, &label, &e, &se, &cens, &n]);
        }
    }
}

/// File-name-safe rendering of a ratio such as `r = 1.3`.
pub fn r_tag(r: f64) -> String {
    num(r).replace('.', "p")
}
