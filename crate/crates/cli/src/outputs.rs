//! Output writers. Every report file carries the tool version and the
//! full parameter set; no timestamps, so reruns are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

pub const TOOL: &str = "echograph";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header block shared by all report files.
#[derive(Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub stage: String,
    /// Full parameter set of the run, echoed verbatim.
    pub params: serde_json::Value,
}

impl Meta {
    pub fn new(stage: &str, params: &impl Serialize) -> anyhow::Result<Self> {
        Ok(Meta {
            tool: TOOL,
            version: VERSION,
            stage: stage.to_string(),
            params: serde_json::to_value(params)?,
        })
    }
}

/// JSON report: `{"meta": ..., "data": ...}`.
pub fn write_json(path: &Path, meta: &Meta, data: &impl Serialize) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Wrapper<'a, T: Serialize> {
        meta: &'a Meta,
        data: &'a T,
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &Wrapper { meta, data })?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// CSV report with `#` comment headers carrying the meta block.
pub struct CsvReport {
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvReport {
    pub fn create(path: &Path, meta: &Meta, columns: &[&str]) -> anyhow::Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut raw = BufWriter::new(file);
        writeln!(raw, "# tool={} version={} stage={}", meta.tool, meta.version, meta.stage)?;
        writeln!(raw, "# params={}", serde_json::to_string(&meta.params)?)?;
        let mut writer = csv::Writer::from_writer(raw);
        writer.write_record(columns)?;
        Ok(CsvReport { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Compact float formatting for CSV cells: full round-trip precision
/// without trailing noise.
pub fn fmt_f64(value: f64) -> String {
    let mut s = format!("{value}");
    if s.ends_with(".0") {
        s.truncate(s.len() - 2);
    }
    s
}

pub fn fmt_opt_f64(value: Option<f64>) -> String {
    value.map(fmt_f64).unwrap_or_default()
}
