//! JSON-lines epoch logs and the summary CSV.

use std::io::{BufRead, Write};

use serde::Serialize;

use super::EpochRecord;
use crate::error::Result;

/// One JSONL line for `record`, without trailing newline. The wall time is
/// left out unless `include_wall_time` is set, so logs from identical seeds
/// are byte-identical.
pub fn record_line(record: &EpochRecord, include_wall_time: bool) -> Result<String> {
    let mut value = serde_json::to_value(record)?;
    if !include_wall_time {
        if let Some(obj) = value.as_object_mut() {
            obj.remove("wall_time");
        }
    }
    Ok(serde_json::to_string(&value)?)
}

/// Writes and flushes one record per line.
pub struct JsonlWriter<W: Write> {
    out: W,
    include_wall_time: bool,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W, include_wall_time: bool) -> Self {
        Self { out, include_wall_time }
    }

    pub fn write(&mut self, record: &EpochRecord) -> Result<()> {
        writeln!(self.out, "{}", record_line(record, self.include_wall_time)?)?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Reads records back; a missing `wall_time` reads as 0.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<EpochRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut value: serde_json::Value = serde_json::from_str(&line)?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("wall_time").or_insert(serde_json::json!(0.0));
        }
        records.push(serde_json::from_value(value)?);
    }
    Ok(records)
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub batch_size: Option<usize>,
    pub iterations: u64,
    pub wall_time_s: f64,
    pub final_val_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub best_val_test_accuracy: Option<f64>,
    pub error: Option<String>,
}

const SUMMARY_HEADER: &str =
    "algorithm,batch_size,iterations,wall_time_s,final_val_loss,test_accuracy,best_val_test_accuracy,error";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{},{},{},{}",
            csv_text(&r.algorithm),
            opt(&r.batch_size),
            r.iterations,
            r.wall_time_s,
            opt(&r.final_val_loss),
            opt(&r.test_accuracy),
            opt(&r.best_val_test_accuracy),
            csv_text(r.error.as_deref().unwrap_or("")),
        )?;
    }
    Ok(())
}
