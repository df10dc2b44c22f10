//! Line-delimited trace files: one JSON object per tick.

use super::nav::TraceRecord;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

pub const TRACE_SCHEMA: u32 = 1;

/// A trace line is a [`TraceRecord`] plus the path length travelled so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub schema: u32,
    #[serde(flatten)]
    pub record: TraceRecord,
    pub length: f64,
}

pub fn write_trace(records: &[TraceRecord], mut out: impl Write) -> std::io::Result<()> {
    let mut length = 0.0;
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            length += records[i - 1].pose.position.dist(r.pose.position);
        }
        let line = TraceLine {
            schema: TRACE_SCHEMA,
            record: r.clone(),
            length,
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(input: impl BufRead) -> Result<Vec<TraceRecord>, String> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", n + 1))?;
        if parsed.schema != TRACE_SCHEMA {
            return Err(format!("line {}: unsupported trace schema {}", n + 1, parsed.schema));
        }
        out.push(parsed.record);
    }
    if out.is_empty() {
        return Err("trace is empty".into());
    }
    Ok(out)
}
