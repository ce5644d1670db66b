//! Run traces and their CSV / JSON encodings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::mdp::PolicyParams;

/// One recorded iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// `V^{π_θ}(μ)` at the `θ` iterate.
    pub objective: f64,
    /// `V^{π_ω}(μ)` at the kept iterate; SPG-NM only.
    pub omega_objective: Option<f64>,
    /// Per-state values of the output iterate (`ω` for SPG-NM, `θ` otherwise).
    pub state_values: Vec<f64>,
    /// `V*(μ)` minus the reported objective.
    pub gap: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl TraceRecord {
    /// The objective of the iterate the method outputs.
    pub fn reported_objective(&self) -> f64 {
        self.omega_objective.unwrap_or(self.objective)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// Fully resolved configuration.
    pub config: ExperimentConfig,
    pub records: Vec<TraceRecord>,
    /// Output iterate after the last completed step.
    pub final_params: PolicyParams,
    /// `V*(μ)`, when the gap was computed.
    pub optimal_objective: Option<f64>,
    /// Set when a numerical failure cut the run short.
    pub failed: Option<String>,
}

impl RunTrace {
    pub fn is_failed(&self) -> bool {
        self.failed.is_some()
    }

    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// First recorded iteration whose reported objective reaches `target`.
    pub fn first_reaching(&self, target: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.reported_objective() >= target)
            .map(|r| r.t)
    }

    pub fn n_states(&self) -> usize {
        self.final_params.shape().0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Json => "json",
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "json" => Ok(TraceFormat::Json),
            _ => Err(Error::Unknown {
                kind: "trace format",
                name: s.to_string(),
                valid: "csv, json".into(),
            }),
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub fn csv_header(n_states: usize) -> String {
    let mut h = String::from("t,objective,omega_objective");
    for s in 0..n_states {
        write!(h, ",V_s{s}").unwrap();
    }
    h.push_str(",gap,wall_ms");
    h
}

pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = csv_header(trace.n_states());
    out.push('\n');
    for r in &trace.records {
        write!(out, "{},{},{}", r.t, format_number(r.objective), optional(r.omega_objective)).unwrap();
        for v in &r.state_values {
            write!(out, ",{}", format_number(*v)).unwrap();
        }
        writeln!(out, ",{},{}", optional(r.gap), optional(r.wall_ms)).unwrap();
    }
    out
}

pub fn trace_to_json(trace: &RunTrace) -> Result<String> {
    let mut s = serde_json::to_string_pretty(trace)?;
    s.push('\n');
    Ok(s)
}

pub fn trace_from_json(text: &str) -> Result<RunTrace> {
    Ok(serde_json::from_str(text)?)
}

pub fn encode_trace(trace: &RunTrace, format: TraceFormat) -> Result<String> {
    match format {
        TraceFormat::Csv => Ok(trace_to_csv(trace)),
        TraceFormat::Json => trace_to_json(trace),
    }
}

/// Writes `bytes` to a sibling temp file, then renames it over `dest`.
pub fn write_atomically(dest: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = dest
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", dest.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dest.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dest).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn serialize_trace(trace: &RunTrace, format: TraceFormat, dest: &Path) -> Result<()> {
    write_atomically(dest, encode_trace(trace, format)?.as_bytes())
}
