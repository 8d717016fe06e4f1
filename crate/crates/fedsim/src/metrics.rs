//! Metrics records and their CSV / JSONL serialization.

use std::io::Write;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "run_id,algorithm,seed,effective_stepsize,round,grad_norm,objective,clients_contacted_cum,grad_evals_per_client_cum";

/// One emitted row: a (run, round) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub algorithm: String,
    pub seed: u64,
    pub effective_stepsize: f64,
    pub round: u64,
    pub grad_norm: f64,
    pub objective: f64,
    pub clients_contacted_cum: u64,
    pub grad_evals_per_client_cum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

/// 17 significant digits, enough to reproduce any f64 exactly.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write records in the requested format. Records are emitted in the given
/// order; callers sort by (run_id, round) beforehand.
pub fn emit_metrics<W: Write>(
    records: &[MetricsRecord],
    format: OutputFormat,
    mut out: W,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in records {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.run_id,
                    r.algorithm,
                    r.seed,
                    real(r.effective_stepsize),
                    r.round,
                    real(r.grad_norm),
                    real(r.objective),
                    r.clients_contacted_cum,
                    real(r.grad_evals_per_client_cum),
                )?;
            }
        }
        OutputFormat::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

/// Read records back from either format (detected per line for JSONL, by the
/// header for CSV).
pub fn read_metrics(text: &str) -> Result<Vec<MetricsRecord>, String> {
    let mut out = Vec::new();
    let mut lines = text.lines().peekable();
    let Some(first) = lines.peek() else {
        return Ok(out);
    };
    if first.starts_with('{') {
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: MetricsRecord =
                serde_json::from_str(line).map_err(|e| format!("jsonl line {}: {e}", i + 1))?;
            out.push(rec);
        }
        return Ok(out);
    }
    if first.trim() != CSV_HEADER {
        return Err(format!("unexpected CSV header: {first}"));
    }
    lines.next();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(format!("csv line {}: expected 9 columns", i + 2));
        }
        let f = |s: &str| -> Result<f64, String> {
            s.parse().map_err(|e| format!("csv line {}: {e}", i + 2))
        };
        let u = |s: &str| -> Result<u64, String> {
            s.parse().map_err(|e| format!("csv line {}: {e}", i + 2))
        };
        out.push(MetricsRecord {
            run_id: cols[0].to_string(),
            algorithm: cols[1].to_string(),
            seed: u(cols[2])?,
            effective_stepsize: f(cols[3])?,
            round: u(cols[4])?,
            grad_norm: f(cols[5])?,
            objective: f(cols[6])?,
            clients_contacted_cum: u(cols[7])?,
            grad_evals_per_client_cum: f(cols[8])?,
        });
    }
    Ok(out)
}
