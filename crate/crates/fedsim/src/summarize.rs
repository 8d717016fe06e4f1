//! Cross-run comparison: median rounds-to-threshold per (algorithm, step
//! size) cell and an ordering verdict per step size.

use std::collections::BTreeMap;

use fedsim_core::algorithms::DIVERGENCE_LIMIT;

use crate::metrics::MetricsRecord;

pub const DEFAULT_THRESHOLDS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Per-seed trace outcome within one cell.
#[derive(Debug, Clone)]
struct SeedTrace {
    rounds_to: Vec<Option<u64>>,
    final_grad_norm: f64,
    diverged_at: Option<u64>,
}

/// One (algorithm, effective step size) cell of the comparison table.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub algorithm: String,
    pub effective_stepsize: f64,
    pub seeds: usize,
    /// Median (over seeds) of the first round reaching each threshold; `None`
    /// when the median run never does.
    pub median_rounds_to: Vec<Option<u64>>,
    pub median_final_grad_norm: f64,
    pub diverged_seeds: usize,
    pub first_divergence: Option<u64>,
}

fn median_u64(mut vals: Vec<u64>) -> u64 {
    vals.sort_unstable();
    vals[vals.len() / 2]
}

fn median_f64(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(f64::total_cmp);
    vals[vals.len() / 2]
}

/// Group records into cells and reduce seeds to medians.
pub fn summarize(records: &[MetricsRecord], thresholds: &[f64]) -> Vec<CellSummary> {
    // (algorithm, eta) -> run_id -> trace
    let mut by_run: BTreeMap<(String, String), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        by_run
            .entry((r.algorithm.clone(), format!("{}", r.effective_stepsize)))
            .or_default()
            .push(r);
    }

    let mut cells: BTreeMap<(String, String), Vec<SeedTrace>> = BTreeMap::new();
    for ((alg, eta), mut rows) in by_run {
        rows.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.round.cmp(&b.round)));
        for seed_rows in rows.chunk_by(|a, b| a.seed == b.seed) {
            let rounds_to = thresholds
                .iter()
                .map(|&t| seed_rows.iter().find(|r| r.grad_norm <= t).map(|r| r.round))
                .collect();
            let last = seed_rows.last().expect("non-empty seed trace");
            let bad = !last.grad_norm.is_finite()
                || last.grad_norm > DIVERGENCE_LIMIT
                || !last.objective.is_finite()
                || last.objective > DIVERGENCE_LIMIT;
            cells
                .entry((alg.clone(), eta.clone()))
                .or_default()
                .push(SeedTrace {
                    rounds_to,
                    final_grad_norm: last.grad_norm,
                    diverged_at: bad.then_some(last.round),
                });
        }
    }

    cells
        .into_iter()
        .map(|((algorithm, eta), traces)| {
            let median_rounds_to = (0..thresholds.len())
                .map(|k| {
                    // A run that never reaches the threshold counts as infinity.
                    let vals: Vec<u64> = traces
                        .iter()
                        .map(|t| t.rounds_to[k].unwrap_or(u64::MAX))
                        .collect();
                    match median_u64(vals) {
                        u64::MAX => None,
                        v => Some(v),
                    }
                })
                .collect();
            CellSummary {
                algorithm,
                effective_stepsize: eta.parse().unwrap_or(f64::NAN),
                seeds: traces.len(),
                median_rounds_to,
                median_final_grad_norm: median_f64(
                    traces.iter().map(|t| t.final_grad_norm).collect(),
                ),
                diverged_seeds: traces.iter().filter(|t| t.diverged_at.is_some()).count(),
                first_divergence: traces.iter().filter_map(|t| t.diverged_at).min(),
            }
        })
        .collect()
}

fn family(label: &str) -> Option<&'static str> {
    let l = label.to_ascii_lowercase();
    if l.contains("fedpage") {
        Some("fedpage")
    } else if l.contains("scaffold") {
        Some("scaffold")
    } else if l.contains("fedavg") {
        Some("fedavg")
    } else {
        None
    }
}

/// Render the table plus one ordering verdict line per effective step size.
pub fn render(cells: &[CellSummary], thresholds: &[f64], verdict_threshold: f64) -> String {
    let mut out = String::new();
    out.push_str("algorithm            eta        seeds  ");
    for t in thresholds {
        out.push_str(&format!("r@{t:<9.0e}"));
    }
    out.push_str("final_grad_norm\n");
    for c in cells {
        let cell_text = if c.diverged_seeds == c.seeds {
            format!(
                "diverged@{}",
                c.first_divergence.expect("diverged cell has a round")
            )
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{:<20} {:<10} {:<6} ",
            c.algorithm, c.effective_stepsize, c.seeds
        ));
        for k in 0..thresholds.len() {
            let s = if !cell_text.is_empty() {
                cell_text.clone()
            } else {
                match c.median_rounds_to[k] {
                    Some(r) => r.to_string(),
                    None => "-".into(),
                }
            };
            out.push_str(&format!("{s:<11}"));
        }
        out.push_str(&format!("{:.3e}", c.median_final_grad_norm));
        if c.diverged_seeds > 0 && c.diverged_seeds < c.seeds {
            out.push_str(&format!(
                "  ({} of {} seeds diverged)",
                c.diverged_seeds, c.seeds
            ));
        }
        out.push('\n');
    }

    // Verdicts per eta at the requested threshold.
    let k = thresholds
        .iter()
        .position(|&t| t == verdict_threshold)
        .unwrap_or(0);
    let mut etas: Vec<String> = cells
        .iter()
        .map(|c| format!("{}", c.effective_stepsize))
        .collect();
    etas.sort();
    etas.dedup();
    for eta in etas {
        let pick = |fam: &str| -> Option<Option<u64>> {
            cells
                .iter()
                .filter(|c| format!("{}", c.effective_stepsize) == eta)
                .filter(|c| family(&c.algorithm) == Some(fam))
                .map(|c| c.median_rounds_to[k])
                .min_by_key(|r| r.unwrap_or(u64::MAX))
        };
        let (Some(fp), Some(sc), Some(fa)) = (pick("fedpage"), pick("scaffold"), pick("fedavg"))
        else {
            out.push_str(&format!(
                "eta {eta}: verdict needs fedpage, scaffold and fedavg cells\n"
            ));
            continue;
        };
        let val = |r: Option<u64>| r.unwrap_or(u64::MAX);
        let show = |r: Option<u64>| match r {
            Some(v) => v.to_string(),
            None => "not-reached".into(),
        };
        let holds = val(fp) <= val(sc) && val(sc) < val(fa);
        out.push_str(&format!(
            "eta {eta}: rounds to grad_norm<={verdict_threshold:.0e}: fedpage {} vs scaffold {} vs fedavg {} -> fedpage<=scaffold<fedavg {}\n",
            show(fp),
            show(sc),
            show(fa),
            if holds { "HOLDS" } else { "VIOLATED" },
        ));
    }
    out
}
