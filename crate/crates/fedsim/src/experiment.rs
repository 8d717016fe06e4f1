//! Grid orchestration: dataset loading, per-cell parameter derivation,
//! parallel execution over (algorithm, effective step size, seed) cells and
//! ordered metrics collection.

use std::fs;
use std::path::Path;

use fedsim_core::algorithms::{
    fedavg_run, fedpage_run, scaffold_run, BaselineConfig, FedPageConfig, RoundMetrics, RunFailure,
};
use fedsim_core::dataset::{
    parse_libsvm_path, partition_clients_with, ClientPartition, SparseDataset,
};
use fedsim_core::objective::smoothness_estimate;
use fedsim_core::theory::nonconvex_local_stepsize;
use fedsim_core::{ExecMode, ModelVector, ObjectiveSpec};

use crate::config::{AlgorithmEntry, ExperimentConfig};
use crate::metrics::{emit_metrics, MetricsRecord};

/// One grid cell: a single run.
#[derive(Debug, Clone)]
struct Cell {
    run_id: String,
    label: String,
    entry: AlgorithmEntry,
    eta: f64,
    seed: u64,
}

#[derive(Debug, Clone)]
enum ResolvedConfig {
    FedPage(FedPageConfig),
    Scaffold(BaselineConfig),
    FedAvg(BaselineConfig),
}

/// How the grid finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridOutcome {
    Complete,
    /// Some cells diverged; their partial traces were recorded.
    PartialDivergence,
    /// Every cell diverged.
    TotalDivergence,
}

pub struct LoadedProblem {
    pub dataset: SparseDataset,
    pub partition: ClientPartition,
    pub spec: ObjectiveSpec,
    pub smoothness: f64,
}

pub fn load_problem(cfg: &ExperimentConfig) -> Result<LoadedProblem, String> {
    let spec = cfg.parsed_objective()?;
    let dataset = parse_libsvm_path(&cfg.dataset, cfg.dim)
        .map_err(|e| format!("dataset {}: {e}", cfg.dataset.display()))?;
    let partition = partition_clients_with(
        &dataset,
        cfg.samples_per_client,
        cfg.num_clients,
        cfg.shuffle_partition,
    )
    .map_err(|e| e.to_string())?;
    let smoothness = smoothness_estimate(spec, &dataset);
    Ok(LoadedProblem {
        dataset,
        partition,
        spec,
        smoothness,
    })
}

fn resolve_cell(
    cfg: &ExperimentConfig,
    problem: &LoadedProblem,
    cell: &Cell,
    exec: ExecMode,
) -> ResolvedConfig {
    let m = problem.partition.samples_per_client();
    let n = problem.partition.num_clients();
    let e = &cell.entry;
    match e.kind.as_str() {
        "fedpage" => {
            let s = e.sampled_clients;
            let p = e.p.unwrap_or(s as f64 / n as f64);
            let eta_l = e.eta_l.unwrap_or_else(|| {
                nonconvex_local_stepsize(p, s as u64, e.local_steps, problem.smoothness)
            });
            let mut c = FedPageConfig {
                eta_g: cell.eta,
                eta_l,
                local_steps: e.local_steps,
                sampled_clients: s,
                p,
                b1: e.b1.unwrap_or(m),
                b2: e.b2.unwrap_or(m),
                b3: e.b3.unwrap_or(1),
                rounds: cfg.rounds,
                seed: cell.seed,
                metrics_every: cfg.metrics_every,
                exec,
            };
            if e.full {
                c = c.full_variant(m);
            }
            ResolvedConfig::FedPage(c)
        }
        kind => {
            let eta_g = e.eta_g.unwrap_or(1.0);
            let mut c = BaselineConfig {
                eta_g,
                eta_l: cell.eta / (e.local_steps as f64 * eta_g),
                local_steps: e.local_steps,
                sampled_clients: e.sampled_clients,
                batch: e.batch.unwrap_or(m),
                rounds: cfg.rounds,
                seed: cell.seed,
                metrics_every: cfg.metrics_every,
                exec,
            };
            if e.full {
                c = c.full_variant(m);
            }
            if kind == "scaffold" {
                ResolvedConfig::Scaffold(c)
            } else {
                ResolvedConfig::FedAvg(c)
            }
        }
    }
}

fn execute_cell(
    problem: &LoadedProblem,
    resolved: &ResolvedConfig,
) -> Result<Vec<RoundMetrics>, RunFailure> {
    let x0 = ModelVector::zeros(problem.dataset.dim());
    let (ds, part, spec) = (&problem.dataset, &problem.partition, problem.spec);
    match resolved {
        ResolvedConfig::FedPage(c) => fedpage_run(c.clone(), spec, ds, part, x0),
        ResolvedConfig::Scaffold(c) => scaffold_run(c.clone(), spec, ds, part, x0),
        ResolvedConfig::FedAvg(c) => fedavg_run(c.clone(), spec, ds, part, x0),
    }
}

fn to_records(cell: &Cell, rounds: &[RoundMetrics]) -> Vec<MetricsRecord> {
    rounds
        .iter()
        .map(|m| MetricsRecord {
            run_id: cell.run_id.clone(),
            algorithm: cell.label.clone(),
            seed: cell.seed,
            effective_stepsize: cell.eta,
            round: m.round,
            grad_norm: m.grad_norm,
            objective: m.objective,
            clients_contacted_cum: m.cum_clients_contacted,
            grad_evals_per_client_cum: m.cum_grad_evals_per_client,
        })
        .collect()
}

/// Run the whole grid and write one ordered metrics file.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    exec: ExecMode,
    parallel_cells: bool,
) -> Result<GridOutcome, String> {
    cfg.validate()?;
    let format = cfg.parsed_format()?;
    let problem = load_problem(cfg)?;

    let mut cells = Vec::new();
    for entry in &cfg.algorithms {
        let label = entry.display_label();
        for &eta in &cfg.effective_stepsizes {
            for &seed in &cfg.seeds {
                cells.push(Cell {
                    run_id: format!("{label}-{eta}-{seed}"),
                    label: label.clone(),
                    entry: entry.clone(),
                    eta,
                    seed,
                });
            }
        }
    }
    {
        let mut ids: Vec<&str> = cells.iter().map(|c| c.run_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != cells.len() {
            return Err("duplicate run ids; give distinct labels to repeated kinds".into());
        }
    }

    // Resolve and sanity-check every cell before any work starts.
    let resolved: Vec<ResolvedConfig> = cells
        .iter()
        .map(|c| resolve_cell(cfg, &problem, c, exec))
        .collect();
    for (cell, r) in cells.iter().zip(&resolved) {
        let x0 = ModelVector::zeros(problem.dataset.dim());
        let (ds, part, spec) = (&problem.dataset, &problem.partition, problem.spec);
        let check = match r {
            ResolvedConfig::FedPage(c) => {
                fedsim_core::algorithms::FedPage::new(c.clone(), spec, ds, part, x0).map(|_| ())
            }
            ResolvedConfig::Scaffold(c) => {
                fedsim_core::algorithms::Scaffold::new(c.clone(), spec, ds, part, x0).map(|_| ())
            }
            ResolvedConfig::FedAvg(c) => {
                fedsim_core::algorithms::FedAvg::new(c.clone(), spec, ds, part, x0).map(|_| ())
            }
        };
        check.map_err(|e| format!("cell {}: {e}", cell.run_id))?;
    }

    let jobs: Vec<(usize, &Cell, &ResolvedConfig)> = cells
        .iter()
        .zip(&resolved)
        .enumerate()
        .map(|(i, (c, r))| (i, c, r))
        .collect();

    let run_one = |&(_, cell, r): &(usize, &Cell, &ResolvedConfig)| {
        let result = execute_cell(&problem, r);
        match result {
            Ok(rounds) => (to_records(cell, &rounds), false),
            Err(RunFailure::Diverged(d)) => {
                log::warn!("{} diverged at round {}", cell.run_id, d.round);
                (to_records(cell, &d.partial), true)
            }
            // Pre-flight validation makes this unreachable; fail loudly if not.
            Err(RunFailure::Config(e)) => panic!("cell {}: {e}", cell.run_id),
        }
    };

    #[cfg(feature = "parallel")]
    let results: Vec<(Vec<MetricsRecord>, bool)> = if parallel_cells {
        use rayon::prelude::*;
        jobs.par_iter().map(run_one).collect()
    } else {
        jobs.iter().map(run_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(Vec<MetricsRecord>, bool)> = {
        let _ = parallel_cells;
        jobs.iter().map(run_one).collect()
    };

    let diverged = results.iter().filter(|(_, d)| *d).count();
    let mut records: Vec<MetricsRecord> = results.into_iter().flat_map(|(r, _)| r).collect();
    records.sort_by(|a, b| a.run_id.cmp(&b.run_id).then(a.round.cmp(&b.round)));

    if let Some(parent) = cfg.output.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| format!("creating {}: {e}", parent.display()))?;
        }
    }
    write_records(&cfg.output, &records, format)?;
    print_theory_context(cfg, &problem);

    Ok(if diverged == 0 {
        GridOutcome::Complete
    } else if diverged == cells.len() {
        GridOutcome::TotalDivergence
    } else {
        GridOutcome::PartialDivergence
    })
}

fn write_records(
    path: &Path,
    records: &[MetricsRecord],
    format: crate::metrics::OutputFormat,
) -> Result<(), String> {
    let mut buf = Vec::new();
    emit_metrics(records, format, &mut buf).map_err(|e| e.to_string())?;
    fs::write(path, buf).map_err(|e| format!("writing {}: {e}", path.display()))
}

/// Prescribed round counts next to the measured output. Printed for
/// orientation only; the bounds hide absolute constants and are never
/// asserted against measurements.
fn print_theory_context(cfg: &ExperimentConfig, problem: &LoadedProblem) {
    use fedsim_core::theory::{
        nonconvex_round_bound, scaffold_nonconvex_round_bound, TheoryParams,
    };
    let n = problem.partition.num_clients() as u64;
    println!(
        "theory: N={} M={} L={:.4e} (bounds in theory units, constant 1)",
        n,
        problem.partition.samples_per_client(),
        problem.smoothness
    );
    for entry in &cfg.algorithms {
        if entry.kind == "fedavg" {
            continue;
        }
        let bounds: Vec<String> = [1e-2f64, 1e-3, 1e-4]
            .iter()
            .map(|&eps| {
                let params = TheoryParams {
                    smoothness: problem.smoothness,
                    sigma: 0.0,
                    num_clients: n,
                    sampled_clients: entry.sampled_clients as u64,
                    samples_per_client: Some(problem.partition.samples_per_client() as u64),
                    local_steps: entry.local_steps,
                    epsilon: eps,
                };
                let b = if entry.kind == "fedpage" {
                    nonconvex_round_bound(&params)
                } else {
                    scaffold_nonconvex_round_bound(&params)
                };
                format!("eps={eps:.0e}: {b:.3e}")
            })
            .collect();
        println!(
            "theory: {} rounds {}",
            entry.display_label(),
            bounds.join(", ")
        );
    }
}
