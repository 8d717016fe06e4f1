//! Round-stepping federated optimization algorithms behind a common driver.
//!
//! Each algorithm is a state machine advanced one communication round at a
//! time. The shared driver computes per-round metrics with the exact global
//! gradient (metrics only; never charged to the gradient-evaluation counters
//! and drawing no randomness from algorithm streams) and aborts with the
//! offending round index as soon as the trajectory stops being finite.

mod fedavg;
mod fedpage;
mod scaffold;

pub use fedavg::{fedavg_run, FedAvg};
pub use fedpage::{
    fedpage_client_local, fedpage_run, round_branch, ClientRoundOutput, FedPage, FedPageConfig,
    ServerState,
};
pub use scaffold::{scaffold_run, Scaffold};

use crate::error::SimError;

use crate::dataset::{ClientPartition, SparseDataset};
use crate::exec::ExecMode;
use crate::model::ModelVector;
use crate::objective::{global_full_grad, objective_value, ObjectiveSpec};

/// Which branch a round took. Baselines without a full-sync branch report
/// `Sampled` every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    FullSync,
    Sampled,
}

/// Per-round measurements. `grad_norm` and `objective` are evaluated at the
/// post-update iterate x^{r+1}; `cum_grad_evals_per_client` is the running
/// population-average number of per-sample gradient evaluations and
/// `cum_clients_contacted` the running communication total, both counted over
/// every round including ones metric thinning skips.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    pub grad_norm: f64,
    pub objective: f64,
    pub clients_contacted: usize,
    pub cum_clients_contacted: u64,
    pub cum_grad_evals_per_client: f64,
    pub branch: Branch,
}

/// Trajectory left the finite range (NaN/Inf or magnitude above the
/// divergence limit). Carries the partial metrics trace up to the failure.
#[derive(Debug, Clone)]
pub struct Diverged {
    pub round: u64,
    pub partial: Vec<RoundMetrics>,
}

impl std::fmt::Display for Diverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "diverged at round {}", self.round)
    }
}

impl std::error::Error for Diverged {}

/// Why a run could not produce a full metrics trace.
#[derive(Debug, thiserror::Error)]
pub enum RunFailure {
    #[error(transparent)]
    Config(#[from] SimError),
    #[error(transparent)]
    Diverged(#[from] Diverged),
}

/// Objective or gradient-norm magnitude beyond this is treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// What one round reports back to the driver.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepStats {
    pub clients_contacted: usize,
    /// Per-sample gradient evaluations summed over the whole population.
    pub grad_evals_total: u64,
    pub branch: Branch,
}

pub(crate) trait RoundAlgorithm {
    fn step_round(&mut self) -> StepStats;
    fn current_x(&self) -> &ModelVector;
}

/// Drive an algorithm for `rounds` rounds, recording metrics every
/// `metrics_every` rounds (and always on the final round).
pub(crate) fn run_algorithm<A: RoundAlgorithm>(
    alg: &mut A,
    rounds: u64,
    metrics_every: u64,
    spec: ObjectiveSpec,
    dataset: &SparseDataset,
    partition: &ClientPartition,
) -> Result<Vec<RoundMetrics>, Diverged> {
    let every = metrics_every.max(1);
    let n = partition.num_clients() as f64;
    let mut out = Vec::new();
    let mut cum_evals = 0.0;
    let mut cum_clients = 0u64;
    for r in 0..rounds {
        let stats = alg.step_round();
        cum_evals += stats.grad_evals_total as f64 / n;
        cum_clients += stats.clients_contacted as u64;
        let measure = r % every == 0 || r + 1 == rounds;
        if measure {
            let grad_norm = global_full_grad(spec, alg.current_x(), dataset, partition).norm();
            let objective = objective_value(spec, alg.current_x(), dataset, partition);
            out.push(RoundMetrics {
                round: r,
                grad_norm,
                objective,
                clients_contacted: stats.clients_contacted,
                cum_clients_contacted: cum_clients,
                cum_grad_evals_per_client: cum_evals,
                branch: stats.branch,
            });
            let bad = !grad_norm.is_finite()
                || !objective.is_finite()
                || grad_norm > DIVERGENCE_LIMIT
                || objective > DIVERGENCE_LIMIT;
            if bad {
                return Err(Diverged {
                    round: r,
                    partial: out,
                });
            }
        } else if !alg.current_x().is_finite() {
            return Err(Diverged {
                round: r,
                partial: out,
            });
        }
    }
    Ok(out)
}

/// Shared configuration for the local-SGD baselines.
#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub eta_g: f64,
    pub eta_l: f64,
    pub local_steps: u64,
    pub sampled_clients: usize,
    pub batch: usize,
    pub rounds: u64,
    pub seed: u64,
    pub metrics_every: u64,
    pub exec: ExecMode,
}

impl BaselineConfig {
    /// Effective step size eta_tilde = K * eta_g * eta_l, the cross-algorithm
    /// comparison knob.
    pub fn effective_stepsize(&self) -> f64 {
        self.local_steps as f64 * self.eta_g * self.eta_l
    }

    /// The full-gradient ablation: every local minibatch becomes the exact
    /// local gradient.
    pub fn full_variant(mut self, samples_per_client: usize) -> Self {
        self.batch = samples_per_client;
        self
    }

    pub(crate) fn validate(&self, partition: &ClientPartition) -> Result<Self, SimError> {
        let n = partition.num_clients();
        let m = partition.samples_per_client();
        if self.sampled_clients == 0 || self.sampled_clients > n {
            return Err(SimError::Config(format!(
                "sampled_clients {} outside [1, {n}]",
                self.sampled_clients
            )));
        }
        if self.local_steps == 0 {
            return Err(SimError::Config("local_steps must be >= 1".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.eta_g) || !positive(self.eta_l) {
            return Err(SimError::Config("step sizes must be positive".into()));
        }
        if self.batch == 0 {
            return Err(SimError::Config("batch must be >= 1".into()));
        }
        let mut cfg = self.clone();
        if cfg.batch > m {
            log::warn!("batch {} clamped to samples_per_client {m}", cfg.batch);
            cfg.batch = m;
        }
        Ok(cfg)
    }
}
