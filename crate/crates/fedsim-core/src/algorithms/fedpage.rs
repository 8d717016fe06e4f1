//! The recursive variance-reduced local method.
//!
//! Each round is either a full sync (every client reports a minibatch
//! gradient at the broadcast point; probability p, forced on round 0) or a
//! sampled round (S clients receive (x^r, x^{r-1}, g^{r-1}), run K local
//! steps of a recursive gradient estimator, and return their model
//! displacement, which the server rescales into the next estimator).
//!
//! With K = 1 the sampled-round estimator collapses to the classical
//! recursive form g^r = (1/S) sum_i (grad_i(x^r) - grad_i(x^{r-1})) + g^{r-1}.

use crate::dataset::{ClientPartition, SparseDataset};
use crate::error::SimError;
use crate::exec::{map_clients, ExecMode};
use crate::model::ModelVector;
use crate::objective::{client_minibatch_grad, ObjectiveSpec};
use crate::sampling::{bernoulli, sample_subset, Purpose, StreamKey};

use super::{run_algorithm, Branch, Diverged, RoundAlgorithm, RoundMetrics, RunFailure, StepStats};

/// Parameters of a run.
#[derive(Debug, Clone)]
pub struct FedPageConfig {
    /// Global step size eta_g (also the effective step size).
    pub eta_g: f64,
    /// Local step size eta_l.
    pub eta_l: f64,
    /// Local steps K per sampled round.
    pub local_steps: u64,
    /// Sampled clients S per sampled round.
    pub sampled_clients: usize,
    /// Full-sync probability for rounds r >= 1 (round 0 is always full sync).
    pub p: f64,
    /// Minibatch for full-sync gradient reports.
    pub b1: usize,
    /// Minibatch for the first local step's two-point correction.
    pub b2: usize,
    /// Minibatch for each subsequent local step.
    pub b3: usize,
    pub rounds: u64,
    pub seed: u64,
    pub metrics_every: u64,
    pub exec: ExecMode,
}

impl FedPageConfig {
    /// The full-gradient ablation: b1 = b2 = b3 = M.
    pub fn full_variant(mut self, samples_per_client: usize) -> Self {
        self.b1 = samples_per_client;
        self.b2 = samples_per_client;
        self.b3 = samples_per_client;
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
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(SimError::Config(format!("p {} outside (0, 1]", self.p)));
        }
        let mut cfg = self.clone();
        for (name, b) in [
            ("b1", &mut cfg.b1),
            ("b2", &mut cfg.b2),
            ("b3", &mut cfg.b3),
        ] {
            if *b == 0 {
                return Err(SimError::Config(format!("{name} must be >= 1")));
            }
            if *b > m {
                log::warn!("{name} {} clamped to samples_per_client {m}", *b);
                *b = m;
            }
        }
        Ok(cfg)
    }
}

/// Server-side optimizer state between rounds.
#[derive(Debug, Clone)]
pub struct ServerState {
    /// Index of the next round to execute.
    pub round: u64,
    /// Current iterate x^r.
    pub x_cur: ModelVector,
    /// Previous iterate x^{r-1}, broadcast on sampled rounds.
    pub x_prev: ModelVector,
    /// Previous estimator g^{r-1}, broadcast on sampled rounds.
    pub g_prev: ModelVector,
}

impl ServerState {
    /// Fresh state at x0. The previous-round slots hold placeholders; round 0
    /// is forced to the full-sync branch, which populates them before any
    /// sampled round can read them.
    pub fn initial(x0: ModelVector) -> Self {
        let dim = x0.dim();
        ServerState {
            round: 0,
            x_prev: x0.clone(),
            x_cur: x0,
            g_prev: ModelVector::zeros(dim),
        }
    }
}

/// What a sampled client sends back.
#[derive(Debug, Clone)]
pub struct ClientRoundOutput {
    /// Signed displacement over the K local steps, eta_l * sum_k g_{i,k}
    /// (identically x^r - y_{i,K}).
    pub delta_y: ModelVector,
    /// Per-sample gradient evaluations the client performed.
    pub grad_evals: u64,
}

/// Branch decision for round `round`: full sync on round 0, Bernoulli(p)
/// on the round's own server stream afterwards.
pub fn round_branch(seed: u64, round: u64, p: f64) -> Branch {
    if round == 0 || bernoulli(&StreamKey::server(seed, round, Purpose::RoundType), p) {
        Branch::FullSync
    } else {
        Branch::Sampled
    }
}

/// One sampled client's K local steps.
///
/// The first estimator corrects g^{r-1} with a two-point minibatch difference
/// between x^r and x^{r-1}; each further step corrects the previous estimator
/// with a fresh-batch difference between consecutive local iterates.
#[allow(clippy::too_many_arguments)]
pub fn fedpage_client_local(
    config: &FedPageConfig,
    spec: ObjectiveSpec,
    dataset: &SparseDataset,
    partition: &ClientPartition,
    client: usize,
    round: u64,
    x_cur: &ModelVector,
    x_prev: &ModelVector,
    g_prev: &ModelVector,
) -> ClientRoundOutput {
    let m = partition.samples_per_client();
    let k_steps = config.local_steps;

    let i2 = sample_subset(
        &StreamKey::client(config.seed, round, client as u32, Purpose::Batch2),
        m,
        config.b2,
    );
    let mut g_k = client_minibatch_grad(spec, x_cur, dataset, partition, client, &i2);
    g_k.sub_assign(&client_minibatch_grad(
        spec, x_prev, dataset, partition, client, &i2,
    ));
    g_k.add_assign(g_prev);

    let mut sum_g = g_k.clone();
    let mut y_prev = x_cur.clone();
    let mut y_cur = x_cur.clone();
    y_cur.axpy(-config.eta_l, &g_k);

    for k in 1..k_steps {
        let i3 = sample_subset(
            &StreamKey::client(
                config.seed,
                round,
                client as u32,
                Purpose::Batch3 { step: k as u32 },
            ),
            m,
            config.b3,
        );
        let mut next = client_minibatch_grad(spec, &y_cur, dataset, partition, client, &i3);
        next.sub_assign(&client_minibatch_grad(
            spec, &y_prev, dataset, partition, client, &i3,
        ));
        next.add_assign(&g_k);
        g_k = next;
        sum_g.add_assign(&g_k);
        y_prev.clone_from(&y_cur);
        y_cur.axpy(-config.eta_l, &g_k);
    }

    // x^r - y_{i,K} by the displacement identity; accumulating the estimator
    // sum keeps the server's rescaling an exact inverse of eta_l.
    let mut delta_y = sum_g;
    delta_y.scale(config.eta_l);
    ClientRoundOutput {
        delta_y,
        grad_evals: 2 * config.b2 as u64 + 2 * (k_steps - 1) * config.b3 as u64,
    }
}

/// Run state machine.
pub struct FedPage<'a> {
    config: FedPageConfig,
    spec: ObjectiveSpec,
    dataset: &'a SparseDataset,
    partition: &'a ClientPartition,
    state: ServerState,
}

impl<'a> FedPage<'a> {
    pub fn new(
        config: FedPageConfig,
        spec: ObjectiveSpec,
        dataset: &'a SparseDataset,
        partition: &'a ClientPartition,
        x0: ModelVector,
    ) -> Result<Self, SimError> {
        Self::with_state(config, spec, dataset, partition, ServerState::initial(x0))
    }

    /// Start from explicit server state (e.g. mid-trajectory), used to probe
    /// single-round estimator behaviour.
    pub fn with_state(
        config: FedPageConfig,
        spec: ObjectiveSpec,
        dataset: &'a SparseDataset,
        partition: &'a ClientPartition,
        state: ServerState,
    ) -> Result<Self, SimError> {
        let config = config.validate(partition)?;
        Ok(FedPage {
            config,
            spec,
            dataset,
            partition,
            state,
        })
    }

    pub fn state(&self) -> &ServerState {
        &self.state
    }

    pub fn config(&self) -> &FedPageConfig {
        &self.config
    }

    fn full_sync_round(&mut self, round: u64) -> StepStats {
        let n = self.partition.num_clients();
        let m = self.partition.samples_per_client();
        let clients: Vec<usize> = (0..n).collect();
        let grads = map_clients(self.config.exec, &clients, |i| {
            let i1 = sample_subset(
                &StreamKey::client(self.config.seed, round, i as u32, Purpose::Batch1),
                m,
                self.config.b1,
            );
            client_minibatch_grad(
                self.spec,
                &self.state.x_cur,
                self.dataset,
                self.partition,
                i,
                &i1,
            )
        });
        let mut g = ModelVector::zeros(self.state.x_cur.dim());
        for gi in &grads {
            g.add_assign(gi);
        }
        g.scale(1.0 / n as f64);
        self.apply_server_update(g);
        StepStats {
            clients_contacted: n,
            grad_evals_total: n as u64 * self.config.b1 as u64,
            branch: Branch::FullSync,
        }
    }

    fn sampled_round(&mut self, round: u64) -> StepStats {
        let n = self.partition.num_clients();
        let s = self.config.sampled_clients;
        let subset = sample_subset(
            &StreamKey::server(self.config.seed, round, Purpose::ClientSubset),
            n,
            s,
        );
        let outputs = map_clients(self.config.exec, &subset, |i| {
            fedpage_client_local(
                &self.config,
                self.spec,
                self.dataset,
                self.partition,
                i,
                round,
                &self.state.x_cur,
                &self.state.x_prev,
                &self.state.g_prev,
            )
        });
        let mut g = ModelVector::zeros(self.state.x_cur.dim());
        let mut evals = 0u64;
        for out in &outputs {
            g.add_assign(&out.delta_y);
            evals += out.grad_evals;
        }
        g.scale(1.0 / (self.config.local_steps as f64 * self.config.eta_l * s as f64));
        self.apply_server_update(g);
        StepStats {
            clients_contacted: s,
            grad_evals_total: evals,
            branch: Branch::Sampled,
        }
    }

    fn apply_server_update(&mut self, g: ModelVector) {
        self.state.x_prev.clone_from(&self.state.x_cur);
        self.state.x_cur.axpy(-self.config.eta_g, &g);
        self.state.g_prev = g;
    }
}

impl RoundAlgorithm for FedPage<'_> {
    fn step_round(&mut self) -> StepStats {
        let round = self.state.round;
        let stats = match round_branch(self.config.seed, round, self.config.p) {
            Branch::FullSync => self.full_sync_round(round),
            Branch::Sampled => self.sampled_round(round),
        };
        self.state.round += 1;
        stats
    }

    fn current_x(&self) -> &ModelVector {
        &self.state.x_cur
    }
}

impl FedPage<'_> {
    /// Advance one round; needed by callers that inspect state between rounds.
    pub fn step(&mut self) -> (Branch, usize) {
        let stats = self.step_round();
        (stats.branch, stats.clients_contacted)
    }

    /// Drive the configured number of rounds, collecting metrics.
    pub fn run(&mut self) -> Result<Vec<RoundMetrics>, Diverged> {
        let rounds = self.config.rounds;
        let every = self.config.metrics_every;
        let (spec, dataset, partition) = (self.spec, self.dataset, self.partition);
        run_algorithm(self, rounds, every, spec, dataset, partition)
    }
}

/// Run from x0 for the configured number of rounds.
pub fn fedpage_run(
    config: FedPageConfig,
    spec: ObjectiveSpec,
    dataset: &SparseDataset,
    partition: &ClientPartition,
    x0: ModelVector,
) -> Result<Vec<RoundMetrics>, RunFailure> {
    let mut alg = FedPage::new(config, spec, dataset, partition, x0)?;
    Ok(alg.run()?)
}
