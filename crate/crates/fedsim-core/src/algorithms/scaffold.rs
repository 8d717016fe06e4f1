//! SCAFFOLD baseline with model-difference control variates.
//!
//! The server keeps (x, c) and every client a correction c_i (all zero at
//! start). A sampled client runs K corrected SGD steps
//! y <- y - eta_l (grad_I(y) - c_i + c), then refreshes its correction from
//! its own model difference, c_i+ = c_i - c + (x - y_K) / (K eta_l), which
//! costs no extra gradient evaluations.

use crate::dataset::{ClientPartition, SparseDataset};
use crate::error::SimError;
use crate::exec::map_clients;
use crate::model::ModelVector;
use crate::objective::{client_minibatch_grad, ObjectiveSpec};
use crate::sampling::{sample_subset, Purpose, StreamKey};

use super::{
    run_algorithm, BaselineConfig, Branch, Diverged, RoundAlgorithm, RoundMetrics, RunFailure,
    StepStats,
};

pub struct Scaffold<'a> {
    config: BaselineConfig,
    spec: ObjectiveSpec,
    dataset: &'a SparseDataset,
    partition: &'a ClientPartition,
    x: ModelVector,
    server_c: ModelVector,
    client_c: Vec<ModelVector>,
    round: u64,
}

impl<'a> Scaffold<'a> {
    pub fn new(
        config: BaselineConfig,
        spec: ObjectiveSpec,
        dataset: &'a SparseDataset,
        partition: &'a ClientPartition,
        x0: ModelVector,
    ) -> Result<Self, SimError> {
        let config = config.validate(partition)?;
        let dim = x0.dim();
        Ok(Scaffold {
            config,
            spec,
            dataset,
            partition,
            x: x0,
            server_c: ModelVector::zeros(dim),
            client_c: vec![ModelVector::zeros(dim); partition.num_clients()],
            round: 0,
        })
    }

    pub fn current_model(&self) -> &ModelVector {
        &self.x
    }

    /// K corrected local steps for one sampled client; returns the model
    /// displacement y_K - x and the refreshed control variate.
    fn client_round(&self, client: usize, round: u64) -> (ModelVector, ModelVector) {
        let m = self.partition.samples_per_client();
        let c_i = &self.client_c[client];
        let mut y = self.x.clone();
        for k in 0..self.config.local_steps {
            let batch = sample_subset(
                &StreamKey::client(
                    self.config.seed,
                    round,
                    client as u32,
                    Purpose::Batch3 { step: k as u32 },
                ),
                m,
                self.config.batch,
            );
            let mut dir =
                client_minibatch_grad(self.spec, &y, self.dataset, self.partition, client, &batch);
            dir.sub_assign(c_i);
            dir.add_assign(&self.server_c);
            y.axpy(-self.config.eta_l, &dir);
        }
        let mut c_plus = self.x.clone();
        c_plus.sub_assign(&y);
        c_plus.scale(1.0 / (self.config.local_steps as f64 * self.config.eta_l));
        c_plus.add_assign(c_i);
        c_plus.sub_assign(&self.server_c);
        let mut delta_y = y;
        delta_y.sub_assign(&self.x);
        (delta_y, c_plus)
    }
}

impl RoundAlgorithm for Scaffold<'_> {
    fn step_round(&mut self) -> StepStats {
        let round = self.round;
        let n = self.partition.num_clients();
        let s = self.config.sampled_clients;
        let subset = sample_subset(
            &StreamKey::server(self.config.seed, round, Purpose::ClientSubset),
            n,
            s,
        );
        let outputs = map_clients(self.config.exec, &subset, |i| self.client_round(i, round));

        let mut delta_sum = ModelVector::zeros(self.x.dim());
        let mut dc_sum = ModelVector::zeros(self.x.dim());
        for (client, (delta_y, c_plus)) in subset.iter().zip(outputs) {
            delta_sum.add_assign(&delta_y);
            let mut dc = c_plus.clone();
            dc.sub_assign(&self.client_c[*client]);
            dc_sum.add_assign(&dc);
            self.client_c[*client] = c_plus;
        }
        self.x.axpy(self.config.eta_g / s as f64, &delta_sum);
        self.server_c.axpy(1.0 / n as f64, &dc_sum);

        self.round += 1;
        StepStats {
            clients_contacted: s,
            grad_evals_total: s as u64 * self.config.local_steps * self.config.batch as u64,
            branch: Branch::Sampled,
        }
    }

    fn current_x(&self) -> &ModelVector {
        &self.x
    }
}

impl Scaffold<'_> {
    pub fn step(&mut self) -> usize {
        self.step_round().clients_contacted
    }

    pub fn run(&mut self) -> Result<Vec<RoundMetrics>, Diverged> {
        let rounds = self.config.rounds;
        let every = self.config.metrics_every;
        let (spec, dataset, partition) = (self.spec, self.dataset, self.partition);
        run_algorithm(self, rounds, every, spec, dataset, partition)
    }
}

pub fn scaffold_run(
    config: BaselineConfig,
    spec: ObjectiveSpec,
    dataset: &SparseDataset,
    partition: &ClientPartition,
    x0: ModelVector,
) -> Result<Vec<RoundMetrics>, RunFailure> {
    let mut alg = Scaffold::new(config, spec, dataset, partition, x0)?;
    Ok(alg.run()?)
}
