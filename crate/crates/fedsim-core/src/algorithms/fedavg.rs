//! FedAvg / local-SGD baseline.
//!
//! Sampled clients run K plain minibatch SGD steps from the broadcast model;
//! the server moves by the average displacement scaled with eta_g.

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

pub struct FedAvg<'a> {
    config: BaselineConfig,
    spec: ObjectiveSpec,
    dataset: &'a SparseDataset,
    partition: &'a ClientPartition,
    x: ModelVector,
    round: u64,
}

impl<'a> FedAvg<'a> {
    pub fn new(
        config: BaselineConfig,
        spec: ObjectiveSpec,
        dataset: &'a SparseDataset,
        partition: &'a ClientPartition,
        x0: ModelVector,
    ) -> Result<Self, SimError> {
        let config = config.validate(partition)?;
        Ok(FedAvg {
            config,
            spec,
            dataset,
            partition,
            x: x0,
            round: 0,
        })
    }

    pub fn current_model(&self) -> &ModelVector {
        &self.x
    }

    fn client_round(&self, client: usize, round: u64) -> ModelVector {
        let m = self.partition.samples_per_client();
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
            let dir =
                client_minibatch_grad(self.spec, &y, self.dataset, self.partition, client, &batch);
            y.axpy(-self.config.eta_l, &dir);
        }
        y.sub_assign(&self.x);
        y
    }
}

impl RoundAlgorithm for FedAvg<'_> {
    fn step_round(&mut self) -> StepStats {
        let round = self.round;
        let n = self.partition.num_clients();
        let s = self.config.sampled_clients;
        let subset = sample_subset(
            &StreamKey::server(self.config.seed, round, Purpose::ClientSubset),
            n,
            s,
        );
        let deltas = map_clients(self.config.exec, &subset, |i| self.client_round(i, round));
        let mut delta_sum = ModelVector::zeros(self.x.dim());
        for d in &deltas {
            delta_sum.add_assign(d);
        }
        self.x.axpy(self.config.eta_g / s as f64, &delta_sum);
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

impl FedAvg<'_> {
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

pub fn fedavg_run(
    config: BaselineConfig,
    spec: ObjectiveSpec,
    dataset: &SparseDataset,
    partition: &ClientPartition,
    x0: ModelVector,
) -> Result<Vec<RoundMetrics>, RunFailure> {
    let mut alg = FedAvg::new(config, spec, dataset, partition, x0)?;
    Ok(alg.run()?)
}
