//! The two nonconvex benchmark objectives and their gradient kernels.
//!
//! Robust linear regression:  loss(t) = log(1 + t^2/2) on the residual
//! t = x.a - b.  Logistic regression with a nonconvex regularizer:
//! log(1 + exp(-b x.a)) + alpha * sum_j x_j^2 / (1 + x_j^2).
//!
//! The regularizer is charged in full to every sample, so the average over
//! any set of samples reproduces the regularized objective and every
//! per-sample gradient is self-contained.

use crate::dataset::{ClientPartition, RowView, SparseDataset};
use crate::model::ModelVector;

/// Which objective to optimize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveSpec {
    RobustLinearRegression,
    /// `alpha` weights the nonconvex regularizer; 0.1 is the customary value.
    LogisticNonconvexReg {
        alpha: f64,
    },
}

impl ObjectiveSpec {
    pub fn logistic_default() -> Self {
        ObjectiveSpec::LogisticNonconvexReg { alpha: 0.1 }
    }
}

/// log(1 + exp(z)) without overflow for large |z|.
fn log1p_exp(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Standard sigmoid, evaluated through exp of a non-positive argument only.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss of one sample.
pub fn sample_loss(spec: ObjectiveSpec, x: &ModelVector, row: RowView<'_>, label: f64) -> f64 {
    match spec {
        ObjectiveSpec::RobustLinearRegression => {
            let t = x.dot_sparse(row) - label;
            (t * t / 2.0).ln_1p()
        }
        ObjectiveSpec::LogisticNonconvexReg { alpha } => {
            let z = -label * x.dot_sparse(row);
            let reg: f64 = x
                .as_slice()
                .iter()
                .map(|&v| v * v / (1.0 + v * v))
                .sum::<f64>();
            log1p_exp(z) + alpha * reg
        }
    }
}

/// Scalar coefficient c such that the data term of the sample gradient is
/// c * a. Robust: loss'(t); logistic: -b * sigmoid(-b x.a).
fn data_coeff(spec: ObjectiveSpec, x: &ModelVector, row: RowView<'_>, label: f64) -> f64 {
    match spec {
        ObjectiveSpec::RobustLinearRegression => {
            let t = x.dot_sparse(row) - label;
            2.0 * t / (2.0 + t * t)
        }
        ObjectiveSpec::LogisticNonconvexReg { .. } => {
            let z = -label * x.dot_sparse(row);
            -label * sigmoid(z)
        }
    }
}

/// Add the (dense) regularizer gradient into `out`. A no-op for the robust
/// objective.
fn add_regularizer_grad(spec: ObjectiveSpec, x: &ModelVector, out: &mut ModelVector) {
    if let ObjectiveSpec::LogisticNonconvexReg { alpha } = spec {
        for (g, &v) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
            let denom = 1.0 + v * v;
            *g += alpha * 2.0 * v / (denom * denom);
        }
    }
}

/// Gradient of one sample's loss, returned dense.
pub fn sample_grad(
    spec: ObjectiveSpec,
    x: &ModelVector,
    row: RowView<'_>,
    label: f64,
) -> ModelVector {
    let mut g = ModelVector::zeros(x.dim());
    g.axpy_sparse(data_coeff(spec, x, row, label), row);
    add_regularizer_grad(spec, x, &mut g);
    g
}

/// Mean gradient over a client's minibatch, given local sample positions
/// within the client (a subset of `0..M`). Equals the exact local gradient
/// when the batch covers all M samples.
pub fn client_minibatch_grad(
    spec: ObjectiveSpec,
    x: &ModelVector,
    dataset: &SparseDataset,
    partition: &ClientPartition,
    client: usize,
    batch: &[usize],
) -> ModelVector {
    assert!(!batch.is_empty(), "gradient over an empty minibatch");
    let samples = partition.client(client);
    let mut g = ModelVector::zeros(x.dim());
    for &local in batch {
        let s = samples[local] as usize;
        g.axpy_sparse(
            data_coeff(spec, x, dataset.row(s), dataset.label(s)),
            dataset.row(s),
        );
    }
    g.scale(1.0 / batch.len() as f64);
    // The regularizer gradient is identical for every sample, so its
    // minibatch mean is one evaluation.
    add_regularizer_grad(spec, x, &mut g);
    g
}

/// Exact gradient of one client's local objective.
pub fn client_full_grad(
    spec: ObjectiveSpec,
    x: &ModelVector,
    dataset: &SparseDataset,
    partition: &ClientPartition,
    client: usize,
) -> ModelVector {
    let all: Vec<usize> = (0..partition.samples_per_client()).collect();
    client_minibatch_grad(spec, x, dataset, partition, client, &all)
}

/// Exact gradient of the global objective: the mean of client gradients,
/// accumulated in ascending client order.
pub fn global_full_grad(
    spec: ObjectiveSpec,
    x: &ModelVector,
    dataset: &SparseDataset,
    partition: &ClientPartition,
) -> ModelVector {
    let n = partition.num_clients();
    let mut acc = ModelVector::zeros(x.dim());
    for i in 0..n {
        acc.add_assign(&client_full_grad(spec, x, dataset, partition, i));
    }
    acc.scale(1.0 / n as f64);
    acc
}

/// Objective value f(x): mean over clients of mean over their samples.
pub fn objective_value(
    spec: ObjectiveSpec,
    x: &ModelVector,
    dataset: &SparseDataset,
    partition: &ClientPartition,
) -> f64 {
    let n = partition.num_clients();
    let m = partition.samples_per_client();
    let mut total = 0.0;
    for i in 0..n {
        let mut local = 0.0;
        for &s in partition.client(i) {
            local += sample_loss(spec, x, dataset.row(s as usize), dataset.label(s as usize));
        }
        total += local / m as f64;
    }
    total / n as f64
}

/// Upper bound on the per-sample gradient Lipschitz constant.
///
/// Robust: the residual loss has curvature at most 1 (peaked at t = 0), so
/// L = max_i ||a_i||^2. Logistic: the data Hessian is bounded by ||a||^2 / 4
/// and the regularizer's diagonal curvature by 2 alpha.
pub fn smoothness_estimate(spec: ObjectiveSpec, dataset: &SparseDataset) -> f64 {
    assert!(dataset.count() > 0, "smoothness of an empty dataset");
    let max_sq = dataset.max_row_norm_sq();
    match spec {
        ObjectiveSpec::RobustLinearRegression => max_sq,
        ObjectiveSpec::LogisticNonconvexReg { alpha } => max_sq / 4.0 + 2.0 * alpha,
    }
}

/// Largest within-client empirical gradient variance at x = 0, a data-driven
/// stand-in for the bounded-variance constant sigma^2.
pub fn sigma_sq_estimate(
    spec: ObjectiveSpec,
    dataset: &SparseDataset,
    partition: &ClientPartition,
) -> f64 {
    let x = ModelVector::zeros(dataset.dim());
    let m = partition.samples_per_client();
    let mut worst: f64 = 0.0;
    for i in 0..partition.num_clients() {
        let mean = client_full_grad(spec, &x, dataset, partition, i);
        let mut var = 0.0;
        for &s in partition.client(i) {
            let g = sample_grad(spec, &x, dataset.row(s as usize), dataset.label(s as usize));
            var += g.distance(&mean).powi(2);
        }
        worst = worst.max(var / m as f64);
    }
    worst
}
