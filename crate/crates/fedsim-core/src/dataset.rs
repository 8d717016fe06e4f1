//! LIBSVM-format parsing and equal-size client partitioning.
//!
//! Datasets are stored row-compressed: one flat index/value buffer plus row
//! offsets. Labels are kept as `f64` in {-1.0, +1.0}. A [`ClientPartition`]
//! assigns contiguous (or optionally shuffled) runs of samples to clients of
//! exactly `samples_per_client` samples each, dropping the trailing remainder.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

/// Borrowed view of one sample's sparse feature row.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    indices: &'a [u32],
    values: &'a [f64],
}

impl<'a> RowView<'a> {
    pub fn indices(&self) -> &'a [u32] {
        self.indices
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Squared Euclidean norm of the feature vector.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Parsed sparse dataset: feature rows plus binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    ///  Row i owns indices/values in `offsets[i]..offsets[i+1]`.
    offsets: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl SparseDataset {
    /// Number of samples.
    pub fn count(&self) -> usize {
        self.labels.len()
    }

    /// Feature-space dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Label of sample `i`, either -1.0 or +1.0.
    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Sparse feature row of sample `i`.
    pub fn row(&self, i: usize) -> RowView<'_> {
        let lo = self.offsets[i];
        let hi = self.offsets[i + 1];
        RowView {
            indices: &self.indices[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    /// Largest squared row norm, used by smoothness estimates.
    pub fn max_row_norm_sq(&self) -> f64 {
        (0..self.count())
            .map(|i| self.row(i).norm_sq())
            .fold(0.0, f64::max)
    }

    /// Build a dataset in memory. Intended for tests and synthetic data;
    /// rows must already satisfy the strictly-increasing index invariant.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>, labels: Vec<f64>, dim: usize) -> Self {
        assert_eq!(rows.len(), labels.len());
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in &rows {
            for &(i, v) in row {
                debug_assert!((i as usize) < dim);
                indices.push(i);
                values.push(v);
            }
            offsets.push(indices.len());
        }
        for &l in &labels {
            debug_assert!(l == 1.0 || l == -1.0);
        }
        SparseDataset {
            offsets,
            indices,
            values,
            labels,
            dim,
        }
    }

    /// Serialize back to LIBSVM text (1-based indices, `{}` float formatting,
    /// which round-trips f64 exactly).
    pub fn to_libsvm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.count() {
            let label = if self.labels[i] > 0.0 { "+1" } else { "-1" };
            write!(out, "{label}")?;
            let row = self.row(i);
            for (&idx, &val) in row.indices().iter().zip(row.values()) {
                write!(out, " {}:{}", idx + 1, val)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Parse LIBSVM text: one sample per line, `LABEL idx:val idx:val ...` with
/// 1-based feature indices. Labels `+1`/`1` map to +1, `-1` to -1 and `0` to
/// -1 (so {0,1}-labelled distributions work unchanged). `dim_override`, when
/// given, pins the dimension; it must cover every index seen.
pub fn parse_libsvm<R: BufRead>(
    reader: R,
    dim_override: Option<usize>,
) -> Result<SparseDataset, SimError> {
    let mut offsets = vec![0usize];
    let mut indices: Vec<u32> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut max_index: Option<u32> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a first token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| SimError::parse(lineno, format!("bad label token `{label_tok}`")))?;
        let label = if label == 1.0 {
            1.0
        } else if label == -1.0 || label == 0.0 {
            -1.0
        } else {
            return Err(SimError::parse(
                lineno,
                format!("label {label} outside {{-1, 0, +1}}"),
            ));
        };

        let mut prev_index: Option<u32> = None;
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| {
                SimError::parse(lineno, format!("expected `index:value`, got `{tok}`"))
            })?;
            let one_based: u32 = idx_str
                .parse()
                .map_err(|_| SimError::parse(lineno, format!("bad feature index `{idx_str}`")))?;
            if one_based == 0 {
                return Err(SimError::parse(lineno, "feature indices are 1-based"));
            }
            let idx = one_based - 1;
            if let Some(prev) = prev_index {
                if idx <= prev {
                    return Err(SimError::parse(
                        lineno,
                        format!("feature index {one_based} does not increase"),
                    ));
                }
            }
            let val: f64 = val_str
                .parse()
                .map_err(|_| SimError::parse(lineno, format!("bad feature value `{val_str}`")))?;
            prev_index = Some(idx);
            max_index = Some(max_index.map_or(idx, |m| m.max(idx)));
            indices.push(idx);
            values.push(val);
        }
        labels.push(label);
        offsets.push(indices.len());
    }

    let inferred = max_index.map_or(0, |m| m as usize + 1);
    let dim = match dim_override {
        Some(d) if d < inferred => {
            return Err(SimError::Config(format!(
                "dim override {d} is below the largest feature index seen ({inferred})"
            )))
        }
        Some(d) => d,
        None => inferred,
    };

    Ok(SparseDataset {
        offsets,
        indices,
        values,
        labels,
        dim,
    })
}

/// Parse a LIBSVM file from disk; names ending in `.gz` are decompressed.
pub fn parse_libsvm_path<P: AsRef<Path>>(
    path: P,
    dim_override: Option<usize>,
) -> Result<SparseDataset, SimError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let gz: Box<dyn Read> = Box::new(flate2::read::GzDecoder::new(file));
        parse_libsvm(BufReader::new(gz), dim_override)
    } else {
        parse_libsvm(BufReader::new(file), dim_override)
    }
}

/// Assignment of samples to equal-size clients.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientPartition {
    num_clients: usize,
    samples_per_client: usize,
    /// Flat assignment: client i owns `assignment[i*M..(i+1)*M]`.
    assignment: Vec<u32>,
    dropped: usize,
}

impl ClientPartition {
    /// Number of clients N.
    pub fn num_clients(&self) -> usize {
        self.num_clients
    }

    /// Samples per client M.
    pub fn samples_per_client(&self) -> usize {
        self.samples_per_client
    }

    /// Count of trailing samples not assigned to any client.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Global sample indices owned by client `i`.
    pub fn client(&self, i: usize) -> &[u32] {
        let m = self.samples_per_client;
        &self.assignment[i * m..(i + 1) * m]
    }
}

/// Partition into N = floor(count / M) clients of M consecutive samples; the
/// trailing `count mod M` samples are dropped.
pub fn partition_clients(
    dataset: &SparseDataset,
    samples_per_client: usize,
) -> Result<ClientPartition, SimError> {
    partition_clients_with(dataset, samples_per_client, None, None)
}

/// Partitioning with the two knobs the plain form fixes: an explicit client
/// count (must satisfy N*M <= count; more samples are then dropped than the
/// remainder) and an optional shuffle seed that permutes samples before
/// slicing.
pub fn partition_clients_with(
    dataset: &SparseDataset,
    samples_per_client: usize,
    num_clients: Option<usize>,
    shuffle_seed: Option<u64>,
) -> Result<ClientPartition, SimError> {
    let count = dataset.count();
    let m = samples_per_client;
    if m == 0 {
        return Err(SimError::Config("samples_per_client must be >= 1".into()));
    }
    if m > count {
        return Err(SimError::Config(format!(
            "samples_per_client {m} exceeds dataset size {count}"
        )));
    }
    let max_clients = count / m;
    let n = match num_clients {
        Some(n) if n == 0 || n > max_clients => {
            return Err(SimError::Config(format!(
                "num_clients {n} out of range [1, {max_clients}]"
            )))
        }
        Some(n) => n,
        None => max_clients,
    };

    let mut order: Vec<u32> = (0..count as u32).collect();
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    order.truncate(n * m);

    Ok(ClientPartition {
        num_clients: n,
        samples_per_client: m,
        assignment: order,
        dropped: count - n * m,
    })
}

/// Deterministic sparse binary-classification generator with block-structured
/// heterogeneity.
///
/// Samples arrive in contiguous blocks of `block` samples. Each block owns a
/// base feature pattern (a slice of a sliding window plus a few global
/// features, all with value 1.0) and a label bias; within a block, a
/// `variation` fraction of samples swap one feature for a neighbour. Blocks
/// are therefore nearly homogeneous inside and skewed against each other, so
/// slicing the output into contiguous clients of `block` samples reproduces
/// the shard heterogeneity natural orderings of public LIBSVM files exhibit.
pub fn synthetic_classification(
    samples: usize,
    dim: usize,
    block: usize,
    variation: f64,
    bias_step: f64,
    seed: u64,
) -> SparseDataset {
    use rand::Rng;

    assert!(dim >= 2 && block >= 1 && samples >= 1);
    assert!((0.0..=1.0).contains(&variation));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let window = (dim / 2).max(1);
    let window_feats = window.min(5);
    let global_feats = (dim - window).min(3);

    let blocks = samples.div_ceil(block);
    let mut rows = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for b in 0..blocks {
        let offset = (b * 13) % window;
        let mut base = std::collections::BTreeSet::new();
        while base.len() < window_feats {
            base.insert(((rng.gen_range(0..17) + offset) % window) as u32);
        }
        while base.len() < window_feats + global_feats {
            base.insert((window + rng.gen_range(0..dim - window)) as u32);
        }
        let base: Vec<u32> = base.into_iter().collect();
        let bias = ((b % 9) as f64 - 4.0) * bias_step;
        let in_block = block.min(samples - b * block);
        for _ in 0..in_block {
            let mut feats = base.clone();
            if rng.gen_bool(variation) {
                let k = rng.gen_range(0..window_feats);
                feats[k] = (feats[k] + 1) % window as u32;
                feats.sort_unstable();
                feats.dedup();
            }
            let score: f64 = feats.iter().map(|&i| truth[i as usize]).sum::<f64>() + bias;
            labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
            rows.push(feats.into_iter().map(|i| (i, 1.0)).collect());
        }
    }
    SparseDataset::from_rows(rows, labels, dim)
}
