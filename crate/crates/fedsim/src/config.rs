//! Experiment configuration: a TOML file plus CLI flag overrides.

use std::path::PathBuf;

use serde::Deserialize;

use crate::metrics::OutputFormat;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// "robust" or "logistic".
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub samples_per_client: usize,
    /// Explicit client count; omitted means floor(count / M).
    #[serde(default)]
    pub num_clients: Option<usize>,
    /// Pin the feature dimension (must cover every index in the file).
    #[serde(default)]
    pub dim: Option<usize>,
    /// Permute samples with this seed before slicing into clients.
    #[serde(default)]
    pub shuffle_partition: Option<u64>,
    pub rounds: u64,
    pub seeds: Vec<u64>,
    pub effective_stepsizes: Vec<f64>,
    pub output: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_metrics_every")]
    pub metrics_every: u64,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmEntry>,
}

fn default_objective() -> String {
    "robust".into()
}

fn default_alpha() -> f64 {
    0.1
}

fn default_format() -> String {
    "csv".into()
}

fn default_metrics_every() -> u64 {
    1
}

/// One cell family of the grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmEntry {
    /// "fedpage", "scaffold" or "fedavg".
    pub kind: String,
    /// Display label; defaults to the kind, with "-full" appended for full
    /// variants.
    #[serde(default)]
    pub label: Option<String>,
    pub sampled_clients: usize,
    #[serde(default = "default_local_steps")]
    pub local_steps: u64,
    /// Replace every minibatch with the exact local gradient.
    #[serde(default)]
    pub full: bool,
    // fedpage knobs; None means M, M, 1 respectively.
    #[serde(default)]
    pub b1: Option<usize>,
    #[serde(default)]
    pub b2: Option<usize>,
    #[serde(default)]
    pub b3: Option<usize>,
    /// Local step size; None derives the prescribed value from the data.
    #[serde(default)]
    pub eta_l: Option<f64>,
    /// Full-sync probability; None means S / N.
    #[serde(default)]
    pub p: Option<f64>,
    // baseline knobs
    #[serde(default)]
    pub batch: Option<usize>,
    /// Baseline global step size; eta_l is then eta_tilde / (K eta_g).
    #[serde(default)]
    pub eta_g: Option<f64>,
}

fn default_local_steps() -> u64 {
    10
}

impl AlgorithmEntry {
    pub fn display_label(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None if self.full => format!("{}-full", self.kind),
            None => self.kind.clone(),
        }
    }
}

/// CLI overrides; every field mirrors a top-level config key.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub objective: Option<String>,
    pub alpha: Option<f64>,
    pub samples_per_client: Option<usize>,
    pub num_clients: Option<usize>,
    pub dim: Option<usize>,
    pub shuffle_partition: Option<u64>,
    pub rounds: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub effective_stepsizes: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    pub metrics_every: Option<u64>,
    pub eta_l: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn apply(&mut self, ov: &Overrides) {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = &ov.$field {
                    self.$field = v.clone();
                }
            };
        }
        take!(dataset);
        take!(objective);
        take!(alpha);
        take!(samples_per_client);
        take!(rounds);
        take!(seeds);
        take!(effective_stepsizes);
        take!(output);
        take!(format);
        take!(metrics_every);
        if ov.num_clients.is_some() {
            self.num_clients = ov.num_clients;
        }
        if ov.dim.is_some() {
            self.dim = ov.dim;
        }
        if ov.shuffle_partition.is_some() {
            self.shuffle_partition = ov.shuffle_partition;
        }
        if let Some(eta_l) = ov.eta_l {
            for alg in &mut self.algorithms {
                alg.eta_l = Some(eta_l);
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.seeds.is_empty() {
            return Err("seeds must not be empty".into());
        }
        if self.effective_stepsizes.is_empty() {
            return Err("effective_stepsizes must not be empty".into());
        }
        if self.algorithms.is_empty() {
            return Err("at least one [[algorithm]] entry is required".into());
        }
        if self.rounds == 0 {
            return Err("rounds must be >= 1".into());
        }
        for alg in &self.algorithms {
            match alg.kind.as_str() {
                "fedpage" | "scaffold" | "fedavg" => {}
                other => return Err(format!("unknown algorithm kind `{other}`")),
            }
        }
        self.parsed_objective()?;
        self.parsed_format()?;
        Ok(())
    }

    pub fn parsed_objective(&self) -> Result<fedsim_core::ObjectiveSpec, String> {
        match self.objective.as_str() {
            "robust" => Ok(fedsim_core::ObjectiveSpec::RobustLinearRegression),
            "logistic" => {
                Ok(fedsim_core::ObjectiveSpec::LogisticNonconvexReg { alpha: self.alpha })
            }
            other => Err(format!("unknown objective `{other}` (robust|logistic)")),
        }
    }

    pub fn parsed_format(&self) -> Result<OutputFormat, String> {
        self.format.parse()
    }
}
