//! File form of a training run: [`RunConfig`] plus dataset source and output
//! settings. Parsing reports the JSON path of the first offending value.

use std::path::{Path, PathBuf};

use rmgd_core::data::idx::{read_images, read_labels};
use rmgd_core::data::{make_blobs, Dataset, Split};
use rmgd_core::trainer::Beta;
use rmgd_core::{ArmSet, LearningRateSchedule, ModelKind, ModelSpec, OptimizerConfig, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_HIDDEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Blobs(BlobsSpec),
    Idx(IdxSpec),
}

/// Synthetic Gaussian blobs. `seed` defaults to the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobsSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub spread: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// MNIST-style IDX files. The last `validation` training examples are held
/// out for the validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxSpec {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default = "default_validation")]
    pub validation: usize,
}

fn default_validation() -> usize {
    5000
}

/// Model section. Input and output sizes default to the dataset's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_kind")]
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
    #[serde(default)]
    pub l2: f64,
}

fn default_kind() -> ModelKind {
    ModelKind::Mlp
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            input_dim: None,
            hidden_dim: None,
            num_classes: None,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub arms: ArmSet,
    #[serde(default = "default_beta")]
    pub beta: Beta,
    pub epochs: usize,
    #[serde(default = "OptimizerConfig::adam")]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_lr")]
    pub lr: LearningRateSchedule,
    #[serde(default)]
    pub model: ModelConfig,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_floor")]
    pub prob_floor: f64,
    #[serde(default)]
    pub reset_optimizer_on_switch: bool,
    /// Fixed batch size for `mgd`; falls back to a single-arm `arms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Progress is logged every this many epochs; the JSONL log always has
    /// every epoch.
    #[serde(default = "one")]
    pub log_every: usize,
    /// Also write periodic checkpoints every this many epochs (0 = only the
    /// final one).
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub log_wall_time: bool,
}

fn default_beta() -> Beta {
    Beta::Auto
}

fn default_lr() -> LearningRateSchedule {
    LearningRateSchedule::constant(1e-3)
}

fn default_floor() -> f64 {
    rmgd_core::bandit::DEFAULT_PROB_FLOOR
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/latest")
}

fn one() -> usize {
    1
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub epochs: Option<usize>,
    pub arms: Option<Vec<usize>>,
    pub beta: Option<Beta>,
    pub batch_size: Option<usize>,
    pub checkpoint_every: Option<usize>,
    pub log_wall_time: bool,
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "dataset" {
            if let Some(inner) = dataset_error(text) {
                return inner;
            }
        }
        CliError::config(path, e.into_inner())
    })
}

/// Tagged enums buffer their content, which hides the offending key from the
/// path tracker. Re-parse the dataset section against its variant to find it.
fn dataset_error(text: &str) -> Option<CliError> {
    fn first_error<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Option<(String, String)> {
        serde_path_to_error::deserialize::<_, T>(v)
            .err()
            .map(|e| (e.path().to_string(), e.into_inner().to_string()))
    }
    let doc: serde_json::Value = serde_json::from_str(text).ok()?;
    let mut section = doc.get("dataset")?.clone();
    let kind = section.as_object_mut()?.remove("kind")?;
    let (path, msg) = match kind.as_str()? {
        "blobs" => first_error::<BlobsSpec>(section)?,
        "idx" => first_error::<IdxSpec>(section)?,
        _ => return None,
    };
    let path = if path == "." {
        "dataset".into()
    } else {
        format!("dataset.{path}")
    };
    Some(CliError::config(path, msg))
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_config_str(&text)
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.output {
            self.output_dir = out.clone();
        }
        if let Some(epochs) = o.epochs {
            self.epochs = epochs;
        }
        if let Some(arms) = &o.arms {
            self.arms = ArmSet::new(arms.clone()).map_err(|e| CliError::config("arms", e))?;
        }
        if let Some(beta) = o.beta {
            self.beta = beta;
        }
        if let Some(b) = o.batch_size {
            self.batch_size = Some(b);
        }
        if let Some(every) = o.checkpoint_every {
            self.checkpoint_every = every;
        }
        self.log_wall_time |= o.log_wall_time;
        Ok(())
    }

    /// Builds the dataset, checking that every referenced file exists.
    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::Blobs(BlobsSpec {
                classes,
                per_class,
                dim,
                spread,
                seed,
            }) => make_blobs(*classes, *per_class, *dim, *spread, seed.unwrap_or(self.seed))
                .map_err(|e| CliError::config("dataset", e)),
            DatasetSource::Idx(IdxSpec {
                train_images,
                train_labels,
                test_images,
                test_labels,
                validation,
            }) => {
                for (key, p) in [
                    ("dataset.train_images", train_images),
                    ("dataset.train_labels", train_labels),
                    ("dataset.test_images", test_images),
                    ("dataset.test_labels", test_labels),
                ] {
                    if !p.is_file() {
                        return Err(CliError::config(key, format!("no such file {}", p.display())));
                    }
                }
                let images = read_images(train_images)?;
                let labels = read_labels(train_labels)?;
                let test = Split::new(read_images(test_images)?, read_labels(test_labels)?)?;
                let n = labels.len();
                if *validation == 0 || *validation >= n {
                    return Err(CliError::config(
                        "dataset.validation",
                        format!("must lie in [1, {n}) for {n} training examples"),
                    ));
                }
                let full = Split::new(images, labels)?;
                let cut = n - validation;
                let train_idx: Vec<usize> = (0..cut).collect();
                let val_idx: Vec<usize> = (cut..n).collect();
                let classes = full.labels.iter().chain(&test.labels).max().map_or(0, |m| m + 1);
                Ok(Dataset::new(
                    full.select(&train_idx),
                    full.select(&val_idx),
                    test,
                    classes,
                )?)
            }
        }
    }

    /// Fills every defaulted or `"auto"` field so the result re-parses to
    /// itself, and validates the whole configuration.
    pub fn resolve(mut self, dataset: &Dataset) -> Result<Self> {
        let m = &mut self.model;
        check_dim("model.input_dim", &mut m.input_dim, dataset.dim())?;
        check_dim("model.num_classes", &mut m.num_classes, dataset.num_classes)?;
        if m.hidden_dim.is_none() {
            m.hidden_dim = Some(match m.kind {
                ModelKind::Mlp => DEFAULT_HIDDEN,
                ModelKind::Logistic => 0,
            });
        }
        if let DatasetSource::Blobs(BlobsSpec { seed, .. }) = &mut self.dataset {
            seed.get_or_insert(self.seed);
        }
        if self.epochs == 0 {
            return Err(CliError::config("epochs", "must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(CliError::config("log_every", "must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(CliError::config("batch_size", "must be at least 1"));
        }
        self.optimizer
            .validate()
            .map_err(|e| CliError::config("optimizer", e))?;
        self.lr.validate().map_err(|e| CliError::config("lr", e))?;
        let run = self.run_config()?;
        run.model.validate().map_err(|e| CliError::config("model", e))?;
        self.beta = Beta::Fixed(run.resolved_beta().map_err(|e| CliError::config("beta", e))?);
        run.validate().map_err(|e| CliError::config("prob_floor", e))?;
        Ok(self)
    }

    /// Trainer view. Model sizes must already be filled by [`Self::resolve`].
    pub fn run_config(&self) -> Result<RunConfig> {
        let m = &self.model;
        let need = |v: Option<usize>, key: &str| v.ok_or_else(|| CliError::config(key, "unresolved"));
        Ok(RunConfig {
            arms: self.arms.clone(),
            beta: self.beta,
            epochs: self.epochs,
            optimizer: self.optimizer.clone(),
            lr: self.lr.clone(),
            model: ModelSpec {
                kind: m.kind,
                input_dim: need(m.input_dim, "model.input_dim")?,
                hidden_dim: need(m.hidden_dim, "model.hidden_dim")?,
                num_classes: need(m.num_classes, "model.num_classes")?,
                l2: m.l2,
            },
            seed: self.seed,
            prob_floor: self.prob_floor,
            reset_optimizer_on_switch: self.reset_optimizer_on_switch,
        })
    }

    /// Batch size for a fixed-batch run.
    pub fn mgd_batch_size(&self) -> Result<usize> {
        match (self.batch_size, self.arms.len()) {
            (Some(b), _) => Ok(b),
            (None, 1) => Ok(self.arms.smallest()),
            (None, _) => Err(CliError::config(
                "batch_size",
                "mgd needs --batch-size, a batch_size key, or a single-arm arms list",
            )),
        }
    }
}

fn check_dim(key: &str, slot: &mut Option<usize>, actual: usize) -> Result<()> {
    match *slot {
        Some(v) if v != actual => Err(CliError::config(
            key,
            format!("{v} does not match the dataset's {actual}"),
        )),
        _ => {
            *slot = Some(actual);
            Ok(())
        }
    }
}
