//! Epoch loop with bandit-selected batch sizes, the fixed-batch baseline and
//! a grid search over fixed batch sizes.
//!
//! One epoch of [`Run::step`]:
//!
//! 1. sample an arm `k` from the bandit (fixed arm for the baseline),
//! 2. resolve the learning rate once for the epoch from `(epoch, b_k)`,
//! 3. run `ceil(m / b_k)` optimizer steps over a fresh shuffle,
//! 4. measure the validation loss and compare it with the previous epoch's
//!    (the freshly initialized model's loss before the first epoch),
//! 5. feed the binary cost back to the bandit and emit an [`EpochRecord`].
//!
//! Model initialization, arm sampling and shuffling use independent streams
//! derived from the run seed, so a run with one arm follows exactly the same
//! trajectory as the fixed-batch baseline.

mod checkpoint;
pub mod grid;
pub mod log;

use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bandit::{default_beta, ArmSet, BanditState, Cost, DEFAULT_PROB_FLOOR};
use crate::data::{batches, BatchPlan, Dataset};
use crate::error::{invalid, Error, Result};
use crate::model::{self, ModelSpec};
use crate::optim::{LearningRateSchedule, ModelParams, OptimizerConfig, OptimizerState};
use crate::rng::{derive_seed, stream_rng, STREAM_BANDIT, STREAM_INIT};

pub use checkpoint::{BestModel, Checkpoint, RunMode};
pub use grid::{plan_grid, run_grid_search, GridArm, GridReport};
pub use log::{read_jsonl, record_line, write_summary_csv, JsonlWriter, SummaryRow};

/// Bandit step size: a number in `(0, 1)` or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Auto,
    Fixed(f64),
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Auto => s.serialize_str("auto"),
            Beta::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Beta::Fixed(v)),
            Raw::Text(t) if t == "auto" => Ok(Beta::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"auto\", got \"{t}\""
            ))),
        }
    }
}

impl std::str::FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Beta::Auto);
        }
        s.parse::<f64>()
            .map(Beta::Fixed)
            .map_err(|_| invalid(format!("beta must be a number or \"auto\", got \"{s}\"")))
    }
}

/// Step size used for `"auto"` with a single arm. Any value in `(0, 1)`
/// gives the same dynamics because one arm always renormalizes to 1.
pub const SINGLE_ARM_BETA: f64 = 0.5;

fn default_floor() -> f64 {
    DEFAULT_PROB_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub arms: ArmSet,
    pub beta: Beta,
    /// Horizon: number of epochs.
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    pub lr: LearningRateSchedule,
    pub model: ModelSpec,
    pub seed: u64,
    #[serde(default = "default_floor")]
    pub prob_floor: f64,
    /// Zero the optimizer slots whenever the batch size changes between epochs.
    #[serde(default)]
    pub reset_optimizer_on_switch: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(invalid("epochs must be at least 1"));
        }
        self.resolved_beta()?;
        self.optimizer.validate()?;
        self.lr.validate()?;
        self.model.validate()?;
        if !(self.prob_floor >= 0.0 && (self.arms.len() as f64) * self.prob_floor < 1.0) {
            return Err(invalid(format!(
                "prob_floor {} must be >= 0 with K * prob_floor < 1",
                self.prob_floor
            )));
        }
        Ok(())
    }

    /// `"auto"` becomes `sqrt(ln K / (K * epochs))`.
    pub fn resolved_beta(&self) -> Result<f64> {
        let beta = match self.beta {
            Beta::Fixed(b) => b,
            Beta::Auto if self.arms.len() == 1 => SINGLE_ARM_BETA,
            Beta::Auto => default_beta(self.arms.len(), self.epochs)?,
        };
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
        }
        Ok(beta)
    }

    /// Copy with `beta` replaced by its resolved value.
    pub fn resolved(&self) -> Result<Self> {
        Ok(Self {
            beta: Beta::Fixed(self.resolved_beta()?),
            ..self.clone()
        })
    }

    fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.dim() != self.model.input_dim {
            return Err(invalid(format!(
                "dataset has {} features but the model expects {}",
                dataset.dim(),
                self.model.input_dim
            )));
        }
        if dataset.num_classes != self.model.num_classes {
            return Err(invalid(format!(
                "dataset has {} classes but the model expects {}",
                dataset.num_classes, self.model.num_classes
            )));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub arm_index: usize,
    pub batch_size: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub cost: u8,
    /// Distribution the arm was drawn from, before this epoch's update.
    pub probs_snapshot: Vec<f64>,
    pub cumulative_iterations: u64,
    /// Seconds, monotonic clock. Informational only.
    pub wall_time: f64,
}

/// `0` iff the validation loss strictly decreased.
pub fn validation_cost(prev_loss: f64, new_loss: f64) -> Result<u8> {
    if !prev_loss.is_finite() || !new_loss.is_finite() {
        return Err(invalid(format!(
            "validation losses must be finite, got {prev_loss} and {new_loss}"
        )));
    }
    Ok(if new_loss < prev_loss { 0 } else { 1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub iterations: usize,
    /// Sample-weighted mean of the mini-batch objectives seen during the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
}

/// One pass over the training split with batch size `b` in the order given
/// by `plan`, then the unregularized validation loss of the result.
pub fn run_epoch(
    spec: &ModelSpec,
    params: &mut ModelParams,
    opt: &mut OptimizerState,
    b: usize,
    lr: f64,
    dataset: &Dataset,
    plan: &BatchPlan,
) -> Result<EpochStats> {
    if b == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    if plan.order.len() != dataset.m() {
        return Err(invalid(format!(
            "batch plan covers {} samples, training split has {}",
            plan.order.len(),
            dataset.m()
        )));
    }
    let mut iterations = 0;
    let mut weighted = 0.0;
    for batch in batches(&dataset.train, b, plan) {
        let (loss, grad) = model::loss_and_grad(spec, params, &batch)?;
        opt.step_in_place(&mut params.values, &grad, lr)?;
        weighted += loss * batch.len() as f64;
        iterations += 1;
    }
    Ok(EpochStats {
        iterations,
        train_loss: weighted / dataset.m() as f64,
        val_loss: model::cross_entropy(spec, params, &dataset.validation)?,
    })
}

/// What the cost hook sees at the end of an epoch.
#[derive(Debug, Clone, Copy)]
pub struct CostContext {
    pub epoch: usize,
    pub arm_index: usize,
    pub prev_val_loss: f64,
    pub val_loss: f64,
}

type CostHook<'a> = Box<dyn FnMut(&CostContext) -> u8 + Send + 'a>;

/// A run in progress. Drive it with [`Run::step`] until [`Run::is_done`].
pub struct Run<'a> {
    config: &'a RunConfig,
    dataset: &'a Dataset,
    state: Checkpoint,
    cost_hook: Option<CostHook<'a>>,
}

impl<'a> Run<'a> {
    /// Bandit-selected batch sizes over `config.arms`.
    pub fn rmgd(config: &'a RunConfig, dataset: &'a Dataset) -> Result<Self> {
        config.validate()?;
        let bandit = BanditState::init_uniform(
            config.arms.clone(),
            config.resolved_beta()?,
            derive_seed(config.seed, STREAM_BANDIT),
        )?
        .with_floor(config.prob_floor)?;
        Self::start(config, dataset, RunMode::Rmgd, Some(bandit))
    }

    /// Fixed batch size `batch_size`; the bandit is never consulted.
    pub fn mgd(config: &'a RunConfig, dataset: &'a Dataset, batch_size: usize) -> Result<Self> {
        config.validate()?;
        if batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        Self::start(config, dataset, RunMode::Mgd { batch_size }, None)
    }

    fn start(config: &'a RunConfig, dataset: &'a Dataset, mode: RunMode, bandit: Option<BanditState>) -> Result<Self> {
        config.check_dataset(dataset)?;
        let params = config.model.init_params(&mut stream_rng(config.seed, STREAM_INIT))?;
        let optimizer_state = config.optimizer.init_state(params.len())?;
        let initial_val_loss = model::cross_entropy(&config.model, &params, &dataset.validation)?;
        if !initial_val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                what: "validation",
                epoch: 0,
                value: initial_val_loss,
            });
        }
        let state = Checkpoint {
            mode,
            seed: config.seed,
            epoch: 0,
            params: params.clone(),
            optimizer_state,
            bandit_state: bandit,
            initial_val_loss,
            prev_val_loss: initial_val_loss,
            cumulative_iterations: 0,
            last_arm: None,
            best: BestModel {
                epoch: None,
                val_loss: f64::INFINITY,
                params,
            },
        };
        Ok(Self {
            config,
            dataset,
            state,
            cost_hook: None,
        })
    }

    /// Continues a run from a checkpoint taken after some epoch.
    pub fn resume(config: &'a RunConfig, dataset: &'a Dataset, checkpoint: Checkpoint) -> Result<Self> {
        config.validate()?;
        config.check_dataset(dataset)?;
        checkpoint.check_against(config)?;
        Ok(Self {
            config,
            dataset,
            state: checkpoint,
            cost_hook: None,
        })
    }

    /// Replaces the validation-loss comparison with `hook`. For rigged
    /// experiments and tests; the validation loss is still computed and logged.
    pub fn with_cost_hook(mut self, hook: impl FnMut(&CostContext) -> u8 + Send + 'a) -> Self {
        self.cost_hook = Some(Box::new(hook));
        self
    }

    pub fn is_done(&self) -> bool {
        self.state.epoch >= self.config.epochs
    }

    pub fn checkpoint(&self) -> &Checkpoint {
        &self.state
    }

    pub fn params(&self) -> &ModelParams {
        &self.state.params
    }

    pub fn bandit(&self) -> Option<&BanditState> {
        self.state.bandit_state.as_ref()
    }

    pub fn step(&mut self) -> Result<EpochRecord> {
        if self.is_done() {
            return Err(invalid(format!("run already finished {} epochs", self.config.epochs)));
        }
        let started = Instant::now();
        let epoch = self.state.epoch;
        let (arm_index, batch_size, probs_snapshot) = match (&self.state.mode, &mut self.state.bandit_state) {
            (RunMode::Mgd { batch_size }, _) => (0, *batch_size, vec![1.0]),
            (RunMode::Rmgd, Some(bandit)) => {
                let snapshot = bandit.probs().to_vec();
                let arm = bandit.sample_arm();
                (arm, bandit.arms().size(arm), snapshot)
            }
            (RunMode::Rmgd, None) => return Err(invalid("checkpoint lacks a bandit state")),
        };

        if self.config.reset_optimizer_on_switch && self.state.last_arm.is_some_and(|last| last != arm_index) {
            self.state.optimizer_state.reset();
        }

        let learning_rate = self.config.lr.effective_lr(epoch, batch_size);
        let plan = BatchPlan::for_epoch(self.dataset.m(), self.config.seed, epoch);
        let stats = run_epoch(
            &self.config.model,
            &mut self.state.params,
            &mut self.state.optimizer_state,
            batch_size,
            learning_rate,
            self.dataset,
            &plan,
        )?;
        if !stats.val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                what: "validation",
                epoch,
                value: stats.val_loss,
            });
        }
        if !stats.train_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                what: "training",
                epoch,
                value: stats.train_loss,
            });
        }

        let prev = self.state.prev_val_loss;
        let cost = match self.cost_hook.as_mut() {
            Some(hook) => hook(&CostContext {
                epoch,
                arm_index,
                prev_val_loss: prev,
                val_loss: stats.val_loss,
            })
            .min(1),
            None => validation_cost(prev, stats.val_loss)?,
        };
        if let Some(bandit) = self.state.bandit_state.as_mut() {
            if self.state.mode == RunMode::Rmgd {
                bandit.update(Cost::new(cost, arm_index)?)?;
            }
        }

        let val_accuracy = model::accuracy(&self.config.model, &self.state.params, &self.dataset.validation)?;
        if stats.val_loss < self.state.best.val_loss {
            self.state.best = BestModel {
                epoch: Some(epoch),
                val_loss: stats.val_loss,
                params: self.state.params.clone(),
            };
        }
        self.state.prev_val_loss = stats.val_loss;
        self.state.cumulative_iterations += stats.iterations as u64;
        self.state.last_arm = Some(arm_index);
        self.state.epoch += 1;

        Ok(EpochRecord {
            epoch,
            arm_index,
            batch_size,
            iterations: stats.iterations,
            learning_rate,
            train_loss: stats.train_loss,
            val_loss: stats.val_loss,
            val_accuracy,
            cost,
            probs_snapshot,
            cumulative_iterations: self.state.cumulative_iterations,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }

    /// Runs the remaining epochs, handing each record to `on_record` as soon
    /// as it exists.
    pub fn run_to_end(mut self, mut on_record: impl FnMut(&EpochRecord) -> Result<()>) -> Result<RunOutcome> {
        let mut records = Vec::with_capacity(self.config.epochs - self.state.epoch.min(self.config.epochs));
        while !self.is_done() {
            let record = self.step()?;
            on_record(&record)?;
            records.push(record);
        }
        self.finish(records)
    }

    /// Evaluates the final and best models on the test split. `records` is
    /// the run's log so far; wall time and final accuracy are read from it.
    pub fn finish(self, records: Vec<EpochRecord>) -> Result<RunOutcome> {
        let spec = &self.config.model;
        let test = &self.dataset.test;
        let (test_accuracy, best_val_test_accuracy) = if test.is_empty() {
            (None, None)
        } else {
            (
                Some(model::accuracy(spec, &self.state.params, test)?),
                Some(model::accuracy(spec, &self.state.best.params, test)?),
            )
        };
        Ok(RunOutcome {
            summary: RunSummary {
                iterations: self.state.cumulative_iterations,
                wall_time_s: records.iter().map(|r| r.wall_time).sum(),
                final_val_loss: self.state.prev_val_loss,
                final_val_accuracy: records.last().map(|r| r.val_accuracy),
                test_accuracy,
                best_val_epoch: self.state.best.epoch,
                best_val_test_accuracy,
            },
            records,
            checkpoint: self.state,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub iterations: u64,
    pub wall_time_s: f64,
    pub final_val_loss: f64,
    pub final_val_accuracy: Option<f64>,
    /// Test accuracy of the final-epoch model.
    pub test_accuracy: Option<f64>,
    pub best_val_epoch: Option<usize>,
    /// Test accuracy of the lowest-validation-loss model.
    pub best_val_test_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<EpochRecord>,
    pub checkpoint: Checkpoint,
    pub summary: RunSummary,
}

/// Full bandit-driven run.
pub fn run_rmgd(
    config: &RunConfig,
    dataset: &Dataset,
    on_record: impl FnMut(&EpochRecord) -> Result<()>,
) -> Result<RunOutcome> {
    Run::rmgd(config, dataset)?.run_to_end(on_record)
}

/// Full fixed-batch run with batch size `batch_size`.
pub fn run_mgd(
    config: &RunConfig,
    dataset: &Dataset,
    batch_size: usize,
    on_record: impl FnMut(&EpochRecord) -> Result<()>,
) -> Result<RunOutcome> {
    Run::mgd(config, dataset, batch_size)?.run_to_end(on_record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_blobs, Matrix, Split};

    fn config(arms: Vec<usize>, epochs: usize) -> RunConfig {
        RunConfig {
            arms: ArmSet::new(arms).unwrap(),
            beta: Beta::Auto,
            epochs,
            optimizer: OptimizerConfig::sgd(),
            lr: LearningRateSchedule::constant(0.1),
            model: ModelSpec::logistic(4, 3),
            seed: 5,
            prob_floor: DEFAULT_PROB_FLOOR,
            reset_optimizer_on_switch: false,
        }
    }

    fn blobs() -> Dataset {
        make_blobs(3, 30, 4, 1.0, 2).unwrap()
    }

    fn ok(_: &EpochRecord) -> Result<()> {
        Ok(())
    }

    #[test]
    fn validation_cost_examples() {
        assert_eq!(validation_cost(1.0, 0.9).unwrap(), 0);
        assert_eq!(validation_cost(1.0, 1.0).unwrap(), 1);
        assert_eq!(validation_cost(0.5, 0.7).unwrap(), 1);
        assert!(validation_cost(f64::NAN, 0.7).is_err());
        assert!(validation_cost(0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn beta_parsing() {
        let c: RunConfig = serde_json::from_value(serde_json::json!({
            "arms": [8, 16], "beta": "auto", "epochs": 4,
            "optimizer": {"kind": "sgd"}, "lr": {"base": 0.1},
            "model": {"kind": "logistic", "input_dim": 4, "num_classes": 3},
            "seed": 1
        }))
        .unwrap();
        assert_eq!(c.beta, Beta::Auto);
        assert!((c.resolved_beta().unwrap() - (2f64.ln() / 8.0).sqrt()).abs() < 1e-15);
        assert_eq!("0.25".parse::<Beta>().unwrap(), Beta::Fixed(0.25));
        assert!("fast".parse::<Beta>().is_err());
        let mut bad = c.clone();
        bad.beta = Beta::Fixed(1.5);
        assert!(bad.validate().is_err());
        assert_eq!(config(vec![8], 3).resolved_beta().unwrap(), SINGLE_ARM_BETA);
    }

    #[test]
    fn full_batch_epoch_is_one_gradient_step() {
        let data = blobs();
        let spec = ModelSpec::logistic(4, 3);
        let init = spec.init_params(&mut stream_rng(1, 1)).unwrap();
        let mut params = init.clone();
        let mut opt = OptimizerConfig::sgd().init_state(params.len()).unwrap();
        let plan = BatchPlan::for_epoch(data.m(), 0, 0);
        let stats = run_epoch(&spec, &mut params, &mut opt, data.m(), 0.1, &data, &plan).unwrap();
        assert_eq!(stats.iterations, 1);
        let (_, g) = model::loss_and_grad(&spec, &init, &data.train).unwrap();
        for ((w, w0), gi) in params.values.iter().zip(&init.values).zip(&g) {
            assert!((w - (w0 - 0.1 * gi)).abs() < 1e-14);
        }
    }

    #[test]
    fn sgd_epoch_matches_hand_unrolled_steps() {
        let features = Matrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, -1.0, 1.0]).unwrap();
        let train = Split::new(features, vec![0, 1, 1]).unwrap();
        let val = train.clone();
        let data = Dataset::new(train.clone(), val, train.clone(), 2).unwrap();
        let spec = ModelSpec::logistic(2, 2);
        let init = spec.init_params(&mut stream_rng(9, 1)).unwrap();

        let mut params = init.clone();
        let mut opt = OptimizerConfig::sgd().init_state(params.len()).unwrap();
        let plan = BatchPlan::for_epoch(3, 4, 0);
        run_epoch(&spec, &mut params, &mut opt, 1, 0.5, &data, &plan).unwrap();

        let mut manual = init;
        for &i in &plan.order {
            let (_, g) = model::loss_and_grad(&spec, &manual, &train.select(&[i])).unwrap();
            for (w, gi) in manual.values.iter_mut().zip(&g) {
                *w -= 0.5 * gi;
            }
        }
        assert_eq!(params.values, manual.values);
    }

    #[test]
    fn epoch_count_and_cost_consistency() {
        let data = blobs();
        let cfg = config(vec![4, 8, 16], 12);
        let out = run_rmgd(&cfg, &data, ok).unwrap();
        assert_eq!(out.records.len(), 12);
        let mut prev = out.checkpoint.initial_val_loss;
        let mut total = 0;
        for r in &out.records {
            assert_eq!(r.cost, validation_cost(prev, r.val_loss).unwrap());
            assert_eq!(r.batch_size, cfg.arms.size(r.arm_index));
            assert_eq!(r.iterations, data.m().div_ceil(r.batch_size));
            total += r.iterations as u64;
            assert_eq!(r.cumulative_iterations, total);
            prev = r.val_loss;
        }
    }

    #[test]
    fn zero_costs_keep_prior() {
        let data = blobs();
        let cfg = config(vec![4, 8, 16], 10);
        let out = Run::rmgd(&cfg, &data)
            .unwrap()
            .with_cost_hook(|_| 0)
            .run_to_end(ok)
            .unwrap();
        let bandit = out.checkpoint.bandit_state.unwrap();
        assert_eq!(bandit.probs(), &[1.0 / 3.0; 3]);
        assert!(out.records.iter().all(|r| r.probs_snapshot == vec![1.0 / 3.0; 3]));
    }

    #[test]
    fn mgd_iteration_total() {
        let data = blobs();
        let cfg = config(vec![8], 5);
        let out = run_mgd(&cfg, &data, 7, ok).unwrap();
        assert_eq!(out.summary.iterations, 5 * data.m().div_ceil(7) as u64);
        assert!(out.checkpoint.bandit_state.is_none());
    }

    #[test]
    fn reset_on_switch_clears_slots() {
        let data = blobs();
        let mut cfg = config(vec![4, 64], 6);
        cfg.optimizer = OptimizerConfig::momentum(0.9);
        cfg.reset_optimizer_on_switch = true;
        let mut run = Run::rmgd(&cfg, &data).unwrap();
        let mut last = None;
        while !run.is_done() {
            let r = run.step().unwrap();
            let steps = run.checkpoint().optimizer_state.step_count;
            if last.is_some_and(|l| l != r.arm_index) {
                assert_eq!(steps, r.iterations as u64);
            }
            last = Some(r.arm_index);
        }
    }

    #[test]
    fn nan_loss_aborts() {
        let data = blobs();
        let mut cfg = config(vec![4], 3);
        cfg.lr = LearningRateSchedule::constant(1e308);
        let mut seen = 0;
        let err = run_rmgd(&cfg, &data, |_| {
            seen += 1;
            Ok(())
        })
        .unwrap_err();
        assert!(matches!(
            err,
            Error::NonFiniteParameter { .. } | Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. }
        ));
    }

    #[test]
    fn dataset_mismatch_rejected() {
        let data = blobs();
        let mut cfg = config(vec![4], 3);
        cfg.model = ModelSpec::logistic(5, 3);
        assert!(Run::rmgd(&cfg, &data).is_err());
    }
}
