//! Grid search: one fixed-batch run per arm.

use rayon::prelude::*;

use super::{run_mgd, RunConfig, RunOutcome, SummaryRow};
use crate::bandit::ArmSet;
use crate::data::{iterations_per_epoch, Dataset};
use crate::error::{invalid, Result};

/// Iteration count per arm for `epochs` passes over `m` samples, without training.
pub fn plan_grid(m: usize, arms: &ArmSet, epochs: usize) -> Vec<(usize, u64)> {
    arms.sizes()
        .iter()
        .map(|&b| (b, (epochs * iterations_per_epoch(m, b)) as u64))
        .collect()
}

#[derive(Debug)]
pub struct GridArm {
    pub batch_size: usize,
    pub outcome: std::result::Result<RunOutcome, String>,
}

#[derive(Debug)]
pub struct GridReport {
    /// In arm order, regardless of completion order.
    pub arms: Vec<GridArm>,
}

impl GridReport {
    pub fn total_iterations(&self) -> u64 {
        self.arms
            .iter()
            .filter_map(|a| a.outcome.as_ref().ok())
            .map(|o| o.summary.iterations)
            .sum()
    }

    pub fn total_wall_time(&self) -> f64 {
        self.arms
            .iter()
            .filter_map(|a| a.outcome.as_ref().ok())
            .map(|o| o.summary.wall_time_s)
            .sum()
    }

    /// Index of the arm with the highest final test accuracy; ties go to the
    /// smaller batch size. Failed arms are skipped.
    pub fn best_arm(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, arm) in self.arms.iter().enumerate() {
            let Some(acc) = arm.outcome.as_ref().ok().and_then(|o| o.summary.test_accuracy) else {
                continue;
            };
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((i, acc));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Per-arm rows followed by a total row.
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let mut rows: Vec<SummaryRow> = self
            .arms
            .iter()
            .map(|arm| match &arm.outcome {
                Ok(o) => SummaryRow {
                    algorithm: "MGD".into(),
                    batch_size: Some(arm.batch_size),
                    iterations: o.summary.iterations,
                    wall_time_s: o.summary.wall_time_s,
                    final_val_loss: Some(o.summary.final_val_loss),
                    test_accuracy: o.summary.test_accuracy,
                    best_val_test_accuracy: o.summary.best_val_test_accuracy,
                    error: None,
                },
                Err(e) => SummaryRow {
                    algorithm: "MGD".into(),
                    batch_size: Some(arm.batch_size),
                    iterations: 0,
                    wall_time_s: 0.0,
                    final_val_loss: None,
                    test_accuracy: None,
                    best_val_test_accuracy: None,
                    error: Some(e.clone()),
                },
            })
            .collect();
        let best = self.best_arm().and_then(|i| self.arms[i].outcome.as_ref().ok());
        rows.push(SummaryRow {
            algorithm: "MGD (total)".into(),
            batch_size: self.best_arm().map(|i| self.arms[i].batch_size),
            iterations: self.total_iterations(),
            wall_time_s: self.total_wall_time(),
            final_val_loss: best.map(|o| o.summary.final_val_loss),
            test_accuracy: best.and_then(|o| o.summary.test_accuracy),
            best_val_test_accuracy: best.and_then(|o| o.summary.best_val_test_accuracy),
            error: None,
        });
        rows
    }
}

/// Trains one fixed-batch run per arm of `arms`, using `parallel` worker
/// threads. A failing arm is recorded and the others still run.
pub fn run_grid_search(config: &RunConfig, dataset: &Dataset, arms: &ArmSet, parallel: usize) -> Result<GridReport> {
    if parallel == 0 {
        return Err(invalid("parallel must be at least 1"));
    }
    config.validate()?;
    let run_arm = |&b: &usize| GridArm {
        batch_size: b,
        outcome: run_mgd(config, dataset, b, |_| Ok(())).map_err(|e| e.to_string()),
    };
    let arms = if parallel == 1 {
        arms.sizes().iter().map(run_arm).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(|| arms.sizes().par_iter().map(run_arm).collect())
    };
    Ok(GridReport { arms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;
    use crate::model::ModelSpec;
    use crate::optim::{LearningRateSchedule, OptimizerConfig};
    use crate::trainer::Beta;

    #[test]
    fn mnist_shaped_grid_counts() {
        let arms = ArmSet::new(vec![16, 32, 64, 128, 256, 512]).unwrap();
        let plan = plan_grid(55_000, &arms, 100);
        let counts: Vec<u64> = plan.iter().map(|p| p.1).collect();
        assert_eq!(counts, vec![343_800, 171_900, 86_000, 43_000, 21_500, 10_800]);
        assert_eq!(counts.iter().sum::<u64>(), 677_000);
    }

    fn cfg() -> RunConfig {
        RunConfig {
            arms: ArmSet::new(vec![4, 8, 16]).unwrap(),
            beta: Beta::Auto,
            epochs: 3,
            optimizer: OptimizerConfig::adam(),
            lr: LearningRateSchedule::constant(0.01),
            model: ModelSpec::logistic(3, 2),
            seed: 1,
            prob_floor: 1e-6,
            reset_optimizer_on_switch: false,
        }
    }

    #[test]
    fn grid_matches_plan_and_parallel_matches_serial() {
        let data = make_blobs(2, 20, 3, 1.0, 0).unwrap();
        let c = cfg();
        let serial = run_grid_search(&c, &data, &c.arms, 1).unwrap();
        let parallel = run_grid_search(&c, &data, &c.arms, 3).unwrap();
        let plan: u64 = plan_grid(data.m(), &c.arms, 3).iter().map(|p| p.1).sum();
        assert_eq!(serial.total_iterations(), plan);
        for (a, b) in serial.arms.iter().zip(&parallel.arms) {
            let (a, b) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
            assert_eq!(a.checkpoint.params, b.checkpoint.params);
        }
        let best = serial.best_arm().unwrap();
        let best_acc = serial.arms[best]
            .outcome
            .as_ref()
            .unwrap()
            .summary
            .test_accuracy
            .unwrap();
        for arm in &serial.arms {
            assert!(best_acc >= arm.outcome.as_ref().unwrap().summary.test_accuracy.unwrap());
        }
        let rows = serial.summary_rows();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].iterations, plan);
    }

    #[test]
    fn single_arm_grid_equals_mgd() {
        let data = make_blobs(2, 20, 3, 1.0, 0).unwrap();
        let c = cfg();
        let arms = ArmSet::single(8).unwrap();
        let grid = run_grid_search(&c, &data, &arms, 1).unwrap();
        let direct = run_mgd(&c, &data, 8, |_| Ok(())).unwrap();
        let g = grid.arms[0].outcome.as_ref().unwrap();
        assert_eq!(g.checkpoint, direct.checkpoint);
        assert_eq!(g.records.len(), direct.records.len());
    }
}
