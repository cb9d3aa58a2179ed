//! Bandit-only regret simulator.
//!
//! A [`CostEnvironment`] fixes a `T x K` matrix of binary costs up front
//! (oblivious adversary). The policy only sees the cost of the arm it
//! played, but the whole matrix is kept for the regret accounting:
//!
//! ```text
//! regret = sum_t y_t[k_t] - min_i sum_t y_t[i]
//! bound  = 2 sqrt(K ln K T)
//! ```
//!
//! Expectation over the arm draws is estimated by averaging repeats.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{ArmSet, BanditState, Cost};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, stream_rng, STREAM_BANDIT, STREAM_ENV};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostEnvironment {
    /// Independent Bernoulli costs per arm, redrawn every epoch.
    Stochastic { means: Vec<f64>, horizon: usize },
    /// Explicit cost matrix, one row per epoch.
    Adversarial { costs: Vec<Vec<u8>> },
}

impl CostEnvironment {
    pub fn stochastic(means: Vec<f64>, horizon: usize) -> Result<Self> {
        let env = Self::Stochastic { means, horizon };
        env.validate()?;
        Ok(env)
    }

    pub fn adversarial(costs: Vec<Vec<u8>>) -> Result<Self> {
        let env = Self::Adversarial { costs };
        env.validate()?;
        Ok(env)
    }

    /// Arm `winner` always costs 0, every other arm always costs 1.
    pub fn rigged(k: usize, winner: usize, horizon: usize) -> Result<Self> {
        if winner >= k {
            return Err(invalid(format!("winning arm {winner} outside [0, {k})")));
        }
        let row: Vec<u8> = (0..k).map(|i| u8::from(i != winner)).collect();
        Self::adversarial(vec![row; horizon])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Stochastic { means, horizon } => {
                if means.is_empty() {
                    return Err(invalid("environment needs at least one arm"));
                }
                if *horizon == 0 {
                    return Err(invalid("horizon must be at least 1"));
                }
                if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                    return Err(invalid(format!("Bernoulli mean {m} outside [0, 1]")));
                }
            }
            Self::Adversarial { costs } => {
                let k = costs.first().map_or(0, Vec::len);
                if costs.is_empty() || k == 0 {
                    return Err(invalid("cost matrix must be non-empty"));
                }
                if costs.iter().any(|row| row.len() != k) {
                    return Err(invalid("cost matrix rows differ in length"));
                }
                if costs.iter().flatten().any(|&y| y > 1) {
                    return Err(invalid("cost matrix entries must be 0 or 1"));
                }
            }
        }
        Ok(())
    }

    pub fn arms(&self) -> usize {
        match self {
            Self::Stochastic { means, .. } => means.len(),
            Self::Adversarial { costs } => costs[0].len(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Self::Stochastic { horizon, .. } => *horizon,
            Self::Adversarial { costs } => costs.len(),
        }
    }

    /// The cost matrix for one repeat. Stochastic environments draw it from
    /// `seed`; adversarial ones return their fixed matrix.
    pub fn realize(&self, seed: u64) -> Vec<Vec<u8>> {
        match self {
            Self::Stochastic { means, horizon } => {
                let mut rng = stream_rng(seed, STREAM_ENV);
                (0..*horizon)
                    .map(|_| means.iter().map(|&p| u8::from(rng.random::<f64>() < p)).collect())
                    .collect()
            }
            Self::Adversarial { costs } => costs.clone(),
        }
    }
}

/// `<probs, costs>`: expected cost of one draw from `probs`.
pub fn expected_selecting_loss(probs: &[f64], costs: &[u8]) -> f64 {
    probs.iter().zip(costs).map(|(&p, &y)| p * f64::from(y)).sum()
}

/// Arm with the smallest column sum, lowest index on ties.
pub fn best_fixed_arm(costs: &[Vec<u8>]) -> (usize, u64) {
    let k = costs.first().map_or(0, Vec::len);
    let mut sums = vec![0u64; k];
    for row in costs {
        for (s, &y) in sums.iter_mut().zip(row) {
            *s += u64::from(y);
        }
    }
    sums.iter()
        .enumerate()
        .fold((0, u64::MAX), |best, (i, &s)| if s < best.1 { (i, s) } else { best })
}

/// `2 sqrt(K ln K T)`.
pub fn regret_bound(k: usize, horizon: usize) -> f64 {
    let k = k as f64;
    2.0 * (k * k.ln() * horizon as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub repeat: usize,
    pub cumulative_cost: f64,
    pub best_arm: usize,
    pub best_fixed_cost: f64,
    pub regret: f64,
    /// `sum_t <pi_t, y_t> - best_fixed_cost`: regret with the arm draw
    /// integrated out at every epoch.
    pub expected_regret: f64,
    pub bound: f64,
    /// `f_t(pi_t) = <pi_t, y_t>` for every epoch.
    pub expected_loss_trace: Vec<f64>,
    /// First epoch (1-based) after which the best arm's probability exceeded
    /// `0.9`, if it ever did.
    pub best_arm_above_090: Option<usize>,
    pub selections: Vec<usize>,
    pub final_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretSummary {
    pub k: usize,
    pub horizon: usize,
    pub beta: f64,
    pub bound: f64,
    pub mean_regret: f64,
    pub mean_expected_regret: f64,
    pub reports: Vec<RegretReport>,
}

/// Simulates one repeat of the bandit against `costs`.
pub fn simulate(costs: &[Vec<u8>], beta: f64, seed: u64, floor: f64, repeat: usize) -> Result<RegretReport> {
    let k = costs.first().map_or(0, Vec::len);
    let arms = ArmSet::new((1..=k).collect())?;
    let mut bandit = BanditState::init_uniform(arms, beta, seed)?.with_floor(floor)?;
    let (best_arm, best_sum) = best_fixed_arm(costs);

    let mut cumulative = 0u64;
    let mut trace = Vec::with_capacity(costs.len());
    let mut selections = Vec::with_capacity(costs.len());
    let mut above = None;
    for (t, row) in costs.iter().enumerate() {
        trace.push(expected_selecting_loss(bandit.probs(), row));
        let arm = bandit.sample_arm();
        selections.push(arm);
        let cost = Cost::new(row[arm], arm)?;
        cumulative += u64::from(row[arm]);
        let z = bandit.estimated_gradient(cost);
        assert!(
            z.iter().all(|&zi| bandit.beta() * zi >= -1.0),
            "step-size condition beta * z >= -1 violated at epoch {t}"
        );
        bandit.update(cost)?;
        if above.is_none() && bandit.probs()[best_arm] > 0.9 {
            above = Some(t + 1);
        }
    }

    let best = best_sum as f64;
    Ok(RegretReport {
        repeat,
        cumulative_cost: cumulative as f64,
        best_arm,
        best_fixed_cost: best,
        regret: cumulative as f64 - best,
        expected_regret: trace.iter().sum::<f64>() - best,
        bound: regret_bound(k, costs.len()),
        expected_loss_trace: trace,
        best_arm_above_090: above,
        selections,
        final_probs: bandit.probs().to_vec(),
    })
}

/// Runs `repeats` independent simulations. Repeat `r` uses the environment
/// seed and bandit seed derived from `(seed, r)`; repeats run on the rayon
/// pool and come back in repeat order.
pub fn run_bandit(env: &CostEnvironment, beta: f64, seed: u64, repeats: usize) -> Result<RegretSummary> {
    run_bandit_with_floor(env, beta, seed, repeats, crate::bandit::DEFAULT_PROB_FLOOR)
}

pub fn run_bandit_with_floor(
    env: &CostEnvironment,
    beta: f64,
    seed: u64,
    repeats: usize,
    floor: f64,
) -> Result<RegretSummary> {
    env.validate()?;
    if repeats == 0 {
        return Err(invalid("repeats must be at least 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    let reports = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let repeat_seed = derive_seed(seed, r as u64);
            let costs = env.realize(repeat_seed);
            simulate(&costs, beta, derive_seed(repeat_seed, STREAM_BANDIT), floor, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = reports.len() as f64;
    Ok(RegretSummary {
        k: env.arms(),
        horizon: env.horizon(),
        beta,
        bound: regret_bound(env.arms(), env.horizon()),
        mean_regret: reports.iter().map(|r| r.regret).sum::<f64>() / n,
        mean_expected_regret: reports.iter().map(|r| r.expected_regret).sum::<f64>() / n,
        reports,
    })
}

/// CSV with one row per repeat and a `mean` row, for every summary.
pub fn write_regret_csv<W: std::io::Write>(summaries: &[RegretSummary], mut out: W) -> Result<()> {
    writeln!(
        out,
        "k,horizon,beta,repeat,cumulative_cost,best_fixed_cost,regret,expected_regret,bound"
    )?;
    for s in summaries {
        for r in &s.reports {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.k,
                s.horizon,
                s.beta,
                r.repeat,
                r.cumulative_cost,
                r.best_fixed_cost,
                r.regret,
                r.expected_regret,
                s.bound
            )?;
        }
        writeln!(
            out,
            "{},{},{},mean,,,{},{},{}",
            s.k, s.horizon, s.beta, s.mean_regret, s.mean_expected_regret, s.bound
        )?;
    }
    Ok(())
}
