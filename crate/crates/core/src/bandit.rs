//! Batch-size selector.
//!
//! [`BanditState`] holds a probability vector over the arms of an [`ArmSet`].
//! Each epoch one arm is sampled by inverse CDF, the trainer reports a binary
//! [`Cost`], and [`BanditState::update`] applies the normalized exponentiated
//! gradient step to the sampled arm only:
//!
//! ```text
//! p~[k] = p[k] * exp(-beta * y / p[k])      (k = sampled arm)
//! p~[i] = p[i]                               (i != k)
//! p'    = p~ / sum(p~)
//! ```
//!
//! followed by an optional probability floor (default `1e-6`) so that the
//! importance weight `1 / p` stays bounded and no arm is permanently lost.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::unit_f64;

pub const DEFAULT_PROB_FLOOR: f64 = 1e-6;

/// Ordered, strictly increasing set of candidate batch sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ArmSet {
    sizes: Vec<usize>,
}

impl ArmSet {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(invalid("arm set must contain at least one batch size"));
        }
        if let Some(pos) = sizes.iter().position(|&b| b == 0) {
            return Err(invalid(format!("batch size at position {pos} is zero")));
        }
        if let Some(w) = sizes.windows(2).position(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "batch sizes must be strictly increasing: {} then {} at position {}",
                sizes[w],
                sizes[w + 1],
                w + 1
            )));
        }
        Ok(Self { sizes })
    }

    pub fn single(size: usize) -> Result<Self> {
        Self::new(vec![size])
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, arm: usize) -> usize {
        self.sizes[arm]
    }

    pub fn index_of(&self, size: usize) -> Option<usize> {
        self.sizes.binary_search(&size).ok()
    }

    pub fn smallest(&self) -> usize {
        self.sizes[0]
    }

    pub fn largest(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }
}

impl TryFrom<Vec<usize>> for ArmSet {
    type Error = crate::Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<ArmSet> for Vec<usize> {
    fn from(arms: ArmSet) -> Self {
        arms.sizes
    }
}

/// Binary feedback for one epoch: 0 when the validation loss went down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    value: u8,
    arm_index: usize,
}

impl Cost {
    pub fn new(value: u8, arm_index: usize) -> Result<Self> {
        if value > 1 {
            return Err(invalid(format!("cost must be 0 or 1, got {value}")));
        }
        Ok(Self { value, arm_index })
    }

    pub fn success(arm_index: usize) -> Self {
        Self { value: 0, arm_index }
    }

    pub fn failure(arm_index: usize) -> Self {
        Self { value: 1, arm_index }
    }

    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn arm_index(&self) -> usize {
        self.arm_index
    }
}

/// `sqrt(ln K / (K * horizon))`, the step size that balances the two terms of
/// the regret bound.
pub fn default_beta(k: usize, horizon: usize) -> Result<f64> {
    if k < 2 {
        return Err(invalid(format!(
            "default beta needs at least 2 arms (ln K > 0), got {k}"
        )));
    }
    if horizon < 1 {
        return Err(invalid("default beta needs a horizon of at least 1 epoch"));
    }
    let k = k as f64;
    Ok((k.ln() / (k * horizon as f64)).sqrt())
}

/// Probability distribution over arms, step size and sampling cursor.
///
/// Serializes as `{sizes, probs, beta, epoch, seed, draw_count, floor}`. The
/// generator is ChaCha8 keyed by `seed`; each draw consumes one 64-bit word,
/// so restoring `draw_count` restores the exact sampling position.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "BanditSnapshot", into = "BanditSnapshot")]
pub struct BanditState {
    arms: ArmSet,
    probs: Vec<f64>,
    beta: f64,
    epoch: u64,
    seed: u64,
    draw_count: u64,
    floor: f64,
    rng: ChaCha8Rng,
}

impl BanditState {
    /// Uniform prior over `arms` with the default probability floor.
    pub fn init_uniform(arms: ArmSet, beta: f64, seed: u64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
        }
        if arms.is_empty() {
            return Err(invalid("arm set is empty"));
        }
        let k = arms.len();
        let floor = if (k as f64) * DEFAULT_PROB_FLOOR < 1.0 {
            DEFAULT_PROB_FLOOR
        } else {
            0.0
        };
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
            arms,
            beta,
            epoch: 0,
            seed,
            draw_count: 0,
            floor,
            rng: cursor_rng(seed, 0),
        })
    }

    /// Replaces the probability floor. `0.0` disables flooring.
    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        check_floor(floor, self.arms.len())?;
        self.floor = floor;
        Ok(self)
    }

    /// Overwrites the distribution. Used by tests and by callers seeding a
    /// non-uniform prior.
    pub fn with_probs(mut self, probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, self.arms.len())?;
        self.probs = probs;
        Ok(self)
    }

    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Draws an arm index with probability `probs[i]`.
    ///
    /// One uniform double from the top 53 bits of the next 64-bit word is
    /// compared against the running sum of `probs` in index order.
    pub fn sample_arm(&mut self) -> usize {
        let u = unit_f64(self.rng.next_u64());
        self.draw_count += 1;
        inverse_cdf(&self.probs, u)
    }

    /// Applies the cost of the arm that was played this epoch.
    ///
    /// A zero cost leaves `probs` untouched bit for bit; only the epoch
    /// counter advances.
    pub fn update(&mut self, cost: Cost) -> Result<()> {
        let k = cost.arm_index();
        if k >= self.probs.len() {
            return Err(invalid(format!(
                "cost refers to arm {k} but only {} arms exist",
                self.probs.len()
            )));
        }
        if cost.value() == 1 {
            let p = self.probs[k];
            self.probs[k] = p * (-self.beta / p).exp();
            let total: f64 = self.probs.iter().sum();
            for p in &mut self.probs {
                *p /= total;
            }
            apply_floor(&mut self.probs, self.floor);
        }
        self.epoch += 1;
        Ok(())
    }

    /// Importance-weighted cost estimate: `y / p[k]` at the played arm, zero
    /// elsewhere. Its expectation over the arm draw is the full cost vector.
    pub fn estimated_gradient(&self, cost: Cost) -> Vec<f64> {
        let mut z = vec![0.0; self.probs.len()];
        let k = cost.arm_index();
        z[k] = f64::from(cost.value()) / self.probs[k];
        z
    }
}

/// Compares the observable state; the generator is implied by `seed` and
/// `draw_count`.
impl PartialEq for BanditState {
    fn eq(&self, other: &Self) -> bool {
        self.arms() == other.arms()
            && self.probs() == other.probs()
            && self.beta() == other.beta()
            && self.epoch() == other.epoch()
            && self.seed() == other.seed()
            && self.draw_count() == other.draw_count()
            && self.floor() == other.floor()
    }
}

fn cursor_rng(seed: u64, draws: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(draws) * 2);
    rng
}

pub(crate) fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left the total just under 1 and u landed above it.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Raises every entry to at least `floor` and rescales the unpinned entries so
/// the vector still sums to one. No-op when nothing is below the floor.
pub(crate) fn apply_floor(probs: &mut [f64], floor: f64) {
    if floor <= 0.0 || probs.iter().all(|&p| p >= floor) {
        return;
    }
    loop {
        let pinned = probs.iter().filter(|&&p| p <= floor).count();
        let free: f64 = probs.iter().filter(|&&p| p > floor).sum();
        let scale = (1.0 - pinned as f64 * floor) / free;
        let mut dropped = false;
        for p in probs.iter_mut() {
            if *p <= floor {
                *p = floor;
            } else {
                *p *= scale;
                dropped |= *p < floor;
            }
        }
        if !dropped {
            break;
        }
    }
}

fn check_floor(floor: f64, k: usize) -> Result<()> {
    if !(floor >= 0.0 && (k as f64) * floor < 1.0) {
        return Err(invalid(format!(
            "probability floor {floor} must be >= 0 with K * floor < 1 (K = {k})"
        )));
    }
    Ok(())
}

fn check_probs(probs: &[f64], k: usize) -> Result<()> {
    if probs.len() != k {
        return Err(invalid(format!("expected {k} probabilities, got {}", probs.len())));
    }
    if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(invalid(format!(
            "probability {i} is {} which is outside [0, 1]",
            probs[i]
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BanditSnapshot {
    sizes: ArmSet,
    probs: Vec<f64>,
    beta: f64,
    epoch: u64,
    seed: u64,
    draw_count: u64,
    floor: f64,
}

impl From<BanditState> for BanditSnapshot {
    fn from(s: BanditState) -> Self {
        Self {
            sizes: s.arms,
            probs: s.probs,
            beta: s.beta,
            epoch: s.epoch,
            seed: s.seed,
            draw_count: s.draw_count,
            floor: s.floor,
        }
    }
}

impl TryFrom<BanditSnapshot> for BanditState {
    type Error = crate::Error;

    fn try_from(s: BanditSnapshot) -> Result<Self> {
        let state = BanditState::init_uniform(s.sizes, s.beta, s.seed)?
            .with_floor(s.floor)?
            .with_probs(s.probs)?;
        Ok(Self {
            epoch: s.epoch,
            draw_count: s.draw_count,
            rng: cursor_rng(s.seed, s.draw_count),
            ..state
        })
    }
}
