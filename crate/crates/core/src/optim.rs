//! Parameters and first-order update rules.
//!
//! Parameters live in one flat `Vec<f64>`; a [`Layout`] names the slices
//! (weight matrices and bias vectors) inside it. Optimizer slot vectors have
//! the same length as the parameter vector.
//!
//! Weight decay is coupled: `g + weight_decay * w` is fed to the rule.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One named block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlice {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    /// Weight matrices are regularized, biases are not.
    pub is_weight: bool,
}

impl ParamSlice {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layout {
    pub slices: Vec<ParamSlice>,
}

impl Layout {
    /// Appends slices back to back. `specs` is `(name, rows, cols, is_weight)`.
    pub fn packed(specs: &[(&str, usize, usize, bool)]) -> Self {
        let mut offset = 0;
        let slices = specs
            .iter()
            .map(|&(name, rows, cols, is_weight)| {
                let s = ParamSlice {
                    name: name.to_string(),
                    offset,
                    rows,
                    cols,
                    is_weight,
                };
                offset += rows * cols;
                s
            })
            .collect();
        Self { slices }
    }

    pub fn total_len(&self) -> usize {
        self.slices.iter().map(|s| s.offset + s.len()).max().unwrap_or(0)
    }

    pub fn get(&self, name: &str) -> Option<&ParamSlice> {
        self.slices.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl ModelParams {
    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::Layout(format!(
                "{} values for a layout of {} entries",
                values.len(),
                layout.total_len()
            )));
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(layout: Layout) -> Self {
        Self {
            values: vec![0.0; layout.total_len()],
            layout,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, name: &str) -> Option<&[f64]> {
        self.layout.get(name).map(|s| &self.values[s.range()])
    }
}

/// Update rule and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Sgd {
        #[serde(default)]
        weight_decay: f64,
    },
    Momentum {
        #[serde(default = "default_momentum")]
        momentum: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Adagrad {
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
}

fn default_momentum() -> f64 {
    0.9
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl OptimizerConfig {
    pub fn sgd() -> Self {
        Self::Sgd { weight_decay: 0.0 }
    }

    pub fn momentum(momentum: f64) -> Self {
        Self::Momentum {
            momentum,
            weight_decay: 0.0,
        }
    }

    pub fn adagrad() -> Self {
        Self::Adagrad {
            eps: default_eps(),
            weight_decay: 0.0,
        }
    }

    pub fn adam() -> Self {
        Self::Adam {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            weight_decay: 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sgd { .. } => "sgd",
            Self::Momentum { .. } => "momentum",
            Self::Adagrad { .. } => "adagrad",
            Self::Adam { .. } => "adam",
        }
    }

    pub fn weight_decay(&self) -> f64 {
        match *self {
            Self::Sgd { weight_decay }
            | Self::Momentum { weight_decay, .. }
            | Self::Adagrad { weight_decay, .. }
            | Self::Adam { weight_decay, .. } => weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wd = self.weight_decay();
        if !(wd.is_finite() && wd >= 0.0) {
            return Err(invalid(format!("weight_decay must be finite and >= 0, got {wd}")));
        }
        match *self {
            Self::Sgd { .. } => {}
            Self::Momentum { momentum, .. } => {
                if !(0.0..1.0).contains(&momentum) {
                    return Err(invalid(format!("momentum must be in [0, 1), got {momentum}")));
                }
            }
            Self::Adagrad { eps, .. } => check_eps(eps)?,
            Self::Adam { beta1, beta2, eps, .. } => {
                if !(0.0..1.0).contains(&beta1) {
                    return Err(invalid(format!("beta1 must be in [0, 1), got {beta1}")));
                }
                if !(0.0..1.0).contains(&beta2) {
                    return Err(invalid(format!("beta2 must be in [0, 1), got {beta2}")));
                }
                check_eps(eps)?;
            }
        }
        Ok(())
    }

    /// Fresh state with zeroed slots for `n` parameters.
    pub fn init_state(&self, n: usize) -> Result<OptimizerState> {
        self.validate()?;
        let slots = match self {
            Self::Sgd { .. } => Slots::None,
            Self::Momentum { .. } => Slots::Velocity(vec![0.0; n]),
            Self::Adagrad { .. } => Slots::Accumulator(vec![0.0; n]),
            Self::Adam { .. } => Slots::Moments {
                first: vec![0.0; n],
                second: vec![0.0; n],
            },
        };
        Ok(OptimizerState {
            config: self.clone(),
            slots,
            step_count: 0,
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be finite and > 0, got {eps}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slots {
    None,
    Velocity(Vec<f64>),
    Accumulator(Vec<f64>),
    Moments { first: Vec<f64>, second: Vec<f64> },
}

impl Slots {
    fn len(&self) -> Option<usize> {
        match self {
            Slots::None => None,
            Slots::Velocity(v) | Slots::Accumulator(v) => Some(v.len()),
            Slots::Moments { first, .. } => Some(first.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub slots: Slots,
    pub step_count: u64,
}

impl OptimizerState {
    /// Zeroes the slots and the step counter, keeping the configuration.
    pub fn reset(&mut self) {
        let n = self.slots.len().unwrap_or(0);
        *self = self
            .config
            .init_state(n)
            .expect("configuration was validated at construction");
    }

    /// Applies one update in place.
    ///
    /// Gradients are checked before anything is touched; a non-finite entry
    /// is reported with its index and leaves both `params` and `self`
    /// unchanged.
    pub fn step_in_place(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::Layout(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        if let Some(n) = self.slots.len() {
            if n != params.len() {
                return Err(Error::Layout(format!(
                    "optimizer slots hold {n} entries for {} parameters",
                    params.len()
                )));
            }
        }
        if !(lr.is_finite() && lr > 0.0) {
            return Err(invalid(format!("learning rate must be finite and > 0, got {lr}")));
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                index,
                value: grads[index],
            });
        }

        let wd = self.config.weight_decay();
        self.step_count += 1;
        let t = self.step_count;
        match (&self.config, &mut self.slots) {
            (OptimizerConfig::Sgd { .. }, Slots::None) => {
                for (w, &g) in params.iter_mut().zip(grads) {
                    *w -= lr * (g + wd * *w);
                }
            }
            (OptimizerConfig::Momentum { momentum, .. }, Slots::Velocity(v)) => {
                for ((w, &g), v) in params.iter_mut().zip(grads).zip(v.iter_mut()) {
                    *v = momentum * *v + (g + wd * *w);
                    *w -= lr * *v;
                }
            }
            (OptimizerConfig::Adagrad { eps, .. }, Slots::Accumulator(acc)) => {
                for ((w, &g), a) in params.iter_mut().zip(grads).zip(acc.iter_mut()) {
                    let g = g + wd * *w;
                    *a += g * g;
                    *w -= lr * g / (a.sqrt() + eps);
                }
            }
            (OptimizerConfig::Adam { beta1, beta2, eps, .. }, Slots::Moments { first, second }) => {
                let exp = i32::try_from(t).unwrap_or(i32::MAX);
                let c1 = 1.0 - beta1.powi(exp);
                let c2 = 1.0 - beta2.powi(exp);
                for (((w, &g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(first.iter_mut())
                    .zip(second.iter_mut())
                {
                    let g = g + wd * *w;
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *w -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
            (config, _) => {
                return Err(invalid(format!(
                    "optimizer slots do not match configuration {}",
                    config.name()
                )))
            }
        }
        if let Some(index) = params.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteParameter { index });
        }
        Ok(())
    }
}

/// Pure form of [`OptimizerState::step_in_place`].
pub fn step(
    params: &ModelParams,
    grads: &[f64],
    state: &OptimizerState,
    lr: f64,
) -> Result<(ModelParams, OptimizerState)> {
    let mut params = params.clone();
    let mut state = state.clone();
    state.step_in_place(&mut params.values, grads, lr)?;
    Ok((params, state))
}

/// Reference learning rate and batch size for linear scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchScaling {
    pub reference_lr: f64,
    pub reference_batch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Milestone {
    pub epoch: usize,
    pub multiplier: f64,
}

/// Per-epoch learning rate: a base (or batch-scaled) value times the
/// multipliers of every milestone already reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningRateSchedule {
    pub base: f64,
    #[serde(default)]
    pub scale_with_batch: Option<BatchScaling>,
    #[serde(default)]
    pub milestones: Vec<Milestone>,
}

impl LearningRateSchedule {
    pub fn constant(base: f64) -> Self {
        Self {
            base,
            scale_with_batch: None,
            milestones: Vec::new(),
        }
    }

    /// `reference_lr * b / reference_batch`.
    pub fn batch_scaled(reference_lr: f64, reference_batch: usize) -> Self {
        Self {
            base: reference_lr,
            scale_with_batch: Some(BatchScaling {
                reference_lr,
                reference_batch,
            }),
            milestones: Vec::new(),
        }
    }

    pub fn with_milestones(mut self, milestones: &[(usize, f64)]) -> Self {
        self.milestones = milestones
            .iter()
            .map(|&(epoch, multiplier)| Milestone { epoch, multiplier })
            .collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base.is_finite() && self.base > 0.0) {
            return Err(invalid(format!("base learning rate must be > 0, got {}", self.base)));
        }
        if let Some(s) = self.scale_with_batch {
            if !(s.reference_lr.is_finite() && s.reference_lr > 0.0) || s.reference_batch == 0 {
                return Err(invalid("batch scaling needs reference_lr > 0 and reference_batch >= 1"));
            }
        }
        if let Some(m) = self
            .milestones
            .iter()
            .find(|m| !(m.multiplier.is_finite() && m.multiplier > 0.0))
        {
            return Err(invalid(format!(
                "milestone multiplier must be > 0, got {} at epoch {}",
                m.multiplier, m.epoch
            )));
        }
        if self.milestones.windows(2).any(|w| w[0].epoch >= w[1].epoch) {
            return Err(invalid("milestone epochs must be strictly increasing"));
        }
        Ok(())
    }

    pub fn effective_lr(&self, epoch: usize, batch_size: usize) -> f64 {
        let lr = match self.scale_with_batch {
            Some(s) => s.reference_lr * batch_size as f64 / s.reference_batch as f64,
            None => self.base,
        };
        self.milestones
            .iter()
            .filter(|m| epoch >= m.epoch)
            .fold(lr, |lr, m| lr * m.multiplier)
    }
}
