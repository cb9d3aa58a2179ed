//! Softmax classifiers with analytic gradients.
//!
//! Two architectures share one flat parameter vector format:
//!
//! - `logistic`: `z = W x + b`, slices `w` (C x d) and `b` (C).
//! - `mlp`: `h = relu(W1 x + b1)`, `z = W2 h + b2`, slices `w1` (H x d),
//!   `b1` (H), `w2` (C x H), `b2` (C). The ReLU derivative at 0 is 0.
//!
//! The training objective is the mean softmax cross-entropy over the batch
//! plus `(l2 / 2) * ||W||^2` over weight slices only. Validation uses the
//! unregularized cross-entropy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Batch;
use crate::error::{invalid, Error, Result};
use crate::optim::{Layout, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    #[serde(default)]
    pub hidden_dim: usize,
    pub num_classes: usize,
    #[serde(default)]
    pub l2: f64,
}

impl ModelSpec {
    pub fn logistic(input_dim: usize, num_classes: usize) -> Self {
        Self {
            kind: ModelKind::Logistic,
            input_dim,
            hidden_dim: 0,
            num_classes,
            l2: 0.0,
        }
    }

    pub fn mlp(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Self {
            kind: ModelKind::Mlp,
            input_dim,
            hidden_dim,
            num_classes,
            l2: 0.0,
        }
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(invalid("model input_dim must be positive"));
        }
        if self.num_classes < 2 {
            return Err(invalid("model num_classes must be at least 2"));
        }
        if self.kind == ModelKind::Mlp && self.hidden_dim == 0 {
            return Err(invalid("mlp hidden_dim must be positive"));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(invalid(format!("l2 must be finite and >= 0, got {}", self.l2)));
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        let (d, h, c) = (self.input_dim, self.hidden_dim, self.num_classes);
        match self.kind {
            ModelKind::Logistic => Layout::packed(&[("w", c, d, true), ("b", c, 1, false)]),
            ModelKind::Mlp => Layout::packed(&[
                ("w1", h, d, true),
                ("b1", h, 1, false),
                ("w2", c, h, true),
                ("b2", c, 1, false),
            ]),
        }
    }

    /// Glorot-uniform weights `U(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModelParams> {
        self.validate()?;
        let mut params = ModelParams::zeros(self.layout());
        for slice in params.layout.slices.clone() {
            if !slice.is_weight {
                continue;
            }
            let a = (6.0 / (slice.rows + slice.cols) as f64).sqrt();
            for w in &mut params.values[slice.range()] {
                *w = rng.random_range(-a..a);
            }
        }
        Ok(params)
    }

    fn check(&self, params: &ModelParams, batch: &Batch) -> Result<()> {
        if params.layout != self.layout() {
            return Err(Error::Layout(format!(
                "parameter layout does not match a {:?} model with d={}, h={}, C={}",
                self.kind, self.input_dim, self.hidden_dim, self.num_classes
            )));
        }
        if batch.dim() != self.input_dim {
            return Err(Error::Layout(format!(
                "batch has {} features, model expects {}",
                batch.dim(),
                self.input_dim
            )));
        }
        if let Some(&y) = batch.labels.iter().find(|&&y| y >= self.num_classes) {
            return Err(Error::Layout(format!("label {y} outside [0, {})", self.num_classes)));
        }
        Ok(())
    }
}

/// Borrowed views of the parameter slices.
struct Views<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: Option<&'a [f64]>,
    b2: Option<&'a [f64]>,
}

fn views<'a>(spec: &ModelSpec, values: &'a [f64]) -> Views<'a> {
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.num_classes);
    match spec.kind {
        ModelKind::Logistic => Views {
            w1: &values[..c * d],
            b1: &values[c * d..c * d + c],
            w2: None,
            b2: None,
        },
        ModelKind::Mlp => {
            let (w1, rest) = values.split_at(h * d);
            let (b1, rest) = rest.split_at(h);
            let (w2, b2) = rest.split_at(c * h);
            Views {
                w1,
                b1,
                w2: Some(w2),
                b2: Some(b2),
            }
        }
    }
}

/// `out = W x + b` with `W` row-major `out.len() x x.len()`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * n..(i + 1) * n];
        *o = b[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Scratch buffers for one sample's forward pass.
struct Forward {
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

impl Forward {
    fn new(spec: &ModelSpec) -> Self {
        Self {
            hidden_pre: vec![0.0; spec.hidden_dim],
            hidden: vec![0.0; spec.hidden_dim],
            logits: vec![0.0; spec.num_classes],
        }
    }

    fn run(&mut self, v: &Views<'_>, x: &[f64]) {
        match (v.w2, v.b2) {
            (Some(w2), Some(b2)) => {
                affine(v.w1, v.b1, x, &mut self.hidden_pre);
                for (h, &a) in self.hidden.iter_mut().zip(&self.hidden_pre) {
                    *h = if a > 0.0 { a } else { 0.0 };
                }
                affine(w2, b2, &self.hidden, &mut self.logits);
            }
            _ => affine(v.w1, v.b1, x, &mut self.logits),
        }
    }
}

/// `ln(sum(exp(z)))` computed around the maximum.
fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

fn l2_penalty(spec: &ModelSpec, params: &ModelParams) -> f64 {
    if spec.l2 == 0.0 {
        return 0.0;
    }
    let sq: f64 = params
        .layout
        .slices
        .iter()
        .filter(|s| s.is_weight)
        .flat_map(|s| params.values[s.range()].iter())
        .map(|w| w * w)
        .sum();
    0.5 * spec.l2 * sq
}

/// Mean cross-entropy without the weight penalty.
pub fn cross_entropy(spec: &ModelSpec, params: &ModelParams, batch: &Batch) -> Result<f64> {
    spec.check(params, batch)?;
    if batch.is_empty() {
        return Err(invalid("cross-entropy of an empty batch"));
    }
    let v = views(spec, &params.values);
    let mut fwd = Forward::new(spec);
    let mut total = 0.0;
    for (i, &y) in batch.labels.iter().enumerate() {
        fwd.run(&v, batch.features.row(i));
        total += log_sum_exp(&fwd.logits) - fwd.logits[y];
    }
    Ok(total / batch.len() as f64)
}

/// Training objective: mean cross-entropy plus `(l2 / 2) * ||W||^2`.
pub fn loss(spec: &ModelSpec, params: &ModelParams, batch: &Batch) -> Result<f64> {
    Ok(cross_entropy(spec, params, batch)? + l2_penalty(spec, params))
}

/// Training objective and its gradient with respect to every parameter.
pub fn loss_and_grad(spec: &ModelSpec, params: &ModelParams, batch: &Batch) -> Result<(f64, Vec<f64>)> {
    spec.check(params, batch)?;
    if batch.is_empty() {
        return Err(invalid("gradient of an empty batch"));
    }
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.num_classes);
    let n = batch.len() as f64;
    let v = views(spec, &params.values);
    let mut fwd = Forward::new(spec);
    let mut grad = vec![0.0; params.len()];
    let mut dz = vec![0.0; c];
    let mut dh = vec![0.0; h];
    let mut total = 0.0;

    for (i, &y) in batch.labels.iter().enumerate() {
        let x = batch.features.row(i);
        fwd.run(&v, x);
        let lse = log_sum_exp(&fwd.logits);
        total += lse - fwd.logits[y];
        for (g, &z) in dz.iter_mut().zip(&fwd.logits) {
            *g = (z - lse).exp() / n;
        }
        dz[y] -= 1.0 / n;

        match spec.kind {
            ModelKind::Logistic => {
                let (gw, gb) = grad.split_at_mut(c * d);
                for k in 0..c {
                    let row = &mut gw[k * d..(k + 1) * d];
                    for (g, &xj) in row.iter_mut().zip(x) {
                        *g += dz[k] * xj;
                    }
                    gb[k] += dz[k];
                }
            }
            ModelKind::Mlp => {
                let w2 = v.w2.expect("mlp has w2");
                let (gw1, rest) = grad.split_at_mut(h * d);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(c * h);
                dh.iter_mut().for_each(|g| *g = 0.0);
                for k in 0..c {
                    let row = &mut gw2[k * h..(k + 1) * h];
                    let w_row = &w2[k * h..(k + 1) * h];
                    for j in 0..h {
                        row[j] += dz[k] * fwd.hidden[j];
                        dh[j] += dz[k] * w_row[j];
                    }
                    gb2[k] += dz[k];
                }
                for j in 0..h {
                    if fwd.hidden_pre[j] <= 0.0 {
                        continue;
                    }
                    let da = dh[j];
                    let row = &mut gw1[j * d..(j + 1) * d];
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += da * xi;
                    }
                    gb1[j] += da;
                }
            }
        }
    }

    if spec.l2 != 0.0 {
        for s in params.layout.slices.iter().filter(|s| s.is_weight) {
            for idx in s.range() {
                grad[idx] += spec.l2 * params.values[idx];
            }
        }
    }
    Ok((total / n + l2_penalty(spec, params), grad))
}

/// Predicted class per row; ties go to the lowest class index.
pub fn predict(spec: &ModelSpec, params: &ModelParams, batch: &Batch) -> Result<Vec<usize>> {
    spec.check(params, batch)?;
    let v = views(spec, &params.values);
    let mut fwd = Forward::new(spec);
    Ok((0..batch.len())
        .map(|i| {
            fwd.run(&v, batch.features.row(i));
            argmax(&fwd.logits)
        })
        .collect())
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = k;
        }
    }
    best
}

/// Fraction of rows whose predicted class equals the label. An empty batch
/// scores 0.
pub fn accuracy(spec: &ModelSpec, params: &ModelParams, batch: &Batch) -> Result<f64> {
    let predictions = predict(spec, params, batch)?;
    if predictions.is_empty() {
        return Ok(0.0);
    }
    let hits = predictions.iter().zip(&batch.labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / predictions.len() as f64)
}
