//! In-memory datasets, per-epoch shuffling and mini-batch slicing.

mod blobs;
pub mod idx;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::epoch_seed;

pub use blobs::make_blobs;

/// Row-major dense matrix of features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix of {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Rounds every entry through `f32`. Gradient-check tolerances assume the
    /// default 64-bit storage.
    pub fn to_f32_precision(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x as f32 as f64).collect(),
        }
    }
}

/// A set of labelled samples; also used as a single mini-batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub features: Matrix,
    pub labels: Vec<usize>,
}

/// One mini-batch.
pub type Batch = Split;

impl Split {
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(invalid(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(i) = features.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!(
                "non-finite feature in row {}",
                i / features.cols().max(1)
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Writes `x0,…,x{d-1},label` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        writeln!(out, "{},label", header.join(","))?;
        for i in 0..self.len() {
            for x in self.features.row(i) {
                write!(out, "{x},")?;
            }
            writeln!(out, "{}", self.labels[i])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub train: Split,
    pub validation: Split,
    pub test: Split,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(train: Split, validation: Split, test: Split, num_classes: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(invalid("training split is empty"));
        }
        if validation.is_empty() {
            return Err(invalid("validation split is empty"));
        }
        let dim = train.dim();
        for (name, split) in [("validation", &validation), ("test", &test)] {
            if !split.is_empty() && split.dim() != dim {
                return Err(invalid(format!(
                    "{name} split has {} features, training split has {dim}",
                    split.dim()
                )));
            }
        }
        if num_classes < 2 {
            return Err(invalid("a classification dataset needs at least 2 classes"));
        }
        for (name, split) in [("train", &train), ("validation", &validation), ("test", &test)] {
            if let Some(&y) = split.labels.iter().find(|&&y| y >= num_classes) {
                return Err(invalid(format!("{name} label {y} outside [0, {num_classes})")));
            }
        }
        Ok(Self {
            train,
            validation,
            test,
            num_classes,
        })
    }

    /// Number of training samples.
    pub fn m(&self) -> usize {
        self.train.len()
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }
}

/// Number of optimizer steps in one pass over `m` samples with batch size `b`.
pub fn iterations_per_epoch(m: usize, b: usize) -> usize {
    m.div_ceil(b)
}

/// Visiting order of the training samples for one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub epoch_seed: u64,
    pub order: Vec<usize>,
}

impl BatchPlan {
    /// Fisher–Yates shuffle of `0..m` driven by ChaCha8 keyed with `epoch_seed`.
    pub fn from_seed(m: usize, epoch_seed: u64) -> Self {
        let mut order: Vec<usize> = (0..m).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
        order.shuffle(&mut rng);
        Self { epoch_seed, order }
    }

    /// Plan for epoch `epoch` of a run seeded with `run_seed`.
    pub fn for_epoch(m: usize, run_seed: u64, epoch: usize) -> Self {
        Self::from_seed(m, epoch_seed(run_seed, epoch))
    }

    /// Chunks of the visiting order: `ceil(m / b)` chunks, the last one
    /// holding `m mod b` samples when that is nonzero.
    pub fn chunks(&self, b: usize) -> std::slice::Chunks<'_, usize> {
        assert!(b >= 1, "batch size must be at least 1");
        self.order.chunks(b)
    }
}

/// Materializes the mini-batches of one epoch.
pub fn batches<'a>(split: &'a Split, b: usize, plan: &'a BatchPlan) -> impl Iterator<Item = Batch> + 'a {
    plan.chunks(b).map(move |idx| split.select(idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(m: usize) -> Split {
        let x: Vec<f64> = (0..m).map(|i| i as f64).collect();
        Split::new(Matrix::new(m, 1, x).unwrap(), vec![0; m]).unwrap()
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(iterations_per_epoch(55_000, 512), 108);
        assert_eq!(iterations_per_epoch(55_000, 512) * 100, 10_800);
        assert_eq!(iterations_per_epoch(55_000, 16), 3438);
        assert_eq!(iterations_per_epoch(55_000, 16) * 100, 343_800);
        assert_eq!(iterations_per_epoch(100, 100), 1);
    }

    #[test]
    fn grid_total_iterations() {
        let total: usize = [16, 32, 64, 128, 256, 512]
            .iter()
            .map(|&b| 100 * iterations_per_epoch(55_000, b))
            .sum();
        assert_eq!(total, 677_000);
    }

    #[test]
    fn batch_sizes_with_remainder() {
        let s = toy(10);
        let plan = BatchPlan::for_epoch(10, 1, 0);
        let sizes: Vec<_> = batches(&s, 4, &plan).map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        let s = toy(8);
        let plan = BatchPlan::for_epoch(8, 1, 0);
        let sizes: Vec<_> = batches(&s, 4, &plan).map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 4]);
    }

    #[test]
    fn plans_differ_between_epochs_and_repeat_per_seed() {
        let a = BatchPlan::for_epoch(50, 3, 0);
        let b = BatchPlan::for_epoch(50, 3, 1);
        assert_ne!(a.order, b.order);
        assert_eq!(a, BatchPlan::for_epoch(50, 3, 0));
    }

    #[test]
    fn split_validation() {
        assert!(Split::new(Matrix::zeros(2, 2), vec![0]).is_err());
        assert!(Split::new(Matrix::new(1, 1, vec![f64::NAN]).unwrap(), vec![0]).is_err());
        assert!(Matrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn csv_export() {
        let s = Split::new(Matrix::new(2, 2, vec![0.5, 1.0, -2.0, 3.25]).unwrap(), vec![1, 0]).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x0,x1,label\n0.5,1,1\n-2,3.25,0\n");
    }

    proptest! {
        #[test]
        fn every_index_once_per_epoch(m in 1usize..1000, b_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let b = 1 + ((m - 1) as f64 * b_frac) as usize;
            let plan = BatchPlan::for_epoch(m, seed, 0);
            let chunks: Vec<&[usize]> = plan.chunks(b).collect();
            prop_assert_eq!(chunks.len(), iterations_per_epoch(m, b));
            prop_assert_eq!(chunks.iter().map(|c| c.len()).sum::<usize>(), m);
            for c in &chunks[..chunks.len() - 1] {
                prop_assert_eq!(c.len(), b);
            }
            let mut seen = vec![0u32; m];
            for c in &chunks { for &i in *c { seen[i] += 1; } }
            prop_assert!(seen.iter().all(|&n| n == 1));
        }
    }
}
