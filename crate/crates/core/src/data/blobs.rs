use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Matrix, Split};
use crate::error::{invalid, Result};

/// Gaussian blobs: one standard-normal mean per class, samples at
/// `mean + spread * N(0, I)`.
///
/// Each class contributes `per_class` samples split 80/10/10: validation and
/// test each take `max(1, per_class / 10)` of them and training keeps the
/// rest. Rows inside every split are shuffled.
pub fn make_blobs(classes: usize, per_class: usize, dim: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 {
        return Err(invalid("make_blobs needs at least 2 classes"));
    }
    if per_class < 3 {
        return Err(invalid("make_blobs needs at least 3 samples per class"));
    }
    if dim == 0 {
        return Err(invalid("make_blobs needs dim >= 1"));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(invalid(format!("spread must be finite and >= 0, got {spread}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();

    let held_out = (per_class / 10).max(1);
    let mut parts: [Vec<(Vec<f64>, usize)>; 3] = Default::default();
    for (label, mean) in means.iter().enumerate() {
        for j in 0..per_class {
            let x: Vec<f64> = mean
                .iter()
                .map(|&mu| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + spread * z
                })
                .collect();
            let part = if j < held_out {
                1
            } else if j < 2 * held_out {
                2
            } else {
                0
            };
            parts[part].push((x, label));
        }
    }

    let mut splits = parts.into_iter().map(|mut rows| {
        rows.shuffle(&mut rng);
        let n = rows.len();
        let mut data = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for (x, y) in rows {
            data.extend(x);
            labels.push(y);
        }
        Split::new(Matrix::new(n, dim, data)?, labels)
    });
    let train = splits.next().expect("three splits")?;
    let validation = splits.next().expect("three splits")?;
    let test = splits.next().expect("three splits")?;
    Dataset::new(train, validation, test, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let a = make_blobs(3, 20, 4, 1.0, 11).unwrap();
        let b = make_blobs(3, 20, 4, 1.0, 11).unwrap();
        assert_eq!(a, b);
        let c = make_blobs(3, 20, 4, 1.0, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_histogram_matches_per_class() {
        let d = make_blobs(5, 400, 20, 1.5, 0).unwrap();
        assert_eq!(d.m(), 1600);
        assert_eq!(d.validation.len(), 200);
        assert_eq!(d.test.len(), 200);
        let mut counts = vec![0usize; 5];
        for split in [&d.train, &d.validation, &d.test] {
            for &y in &split.labels {
                counts[y] += 1;
            }
        }
        assert_eq!(counts, vec![400; 5]);
    }

    #[test]
    fn zero_spread_collapses_to_means() {
        let d = make_blobs(2, 10, 3, 0.0, 5).unwrap();
        let train = &d.train;
        let rows_of = |label: usize| {
            (0..train.len())
                .filter(|&i| train.labels[i] == label)
                .map(|i| train.features.row(i).to_vec())
                .collect::<Vec<_>>()
        };
        for label in 0..2 {
            let rows = rows_of(label);
            assert!(rows.windows(2).all(|w| w[0] == w[1]));
        }
        assert_ne!(rows_of(0)[0], rows_of(1)[0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_blobs(1, 10, 2, 1.0, 0).is_err());
        assert!(make_blobs(2, 2, 2, 1.0, 0).is_err());
        assert!(make_blobs(2, 10, 0, 1.0, 0).is_err());
        assert!(make_blobs(2, 10, 2, -1.0, 0).is_err());
    }
}
