//! Labeled feature-vector datasets with train/test splits and CSV exchange.

use std::io::{BufRead, Write};

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Index partition of a dataset into train and test rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// A matrix of feature vectors with integer class labels.
///
/// Rows of `features` align with `labels`; `split`, when present, partitions
/// the row indices into a training and a test set.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub split: Option<Split>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            split: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of feature dimensions.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Number of classes, taken as `max(label) + 1`.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Per-class sample counts, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Extract the rows at `indices` as a new dataset (no split).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Shape(format!("subset index {bad} out of range {n}")));
        }
        let d = self.dim();
        let mut features = Array2::zeros((indices.len(), d));
        let mut labels = Vec::with_capacity(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            features.row_mut(row).assign(&self.features.row(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset::new(features, labels)
    }

    /// Assign a random train/test partition.
    ///
    /// The training side gets `round(n * train_fraction)` rows, the test
    /// side the remainder. Deterministic for a fixed RNG state.
    pub fn split_random(&mut self, train_fraction: f64, rng: &mut Rng) -> Result<()> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let n = self.len();
        let n_train = (n as f64 * train_fraction).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let (train, test) = order.split_at(n_train);
        self.split = Some(Split {
            train: train.to_vec(),
            test: test.to_vec(),
        });
        Ok(())
    }

    /// The training subset; requires a split.
    pub fn train_set(&self) -> Result<LabeledDataset> {
        let split = self
            .split
            .as_ref()
            .ok_or_else(|| Error::Input("dataset has no train/test split".into()))?;
        self.subset(&split.train)
    }

    /// The test subset; requires a split.
    pub fn test_set(&self) -> Result<LabeledDataset> {
        let split = self
            .split
            .as_ref()
            .ok_or_else(|| Error::Input("dataset has no train/test split".into()))?;
        self.subset(&split.test)
    }

    /// One-hot encode the labels into an `n x n_classes` target matrix.
    pub fn one_hot_targets(&self, n_classes: usize) -> Result<Array2<f64>> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Input(format!(
                "label {bad} not encodable with {n_classes} classes"
            )));
        }
        let mut t = Array2::zeros((self.len(), n_classes));
        for (i, &l) in self.labels.iter().enumerate() {
            t[(i, l)] = 1.0;
        }
        Ok(t)
    }

    /// Write as CSV with header `f1,...,fD,label`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.dim();
        let header: Vec<String> = (1..=d).map(|i| format!("f{i}")).collect();
        writeln!(w, "{},label", header.join(","))?;
        for (row, &label) in self.features.rows().into_iter().zip(&self.labels) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{},{label}", cells.join(","))?;
        }
        Ok(())
    }

    /// Read a dataset written by [`write_csv`](Self::write_csv).
    ///
    /// Lines starting with `#` (e.g. trailing manifest references) are
    /// ignored.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut labels: Vec<usize> = Vec::new();
        let mut dim: Option<usize> = None;
        let mut saw_header = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if !line.starts_with("f1,") {
                    return Err(Error::Format(format!(
                        "dataset CSV must start with an `f1,...,label` header, got `{line}`"
                    )));
                }
                saw_header = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() < 2 {
                return Err(Error::Format(format!(
                    "line {}: expected at least one feature and a label",
                    lineno + 1
                )));
            }
            let d = cells.len() - 1;
            match dim {
                None => dim = Some(d),
                Some(prev) if prev != d => {
                    return Err(Error::Format(format!(
                        "line {}: {} features, expected {}",
                        lineno + 1,
                        d,
                        prev
                    )))
                }
                _ => {}
            }
            let mut row = Vec::with_capacity(d);
            for c in &cells[..d] {
                row.push(c.parse::<f64>().map_err(|e| {
                    Error::Format(format!("line {}: bad float `{c}`: {e}", lineno + 1))
                })?);
            }
            let label = cells[d].parse::<usize>().map_err(|e| {
                Error::Format(format!(
                    "line {}: bad label `{}`: {e}",
                    lineno + 1,
                    cells[d]
                ))
            })?;
            rows.push(row);
            labels.push(label);
        }
        let d = dim.ok_or_else(|| Error::Format("dataset CSV contains no data rows".into()))?;
        let mut features = Array2::zeros((rows.len(), d));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                features[(i, j)] = v;
            }
        }
        LabeledDataset::new(features, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    fn toy() -> LabeledDataset {
        LabeledDataset::new(
            array![[0.0, 1.0], [2.0, 3.0], [4.0, 5.0], [6.0, 7.0], [8.0, 9.0]],
            vec![0, 1, 0, 1, 0],
        )
        .unwrap()
    }

    #[test]
    fn split_sizes_round() {
        let mut d = toy();
        d.split_random(0.8, &mut rng_from_seed(1)).unwrap();
        let s = d.split.as_ref().unwrap();
        assert_eq!(s.train.len(), 4);
        assert_eq!(s.test.len(), 1);
    }

    #[test]
    fn split_is_partition_and_deterministic() {
        let mut a = toy();
        let mut b = toy();
        a.split_random(0.6, &mut rng_from_seed(9)).unwrap();
        b.split_random(0.6, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a.split, b.split);
        let s = a.split.unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(s.test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let mut d = toy();
        assert!(d.split_random(0.0, &mut rng_from_seed(1)).is_err());
        assert!(d.split_random(1.0, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = toy();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f1,f2,label\n"));
        let back = LabeledDataset::read_csv(&buf[..]).unwrap();
        assert_eq!(back.labels, d.labels);
        assert_eq!(back.features, d.features);
    }

    #[test]
    fn csv_rejects_missing_header() {
        let text = "1.0,2.0,0\n";
        assert!(LabeledDataset::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn one_hot_shape() {
        let d = toy();
        let t = d.one_hot_targets(2).unwrap();
        assert_eq!(t.shape(), &[5, 2]);
        assert_eq!(t[(1, 1)], 1.0);
        assert_eq!(t[(1, 0)], 0.0);
        assert!(d.one_hot_targets(1).is_err());
    }
}
