use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{FeatureKind, FeatureSpace};

/// Row-major feature table with class labels.
///
/// Categorical values are stored as their category index cast to `f64`.
/// The feature space is shared so subsets and bootstrap samples are cheap to
/// carry around alongside the original.
#[derive(Clone, Debug)]
pub struct Dataset {
    space: Arc<FeatureSpace>,
    values: Vec<f64>,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    /// Builds a dataset, rejecting values outside the space. Use
    /// [`Dataset::with_clamping`] to clamp numeric values instead.
    pub fn new(space: Arc<FeatureSpace>, rows: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let (ds, clamped) = Self::build(space, rows, labels, class_count, false)?;
        debug_assert_eq!(clamped, 0);
        Ok(ds)
    }

    /// Like [`Dataset::new`] but numeric values outside `[lower, upper]` are
    /// clamped. Returns the number of clamped cells.
    pub fn with_clamping(
        space: Arc<FeatureSpace>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<(Self, usize)> {
        Self::build(space, rows, labels, class_count, true)
    }

    fn build(
        space: Arc<FeatureSpace>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_count: usize,
        clamp: bool,
    ) -> Result<(Self, usize)> {
        if class_count == 0 {
            return Err(Error::Input("class count must be positive".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::Input(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        let p = space.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        let mut clamped = 0;
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::Input(format!("row {i} has {} values, expected {p}", row.len())));
            }
            for (j, mut v) in row.into_iter().enumerate() {
                match space.feature(j).kind {
                    FeatureKind::Numeric { lower, upper } => {
                        if !v.is_finite() {
                            return Err(Error::Input(format!("row {i}, feature {j}: non-finite")));
                        }
                        if v < lower || v > upper {
                            if !clamp {
                                return Err(Error::Input(format!(
                                    "row {i}, feature {j}: {v} outside [{lower}, {upper}]"
                                )));
                            }
                            v = v.clamp(lower, upper);
                            clamped += 1;
                        }
                    }
                    FeatureKind::Categorical { cardinality } => {
                        if v.fract() != 0.0 || v < 0.0 || v >= cardinality as f64 {
                            return Err(Error::Input(format!(
                                "row {i}, feature {j}: category {v} not in [0, {cardinality})"
                            )));
                        }
                    }
                }
                values.push(v);
            }
        }
        if let Some((i, &k)) = labels.iter().enumerate().find(|(_, k)| **k >= class_count) {
            return Err(Error::Input(format!("row {i}: label {k} not in [0, {class_count})")));
        }
        Ok((
            Dataset {
                space,
                values,
                labels,
                class_count,
            },
            clamped,
        ))
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn shared_space(&self) -> Arc<FeatureSpace> {
        Arc::clone(&self.space)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.space.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.space.len();
        &self.values[i * p..(i + 1) * p]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.space.len() + j]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.space.len().max(1))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &k in &self.labels {
            counts[k] += 1;
        }
        counts
    }

    /// New dataset made of the given rows, in order; indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let p = self.space.len();
        let mut values = Vec::with_capacity(indices.len() * p);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            space: Arc::clone(&self.space),
            values,
            labels,
            class_count: self.class_count,
        }
    }
}
