//! Observations, datasets and the weighted residual arithmetic every fit
//! is built on.
//!
//! A [`Dataset`] can only be obtained through validation, so downstream code
//! may assume at least one observation, finite values and strictly positive
//! weights. Observations keep their input order.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl Observation {
    pub fn new(x: f64, y: f64, w: f64) -> Self {
        Observation { x, y, w }
    }

    /// Unit-weight observation.
    pub fn unweighted(x: f64, y: f64) -> Self {
        Observation { x, y, w: 1.0 }
    }
}

/// Validated, ordered collection of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
}

/// Checks the dataset invariants and hands the observations back as a
/// [`Dataset`] unchanged.
pub fn validate_dataset(observations: Vec<Observation>) -> Result<Dataset> {
    if observations.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (index, o) in observations.iter().enumerate() {
        for (field, v) in [("x", o.x), ("y", o.y), ("w", o.w)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index, field });
            }
        }
        if o.w <= 0.0 {
            return Err(Error::NonPositiveWeight { index, weight: o.w });
        }
    }
    Ok(Dataset { observations })
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        validate_dataset(observations)
    }

    /// Builds a unit-weight dataset from paired slices.
    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        check_len(xs.len(), ys.len())?;
        Self::new(
            xs.iter()
                .zip(ys)
                .map(|(&x, &y)| Observation::unweighted(x, y))
                .collect(),
        )
    }

    pub fn from_xyw(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<Self> {
        check_len(xs.len(), ys.len())?;
        check_len(xs.len(), ws.len())?;
        Self::new(
            xs.iter()
                .zip(ys)
                .zip(ws)
                .map(|((&x, &y), &w)| Observation::new(x, y, w))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    /// Always false for a validated dataset; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn xs(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.y).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.w).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.observations.iter().map(|o| o.w).sum()
    }

    /// Subset by index, in the order given.
    pub(crate) fn select(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.observations[i]).collect())
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Residuals `y_i - prediction_i` of a dataset against some model.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector(Vec<f64>);

impl ResidualVector {
    pub fn new(values: Vec<f64>) -> Self {
        ResidualVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `sum w_i r_i^2`.
    pub fn weighted_ss(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(r, w)| w * r * r).sum()
    }

    /// Subtracts `alpha * f_i` from every residual.
    pub(crate) fn subtract_scaled(&mut self, alpha: f64, f: &[f64]) {
        for (r, fi) in self.0.iter_mut().zip(f) {
            *r -= alpha * fi;
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn residuals(d: &Dataset, predictions: &[f64]) -> Result<ResidualVector> {
    check_len(d.len(), predictions.len())?;
    Ok(ResidualVector(
        d.observations.iter().zip(predictions).map(|(o, p)| o.y - p).collect(),
    ))
}

/// Weighted sum of squared residuals, `sum w_i (y_i - pred_i)^2`.
pub fn weighted_ss(d: &Dataset, predictions: &[f64]) -> Result<f64> {
    check_len(d.len(), predictions.len())?;
    Ok(d.observations
        .iter()
        .zip(predictions)
        .map(|(o, p)| {
            let r = o.y - p;
            o.w * r * r
        })
        .sum())
}

/// Replaces each group of observations sharing the same x by a single
/// observation at the group's weighted mean y, carrying the summed weight.
///
/// Observations join the group of the first earlier representative whose x
/// lies within `tolerance`; with `tolerance == 0` this is exact equality.
/// Output order follows first occurrence and the representative keeps the x
/// of that first occurrence.
pub fn collapse_duplicates(d: &Dataset, tolerance: f64) -> Dataset {
    struct Group {
        x: f64,
        wy: f64,
        w: f64,
        first: Option<Observation>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut exact: HashMap<u64, usize> = HashMap::new();

    for o in &d.observations {
        let slot = if tolerance > 0.0 {
            groups.iter().position(|g| (g.x - o.x).abs() <= tolerance)
        } else {
            // +0.0 and -0.0 compare equal
            let key = if o.x == 0.0 { 0u64 } else { o.x.to_bits() };
            match exact.get(&key) {
                Some(&i) => Some(i),
                None => {
                    exact.insert(key, groups.len());
                    None
                }
            }
        };
        match slot {
            Some(i) => {
                let g = &mut groups[i];
                g.wy += o.w * o.y;
                g.w += o.w;
                g.first = None;
            }
            None => groups.push(Group {
                x: o.x,
                wy: o.w * o.y,
                w: o.w,
                first: Some(*o),
            }),
        }
    }

    let observations = groups
        .into_iter()
        .map(|g| match g.first {
            // singletons pass through bit-exact
            Some(o) => o,
            None => Observation::new(g.x, g.wy / g.w, g.w),
        })
        .collect();
    Dataset { observations }
}
