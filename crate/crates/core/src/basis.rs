//! Parameterised regression functions `f(beta, x)`.
//!
//! The fitter only needs to evaluate a family at a frequency; anything that
//! implements [`Basis`] can be searched. The built-in [`BasisFamily`] covers
//! `sin(beta * g(x))` and `cos(beta * g(x))` with an [`InputTransform`] `g`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// The map `g` applied to x before the frequency multiplies it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InputTransform {
    #[default]
    Identity,
    /// `g(x) = scale * x + offset`, `scale != 0`.
    Affine { scale: f64, offset: f64 },
}

impl InputTransform {
    pub fn affine(scale: f64, offset: f64) -> Result<Self> {
        if !scale.is_finite() || !offset.is_finite() || scale == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "affine transform needs a finite non-zero scale, got scale={scale} offset={offset}"
            )));
        }
        Ok(InputTransform::Affine { scale, offset })
    }

    /// Affine map sending the smallest x to 0 and the largest to 2*pi.
    pub fn span_two_pi(xs: &[f64]) -> Result<Self> {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::InvalidConfig(
                "span2pi transform needs at least two distinct x values".into(),
            ));
        }
        let scale = TAU / (hi - lo);
        Self::affine(scale, -lo * scale)
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            InputTransform::Identity => x,
            InputTransform::Affine { scale, offset } => scale * x + offset,
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            InputTransform::Identity => 1.0,
            InputTransform::Affine { scale, .. } => scale,
        }
    }

    pub fn offset(&self) -> f64 {
        match *self {
            InputTransform::Identity => 0.0,
            InputTransform::Affine { offset, .. } => offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    #[default]
    Sine,
    Cosine,
}

impl BasisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisKind::Sine => "sine",
            BasisKind::Cosine => "cosine",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" | "sin" => Ok(BasisKind::Sine),
            "cosine" | "cos" => Ok(BasisKind::Cosine),
            other => Err(Error::InvalidConfig(format!("unknown basis family '{other}'"))),
        }
    }
}

/// A family of regression functions indexed by one scalar frequency.
pub trait Basis {
    /// `f(beta, x)`.
    fn value(&self, beta: f64, x: f64) -> f64;

    fn evaluate(&self, beta: f64, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.value(beta, x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BasisFamily {
    pub kind: BasisKind,
    pub transform: InputTransform,
}

impl BasisFamily {
    pub fn sine() -> Self {
        BasisFamily {
            kind: BasisKind::Sine,
            transform: InputTransform::Identity,
        }
    }

    pub fn cosine() -> Self {
        BasisFamily {
            kind: BasisKind::Cosine,
            transform: InputTransform::Identity,
        }
    }

    pub fn with_transform(mut self, transform: InputTransform) -> Self {
        self.transform = transform;
        self
    }
}

impl Basis for BasisFamily {
    #[inline]
    fn value(&self, beta: f64, x: f64) -> f64 {
        let phase = beta * self.transform.apply(x);
        match self.kind {
            BasisKind::Sine => phase.sin(),
            BasisKind::Cosine => phase.cos(),
        }
    }
}

pub fn evaluate_basis<B: Basis + ?Sized>(family: &B, beta: f64, xs: &[f64]) -> Vec<f64> {
    family.evaluate(beta, xs)
}

/// `sum w_i f(beta, x_i)^2`, the denominator of the optimal amplitude.
pub fn basis_energy<B: Basis + ?Sized>(family: &B, beta: f64, d: &Dataset) -> f64 {
    d.observations()
        .iter()
        .map(|o| {
            let f = family.value(beta, o.x);
            o.w * f * f
        })
        .sum()
}

/// Closed interval of candidate frequencies sampled on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    beta_min: f64,
    beta_max: f64,
    grid_points: usize,
}

impl FrequencyBand {
    pub fn new(beta_min: f64, beta_max: f64, grid_points: usize) -> Result<Self> {
        if !beta_min.is_finite() || !beta_max.is_finite() || beta_min >= beta_max {
            return Err(Error::InvalidConfig(format!(
                "frequency band needs beta_min < beta_max, got [{beta_min}, {beta_max}]"
            )));
        }
        if grid_points < 2 {
            return Err(Error::InvalidConfig(format!(
                "frequency band needs at least 2 grid points, got {grid_points}"
            )));
        }
        Ok(FrequencyBand {
            beta_min,
            beta_max,
            grid_points,
        })
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn step(&self) -> f64 {
        (self.beta_max - self.beta_min) / (self.grid_points - 1) as f64
    }

    /// The `i`-th grid frequency; the last one is exactly `beta_max`.
    pub fn grid_value(&self, i: usize) -> f64 {
        if i + 1 == self.grid_points {
            self.beta_max
        } else {
            self.beta_min + i as f64 * self.step()
        }
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.grid_points).map(move |i| self.grid_value(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use proptest::prelude::*;

    use crate::dataset::Observation;

    #[test]
    fn evaluate_examples() {
        let sine = BasisFamily::sine();
        assert_eq!(evaluate_basis(&sine, 3.7, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(evaluate_basis(&sine, 1.0, &[FRAC_PI_2]), vec![1.0]);

        let scaled = sine.with_transform(InputTransform::affine(2.0, 0.0).unwrap());
        let v = evaluate_basis(&scaled, 1.0, &[FRAC_PI_4]);
        assert!((v[0] - (1.0f64 * 2.0 * FRAC_PI_4).sin()).abs() < 1e-15);
        assert!((v[0] - 1.0).abs() < 1e-15);

        assert_eq!(evaluate_basis(&BasisFamily::cosine(), 0.0, &[5.0]), vec![1.0]);
        assert!(evaluate_basis(&sine, 1.0, &[]).is_empty());
    }

    #[test]
    fn energy_examples() {
        let d = Dataset::from_xy(&[0.3, 1.7, -4.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(basis_energy(&BasisFamily::sine(), 0.0, &d), 0.0);

        let d = Dataset::from_xy(&[FRAC_PI_2, 3.0 * FRAC_PI_2], &[0.0, 0.0]).unwrap();
        assert!((basis_energy(&BasisFamily::sine(), 1.0, &d) - 2.0).abs() < 1e-15);

        let d = Dataset::from_xy(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!(basis_energy(&BasisFamily::sine(), PI, &d) < 1e-12);
    }

    #[test]
    fn transform_validation() {
        assert!(InputTransform::affine(0.0, 1.0).is_err());
        assert!(InputTransform::affine(f64::NAN, 1.0).is_err());
        assert!(InputTransform::span_two_pi(&[1.0, 1.0]).is_err());
        let t = InputTransform::span_two_pi(&[2.0, -1.0, 5.0]).unwrap();
        assert!((t.apply(-1.0)).abs() < 1e-15);
        assert!((t.apply(5.0) - TAU).abs() < 1e-12);
        assert_eq!(InputTransform::Identity.scale(), 1.0);
        assert_eq!(InputTransform::Identity.offset(), 0.0);
    }

    #[test]
    fn band_validation_and_grid() {
        assert!(FrequencyBand::new(1.0, 1.0, 10).is_err());
        assert!(FrequencyBand::new(2.0, 1.0, 10).is_err());
        assert!(FrequencyBand::new(0.0, 1.0, 1).is_err());
        let b = FrequencyBand::new(0.1, 3.0, 30).unwrap();
        let g: Vec<f64> = b.grid().collect();
        assert_eq!(g.len(), 30);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[29], 3.0);
        assert!((g[1] - g[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("sine".parse::<BasisKind>().unwrap(), BasisKind::Sine);
        assert_eq!("cosine".parse::<BasisKind>().unwrap(), BasisKind::Cosine);
        assert!("tan".parse::<BasisKind>().is_err());
    }

    fn dataset_strategy() -> impl Strategy<Value = Dataset> {
        prop::collection::vec((-50.0..50.0f64, -5.0..5.0f64, 0.01..5.0f64), 1..30).prop_map(|rows| {
            Dataset::new(rows.into_iter().map(|(x, y, w)| Observation::new(x, y, w)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn values_are_bounded(beta in -20.0..20.0f64, xs in prop::collection::vec(-100.0..100.0f64, 0..20)) {
            for family in [BasisFamily::sine(), BasisFamily::cosine()] {
                for v in evaluate_basis(&family, beta, &xs) {
                    prop_assert!((-1.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn energy_bounded_by_total_weight(beta in -20.0..20.0f64, d in dataset_strategy()) {
            for family in [BasisFamily::sine(), BasisFamily::cosine()] {
                let e = basis_energy(&family, beta, &d);
                prop_assert!(e >= 0.0);
                prop_assert!(e <= d.total_weight() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn sine_is_odd_in_beta(beta in -20.0..20.0f64, xs in prop::collection::vec(-100.0..100.0f64, 0..20)) {
            let s = BasisFamily::sine();
            let pos = evaluate_basis(&s, beta, &xs);
            let neg = evaluate_basis(&s, -beta, &xs);
            for (p, n) in pos.iter().zip(&neg) {
                prop_assert_eq!(*p, -*n);
            }
        }
    }
}
