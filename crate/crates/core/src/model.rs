//! Fitted series models and their on-disk format.
//!
//! The model file is versioned JSON:
//!
//! ```json
//! {
//!   "version": 1,
//!   "base": { "kind": "constant", "params": [237.8] },
//!   "transform": { "kind": "identity", "scale": 1.0, "offset": 0.0 },
//!   "terms": [ { "kind": "sine", "beta": 1.0, "alpha": 11.02 } ],
//!   "metadata": { "final_ss": 301.62, "iterations": 1 }
//! }
//! ```
//!
//! Numbers are written in shortest round-trip form, so a parsed model has
//! bit-identical parameters.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, InputTransform};
use crate::error::{Error, Result};
use crate::fitter::{BaseKind, BaseModel};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub kind: BasisKind,
    pub beta: f64,
    pub alpha: f64,
}

impl Term {
    pub fn sine(alpha: f64, beta: f64) -> Self {
        Term {
            kind: BasisKind::Sine,
            beta,
            alpha,
        }
    }

    /// Contribution `alpha * f(beta, g(x))` where `gx = g(x)`.
    #[inline]
    pub fn value_at(&self, gx: f64) -> f64 {
        let phase = self.beta * gx;
        self.alpha
            * match self.kind {
                BasisKind::Sine => phase.sin(),
                BasisKind::Cosine => phase.cos(),
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    pub final_ss: f64,
    pub iterations: usize,
}

/// Base model plus an ordered list of terms, in fitting order.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesModel {
    pub base: BaseModel,
    pub transform: InputTransform,
    pub terms: Vec<Term>,
    pub metadata: ModelMetadata,
}

impl SeriesModel {
    pub fn new(base: BaseModel, transform: InputTransform, terms: Vec<Term>) -> Self {
        let iterations = terms.len();
        SeriesModel {
            base,
            transform,
            terms,
            metadata: ModelMetadata {
                final_ss: 0.0,
                iterations,
            },
        }
    }

    pub fn predict(&self, x: f64) -> f64 {
        let gx = self.transform.apply(x);
        self.terms
            .iter()
            .fold(self.base.predict(x), |acc, t| acc + t.value_at(gx))
    }

    pub fn predict_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.predict(x)).collect()
    }

    pub fn serialize(&self) -> String {
        let file = ModelFile {
            version: FORMAT_VERSION,
            base: BaseSection {
                kind: self.base.kind(),
                params: self.base.params(),
            },
            transform: TransformSection {
                kind: match self.transform {
                    InputTransform::Identity => TransformKind::Identity,
                    InputTransform::Affine { .. } => TransformKind::Affine,
                },
                scale: self.transform.scale(),
                offset: self.transform.offset(),
            },
            terms: self.terms.clone(),
            metadata: self.metadata,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serialises");
        s.push('\n');
        s
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
        let version = probe
            .get("version")
            .ok_or_else(|| Error::Parse {
                line: 1,
                column: 1,
                message: "missing version field".into(),
            })?
            .as_u64()
            .ok_or_else(|| Error::Parse {
                line: 1,
                column: 1,
                message: "version must be a non-negative integer".into(),
            })?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let file: ModelFile = serde_json::from_str(text).map_err(parse_error)?;
        file.into_model()
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn invalid(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message: message.into(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u64,
    base: BaseSection,
    transform: TransformSection,
    terms: Vec<Term>,
    metadata: ModelMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseSection {
    kind: BaseKind,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum TransformKind {
    Identity,
    Affine,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformSection {
    kind: TransformKind,
    scale: f64,
    offset: f64,
}

impl ModelFile {
    fn into_model(self) -> Result<SeriesModel> {
        let base = BaseModel::from_parts(self.base.kind, &self.base.params).map_err(|e| invalid(e.to_string()))?;
        let transform = match self.transform.kind {
            TransformKind::Identity => {
                if self.transform.scale != 1.0 || self.transform.offset != 0.0 {
                    return Err(invalid("identity transform must have scale 1 and offset 0"));
                }
                InputTransform::Identity
            }
            TransformKind::Affine => InputTransform::affine(self.transform.scale, self.transform.offset)
                .map_err(|e| invalid(e.to_string()))?,
        };
        if let Some(i) = self
            .terms
            .iter()
            .position(|t| !t.alpha.is_finite() || !t.beta.is_finite())
        {
            return Err(invalid(format!("term {i} has a non-finite parameter")));
        }
        Ok(SeriesModel {
            base,
            transform,
            terms: self.terms,
            metadata: self.metadata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use proptest::prelude::*;

    pub(crate) fn eclipse_series() -> SeriesModel {
        SeriesModel::new(
            BaseModel::Constant(237.23),
            InputTransform::Identity,
            vec![
                Term::sine(11.02, 1.00),
                Term::sine(-8.33, 1.14),
                Term::sine(4.58, 0.88),
                Term::sine(-2.20, 1.31),
                Term::sine(-1.81, 1.61),
                Term::sine(1.53, 1.07),
            ],
        )
    }

    #[test]
    fn predict_at_origin_is_base() {
        assert_eq!(eclipse_series().predict(0.0), 237.23);
    }

    #[test]
    fn empty_zero_model_predicts_zero() {
        let m = SeriesModel::new(BaseModel::Zero, InputTransform::Identity, vec![]);
        for x in [-3.0, 0.0, 1e6] {
            assert_eq!(m.predict(x), 0.0);
        }
        assert!(m.predict_many(&[]).is_empty());
    }

    #[test]
    fn predict_many_matches_predict() {
        let m = eclipse_series();
        let xs = [2.5, 2.5, -7.0];
        let ys = m.predict_many(&xs);
        assert_eq!(ys[0], ys[1]);
        assert_eq!(ys[2], m.predict(-7.0));
    }

    #[test]
    fn round_trip_keeps_parameters() {
        let m = eclipse_series();
        let back = SeriesModel::deserialize(&m.serialize()).unwrap();
        assert_eq!(back, m);
        let pairs: Vec<(f64, f64)> = back.terms.iter().map(|t| (t.alpha, t.beta)).collect();
        assert_eq!(
            pairs,
            vec![
                (11.02, 1.0),
                (-8.33, 1.14),
                (4.58, 0.88),
                (-2.2, 1.31),
                (-1.81, 1.61),
                (1.53, 1.07)
            ]
        );
    }

    #[test]
    fn affine_and_linear_round_trip() {
        let m = SeriesModel::new(
            BaseModel::Linear {
                intercept: 0.1 + 0.2,
                slope: -1.0 / 3.0,
            },
            InputTransform::affine(std::f64::consts::PI / 7.0, -0.25).unwrap(),
            vec![Term {
                kind: BasisKind::Cosine,
                beta: 2.0f64.sqrt(),
                alpha: 1e-300,
            }],
        );
        assert_eq!(SeriesModel::deserialize(&m.serialize()).unwrap(), m);
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        assert!(matches!(SeriesModel::deserialize(""), Err(Error::Parse { .. })));
        assert!(matches!(SeriesModel::deserialize("{"), Err(Error::Parse { .. })));
        assert!(matches!(SeriesModel::deserialize("{}"), Err(Error::Parse { .. })));
        let text = eclipse_series()
            .serialize()
            .replace("\"beta\": 1.14", "\"beta\": \"x\"");
        match SeriesModel::deserialize(&text) {
            Err(Error::Parse { line, .. }) => assert!(line > 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tampered_version_is_rejected() {
        let text = eclipse_series().serialize().replace("\"version\": 1", "\"version\": 2");
        assert_eq!(SeriesModel::deserialize(&text), Err(Error::UnsupportedVersion(2)));
    }

    #[test]
    fn bad_transform_is_rejected() {
        let text = eclipse_series()
            .serialize()
            .replace("\"kind\": \"identity\"", "\"kind\": \"affine\"")
            .replace("\"scale\": 1.0", "\"scale\": 0.0");
        assert!(matches!(SeriesModel::deserialize(&text), Err(Error::Parse { .. })));
    }

    fn any_finite() -> impl Strategy<Value = f64> {
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
    }

    proptest! {
        #[test]
        fn serialized_numbers_round_trip_bit_exactly(
            c in any_finite(),
            terms in prop::collection::vec((any_finite(), any_finite(), any::<bool>()), 0..8),
        ) {
            let m = SeriesModel::new(
                BaseModel::Constant(c),
                InputTransform::Identity,
                terms
                    .into_iter()
                    .map(|(alpha, beta, cos)| Term {
                        kind: if cos { BasisKind::Cosine } else { BasisKind::Sine },
                        beta,
                        alpha,
                    })
                    .collect(),
            );
            let text = m.serialize();
            let back = SeriesModel::deserialize(&text).unwrap();
            prop_assert_eq!(back.base.params()[0].to_bits(), c.to_bits());
            for (a, b) in back.terms.iter().zip(&m.terms) {
                prop_assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
                prop_assert_eq!(a.beta.to_bits(), b.beta.to_bits());
            }
            prop_assert_eq!(back.serialize(), text);
        }
    }
}
