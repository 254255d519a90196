//! Greedy series fitting.
//!
//! Each iteration projects the current residuals onto one basis function
//! `f(beta, .)`. For a fixed frequency the optimal amplitude is
//!
//! ```text
//! alpha = sum w r f / sum w f^2
//! ```
//!
//! and adding `alpha * f` lowers the weighted sum of squares by exactly
//! `alpha^2 * sum w f^2`. The frequency itself is chosen by scanning a
//! uniform grid for the largest such decrease and polishing the winner with
//! a golden-section search inside its two neighbouring grid cells.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisFamily, BasisKind, FrequencyBand};
use crate::dataset::{residuals, Dataset, ResidualVector};
use crate::error::{Error, Result};
use crate::model::{ModelMetadata, SeriesModel, Term};

/// Candidates with `sum w f^2` below this fraction of the total weight are
/// treated as vanishing on the sample.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Zero,
    #[default]
    Constant,
    Linear,
}

impl std::str::FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(BaseKind::Zero),
            "constant" => Ok(BaseKind::Constant),
            "linear" => Ok(BaseKind::Linear),
            other => Err(Error::InvalidConfig(format!("unknown base model '{other}'"))),
        }
    }
}

/// The initial approximation the series is grown on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseModel {
    Zero,
    Constant(f64),
    Linear { intercept: f64, slope: f64 },
}

impl BaseModel {
    #[inline]
    pub fn predict(&self, x: f64) -> f64 {
        match *self {
            BaseModel::Zero => 0.0,
            BaseModel::Constant(c) => c,
            BaseModel::Linear { intercept, slope } => intercept + slope * x,
        }
    }

    pub fn kind(&self) -> BaseKind {
        match self {
            BaseModel::Zero => BaseKind::Zero,
            BaseModel::Constant(_) => BaseKind::Constant,
            BaseModel::Linear { .. } => BaseKind::Linear,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            BaseModel::Zero => vec![],
            BaseModel::Constant(c) => vec![c],
            BaseModel::Linear { intercept, slope } => vec![intercept, slope],
        }
    }

    pub fn from_parts(kind: BaseKind, params: &[f64]) -> Result<Self> {
        let want = match kind {
            BaseKind::Zero => 0,
            BaseKind::Constant => 1,
            BaseKind::Linear => 2,
        };
        if params.len() != want {
            return Err(Error::InvalidConfig(format!(
                "{kind:?} base model takes {want} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("base model parameters must be finite".into()));
        }
        Ok(match kind {
            BaseKind::Zero => BaseModel::Zero,
            BaseKind::Constant => BaseModel::Constant(params[0]),
            BaseKind::Linear => BaseModel::Linear {
                intercept: params[0],
                slope: params[1],
            },
        })
    }
}

/// Fits the requested base model by weighted least squares.
///
/// A linear base on data with a single distinct x degrades to a flat line at
/// the weighted mean.
pub fn make_base_model(d: &Dataset, kind: BaseKind) -> BaseModel {
    let sw = d.total_weight();
    let mean_y = d.observations().iter().map(|o| o.w * o.y).sum::<f64>() / sw;
    match kind {
        BaseKind::Zero => BaseModel::Zero,
        BaseKind::Constant => BaseModel::Constant(mean_y),
        BaseKind::Linear => {
            let mean_x = d.observations().iter().map(|o| o.w * o.x).sum::<f64>() / sw;
            let (sxy, sxx) = d.observations().iter().fold((0.0, 0.0), |(sxy, sxx), o| {
                let dx = o.x - mean_x;
                (sxy + o.w * dx * (o.y - mean_y), sxx + o.w * dx * dx)
            });
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            BaseModel::Linear {
                intercept: mean_y - slope * mean_x,
                slope,
            }
        }
    }
}

/// Amplitude minimising `sum w (r - t f)^2` over `t`.
pub fn optimal_coefficient(r: &ResidualVector, w: &[f64], f: &[f64]) -> Result<f64> {
    let n = r.len();
    for len in [w.len(), f.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let (num, energy) = projection(r.values(), w, f);
    if !(energy > 0.0) {
        return Err(Error::DegenerateBasis);
    }
    Ok(num / energy)
}

#[inline]
fn projection(r: &[f64], w: &[f64], f: &[f64]) -> (f64, f64) {
    r.iter().zip(w).zip(f).fold((0.0, 0.0), |(num, den), ((ri, wi), fi)| {
        (num + wi * ri * fi, den + wi * fi * fi)
    })
}

/// Best frequency found by [`search_beta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaCandidate {
    pub beta: f64,
    pub alpha: f64,
    pub ss_decrease: f64,
}

struct Objective<'a, B: ?Sized> {
    family: &'a B,
    xs: Vec<f64>,
    ws: Vec<f64>,
    r: &'a [f64],
    min_energy: f64,
    scratch: Vec<f64>,
}

impl<B: Basis + ?Sized> Objective<'_, B> {
    /// `(alpha, decrease)` at `beta`, or `None` for a degenerate candidate.
    fn eval(&mut self, beta: f64) -> Option<(f64, f64)> {
        self.scratch.clear();
        self.scratch.extend(self.xs.iter().map(|&x| self.family.value(beta, x)));
        let (num, energy) = projection(self.r, &self.ws, &self.scratch);
        if !(energy >= self.min_energy) || energy == 0.0 {
            return None;
        }
        let alpha = num / energy;
        Some((alpha, num * alpha))
    }
}

/// Searches the band for the frequency whose optimally scaled basis function
/// removes the most weighted sum of squares from the residuals `r`.
///
/// Grid ties go to the smaller frequency. The refinement only replaces the
/// grid winner when it finds a strictly larger decrease.
pub fn search_beta<B: Basis + ?Sized>(
    d: &Dataset,
    r: &ResidualVector,
    family: &B,
    band: &FrequencyBand,
    refine_steps: usize,
) -> Result<BetaCandidate> {
    if r.len() != d.len() {
        return Err(Error::LengthMismatch {
            expected: d.len(),
            actual: r.len(),
        });
    }
    let mut obj = Objective {
        family,
        xs: d.xs(),
        ws: d.weights(),
        r: r.values(),
        min_energy: DEGENERACY_THRESHOLD * d.total_weight(),
        scratch: Vec::with_capacity(d.len()),
    };

    let mut best: Option<(usize, BetaCandidate)> = None;
    for i in 0..band.grid_points() {
        let beta = band.grid_value(i);
        if let Some((alpha, dec)) = obj.eval(beta) {
            if best.is_none_or(|(_, b)| dec > b.ss_decrease) {
                best = Some((
                    i,
                    BetaCandidate {
                        beta,
                        alpha,
                        ss_decrease: dec,
                    },
                ));
            }
        }
    }
    let (idx, mut incumbent) = match best {
        Some((i, c)) if c.ss_decrease > 0.0 => (i, c),
        _ => return Err(Error::NoViableCandidate),
    };

    if refine_steps > 0 {
        let lo = band.grid_value(idx.saturating_sub(1));
        let hi = band.grid_value((idx + 1).min(band.grid_points() - 1));
        golden_section_max(&mut obj, lo, hi, refine_steps, &mut incumbent);
    }
    Ok(incumbent)
}

fn golden_section_max<B: Basis + ?Sized>(
    obj: &mut Objective<'_, B>,
    mut a: f64,
    mut b: f64,
    steps: usize,
    incumbent: &mut BetaCandidate,
) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;

    let probe = |obj: &mut Objective<'_, B>, beta: f64, inc: &mut BetaCandidate| -> f64 {
        match obj.eval(beta) {
            Some((alpha, dec)) => {
                if dec > inc.ss_decrease {
                    *inc = BetaCandidate {
                        beta,
                        alpha,
                        ss_decrease: dec,
                    };
                }
                dec
            }
            None => 0.0,
        }
    };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = probe(obj, c, incumbent);
    let mut fd = probe(obj, d, incumbent);
    for _ in 0..steps {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = probe(obj, c, incumbent);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = probe(obj, d, incumbent);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SsTargetReached,
    MaxIterations,
    NoImprovingCandidate,
    ValidationWorsened,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::SsTargetReached => "ss_target_reached",
            StopReason::MaxIterations => "max_iterations",
            StopReason::NoImprovingCandidate => "no_improving_candidate",
            StopReason::ValidationWorsened => "validation_worsened",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub beta: f64,
    pub alpha: f64,
    pub train_ss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub validation_ss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub initial_ss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub initial_validation_ss: Option<f64>,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// Number of terms in the returned model; smaller than `records.len()`
    /// when early stopping truncated the series.
    pub kept_terms: usize,
}

impl FitReport {
    /// Training SS of the returned model.
    pub fn final_ss(&self) -> f64 {
        match self.kept_terms {
            0 => self.initial_ss,
            k => self.records[k - 1].train_ss,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub band: FrequencyBand,
    pub refine_steps: usize,
    pub max_iterations: usize,
    /// Stop once the training SS is at or below this value.
    pub ss_target: f64,
    /// Stop when the best candidate would remove less than this fraction of
    /// the current training SS.
    pub min_relative_decrease: f64,
    /// Fraction of observations held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    pub validation_patience: usize,
    pub seed: u64,
    pub family: BasisFamily,
    pub base: BaseKind,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            band: FrequencyBand::new(0.05, 3.2, 4096).expect("static band"),
            refine_steps: 60,
            max_iterations: 100,
            ss_target: 0.0,
            min_relative_decrease: 0.0,
            validation_fraction: 0.0,
            validation_patience: 3,
            seed: 0,
            family: BasisFamily::sine(),
            base: BaseKind::Constant,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.ss_target >= 0.0) {
            return bad("ss_target must be non-negative");
        }
        if !(self.min_relative_decrease >= 0.0) {
            return bad("min_relative_decrease must be non-negative");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if self.validation_patience == 0 {
            return bad("validation_patience must be positive");
        }
        Ok(())
    }
}

/// Deterministic seeded partition into `(train, validation)`.
///
/// The training side gets `round(n * (1 - fraction))` observations. Both
/// sides keep the original relative order.
pub fn split_dataset(d: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = d.len();
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n_train = (n as f64 * (1.0 - fraction)).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::TooFewPoints { n, fraction });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, val) = idx.split_at_mut(n_train);
    train.sort_unstable();
    val.sort_unstable();
    Ok((d.select(train)?, d.select(val)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStop {
    Continue,
    /// Keep this many series terms.
    Stop {
        keep_terms: usize,
    },
}

/// Applies the patience rule to a validation SS trajectory.
///
/// `initial` is the validation SS of the base model alone; when given it
/// competes as the zero-term model. Improvement means strictly smaller.
pub fn early_stopping_check(initial: Option<f64>, records: &[IterationRecord], patience: usize) -> Result<EarlyStop> {
    let mut best: Option<(usize, f64)> = initial.map(|v| (0, v));
    for (i, rec) in records.iter().enumerate() {
        let v = rec
            .validation_ss
            .ok_or(Error::MissingValidationSs { index: rec.index })?;
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i + 1, v));
        }
    }
    Ok(match best {
        Some((keep, _)) if records.len() - keep >= patience => EarlyStop::Stop { keep_terms: keep },
        _ => EarlyStop::Continue,
    })
}

/// Grows a series on `d` according to `cfg`.
///
/// When a validation fraction is set, the base model and all terms are fitted
/// on the training part only and the returned model is the prefix with the
/// lowest validation SS.
pub fn fit(d: &Dataset, cfg: &FitConfig) -> Result<(SeriesModel, FitReport)> {
    cfg.validate()?;
    let (train, validation) = if cfg.validation_fraction > 0.0 {
        if d.len() < 4 {
            return Err(Error::TooFewPoints {
                n: d.len(),
                fraction: cfg.validation_fraction,
            });
        }
        let (t, v) = split_dataset(d, cfg.validation_fraction, cfg.seed)?;
        (t, Some(v))
    } else {
        (d.clone(), None)
    };

    let family = cfg.family;
    if family.kind == BasisKind::Sine && train.observations().iter().all(|o| family.transform.apply(o.x) == 0.0) {
        return Err(Error::AllInputsZero);
    }

    let base = make_base_model(&train, cfg.base);
    let weights = train.weights();
    let base_pred: Vec<f64> = train.observations().iter().map(|o| base.predict(o.x)).collect();
    let mut r = residuals(&train, &base_pred)?;
    let initial_ss = r.weighted_ss(&weights);

    let mut val_state = validation.as_ref().map(|v| {
        let pred: Vec<f64> = v.observations().iter().map(|o| base.predict(o.x)).collect();
        let rv = residuals(v, &pred).expect("lengths match");
        (v.xs(), v.weights(), rv)
    });
    let initial_validation_ss = val_state.as_ref().map(|(_, w, rv)| rv.weighted_ss(w));

    let xs = train.xs();
    let mut terms: Vec<Term> = Vec::new();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut current_ss = initial_ss;
    let mut keep_terms = None;

    let stop_reason = 'fit: {
        if current_ss <= cfg.ss_target {
            break 'fit StopReason::SsTargetReached;
        }
        for index in 1..=cfg.max_iterations {
            let cand = match search_beta(&train, &r, &family, &cfg.band, cfg.refine_steps) {
                Ok(c) => c,
                Err(Error::NoViableCandidate) => break 'fit StopReason::NoImprovingCandidate,
                Err(e) => return Err(e),
            };
            if cand.ss_decrease < cfg.min_relative_decrease * current_ss {
                break 'fit StopReason::NoImprovingCandidate;
            }
            let f = family.evaluate(cand.beta, &xs);
            let mut next = r.clone();
            next.subtract_scaled(cand.alpha, &f);
            let next_ss = next.weighted_ss(&weights);
            if !(next_ss < current_ss) {
                // the decrease is below rounding noise
                break 'fit StopReason::NoImprovingCandidate;
            }
            r = next;
            current_ss = next_ss;
            terms.push(Term {
                kind: family.kind,
                beta: cand.beta,
                alpha: cand.alpha,
            });

            let validation_ss = val_state.as_mut().map(|(vx, vw, rv)| {
                rv.subtract_scaled(cand.alpha, &family.evaluate(cand.beta, vx));
                rv.weighted_ss(vw)
            });
            records.push(IterationRecord {
                index,
                beta: cand.beta,
                alpha: cand.alpha,
                train_ss: current_ss,
                validation_ss,
            });

            if current_ss <= cfg.ss_target {
                break 'fit StopReason::SsTargetReached;
            }
            if val_state.is_some() {
                if let EarlyStop::Stop { keep_terms: k } =
                    early_stopping_check(initial_validation_ss, &records, cfg.validation_patience)?
                {
                    keep_terms = Some(k);
                    break 'fit StopReason::ValidationWorsened;
                }
            }
        }
        StopReason::MaxIterations
    };

    let kept = keep_terms.unwrap_or(terms.len());
    terms.truncate(kept);
    let report = FitReport {
        initial_ss,
        initial_validation_ss,
        records,
        stop_reason,
        kept_terms: kept,
    };
    let model = SeriesModel {
        base,
        transform: family.transform,
        terms,
        metadata: ModelMetadata {
            final_ss: report.final_ss(),
            iterations: kept,
        },
    };
    Ok((model, report))
}
