//! Bundled per-century solar eclipse counts and the demo fit built on them.

use crate::basis::{BasisFamily, FrequencyBand, InputTransform};
use crate::dataset::{Dataset, Observation};
use crate::error::{Error, Result};
use crate::fitter::{fit, BaseKind, FitConfig, FitReport};
use crate::model::SeriesModel;

/// `century_index,count` table shipped with the crate.
pub const BUNDLED_CSV: &str = include_str!("../data/eclipses.csv");

/// Centuries used for fitting: 19th century BC through 20th century AD.
pub const TRAINING_CENTURIES: std::ops::RangeInclusive<i32> = -19..=20;
/// Centuries kept out of the demo fit.
pub const HOLDOUT_CENTURIES: std::ops::RangeInclusive<i32> = 21..=30;

pub const COUNT_RANGE: std::ops::RangeInclusive<u32> = 222..=256;

/// First centuries of the two six-century groups (18th BC and 15th BC).
pub const GROUP_A_START: i32 = -18;
pub const GROUP_B_START: i32 = -15;
pub const GROUP_LEN: usize = 7;

/// Offset added to the century index inside every sine: the series is
/// written in `n = century + 20`, which runs 1..=40 over the training window.
pub const CENTURY_SHIFT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenturyCount {
    /// Signed century index; the k-th century BC is `-k`.
    pub century: i32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EclipseDataset {
    rows: Vec<CenturyCount>,
}

impl EclipseDataset {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CSV).expect("bundled eclipse table is well formed")
    }

    /// Parses `century_index,count` rows after a header; `#` lines are
    /// comments. Indices must be unique and contiguous.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(&e, i))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let field = |k: usize| {
                rec.get(k).ok_or_else(|| Error::Parse {
                    line,
                    column: k + 1,
                    message: "missing field".into(),
                })
            };
            let century = field(0)?.parse::<i32>().map_err(|e| Error::Parse {
                line,
                column: 1,
                message: e.to_string(),
            })?;
            let count = field(1)?.parse::<u32>().map_err(|e| Error::Parse {
                line,
                column: 2,
                message: e.to_string(),
            })?;
            rows.push(CenturyCount { century, count });
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for pair in rows.windows(2) {
            if pair[1].century != pair[0].century + 1 {
                return Err(Error::InvalidConfig(format!(
                    "century indices must be contiguous: {} follows {}",
                    pair[1].century, pair[0].century
                )));
            }
        }
        Ok(EclipseDataset { rows })
    }

    pub fn rows(&self) -> &[CenturyCount] {
        &self.rows
    }

    pub fn count(&self, century: i32) -> Option<u32> {
        let first = self.rows.first()?.century;
        let i = usize::try_from(century - first).ok()?;
        self.rows.get(i).map(|r| r.count)
    }

    pub fn first_century(&self) -> i32 {
        self.rows[0].century
    }

    pub fn last_century(&self) -> i32 {
        self.rows[self.rows.len() - 1].century
    }

    /// Unit-weight dataset `(century, count)` for the centuries in `range`.
    pub fn to_dataset(&self, range: std::ops::RangeInclusive<i32>) -> Result<Dataset> {
        Dataset::new(
            self.rows
                .iter()
                .filter(|r| range.contains(&r.century))
                .map(|r| Observation::unweighted(r.century as f64, r.count as f64))
                .collect(),
        )
    }

    /// Counts every sixth century starting at `start`.
    pub fn six_century_group(&self, start: i32, len: usize) -> Option<Vec<(i32, u32)>> {
        (0..len as i32)
            .map(|k| {
                let c = start + 6 * k;
                self.count(c).map(|n| (c, n))
            })
            .collect()
    }

    pub fn count_bounds(&self) -> (u32, u32) {
        let lo = self.rows.iter().map(|r| r.count).min().unwrap_or(0);
        let hi = self.rows.iter().map(|r| r.count).max().unwrap_or(0);
        (lo, hi)
    }
}

fn csv_error(e: &csv::Error, record: usize) -> Error {
    let (line, message) = match e.position() {
        Some(p) => (p.line() as usize, e.to_string()),
        None => (record + 1, e.to_string()),
    };
    Error::Parse {
        line,
        column: 0,
        message,
    }
}

/// Traditional label of a signed century index, e.g. `-18 -> "18th BC"`.
/// Index 0 (years -99..0) has no traditional ordinal and prints as
/// `"century 0"`.
pub fn century_label(century: i32) -> String {
    if century == 0 {
        return "century 0".to_string();
    }
    let k = century.unsigned_abs();
    let suffix = match (k % 10, k % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    if century < 0 {
        format!("{k}{suffix} BC")
    } else {
        format!("{k}{suffix} AD")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoSettings {
    pub band: FrequencyBand,
    pub refine_steps: usize,
    pub iterations: usize,
    /// Offset of the sine argument relative to the century index.
    pub shift: f64,
}

impl Default for DemoSettings {
    fn default() -> Self {
        DemoSettings {
            band: FrequencyBand::new(0.05, 3.2, 4096).expect("static band"),
            refine_steps: 60,
            iterations: 6,
            shift: CENTURY_SHIFT,
        }
    }
}

impl DemoSettings {
    pub fn fit_config(&self) -> Result<FitConfig> {
        let transform = if self.shift == 0.0 {
            InputTransform::Identity
        } else {
            InputTransform::affine(1.0, self.shift)?
        };
        Ok(FitConfig {
            band: self.band,
            refine_steps: self.refine_steps,
            max_iterations: self.iterations,
            family: BasisFamily::sine().with_transform(transform),
            base: BaseKind::Constant,
            ..FitConfig::default()
        })
    }
}

#[derive(Debug, Clone)]
pub struct GroupSummary {
    pub counts: Vec<(i32, u32)>,
    pub range: u32,
}

impl GroupSummary {
    fn new(counts: Vec<(i32, u32)>) -> Self {
        let lo = counts.iter().map(|c| c.1).min().unwrap_or(0);
        let hi = counts.iter().map(|c| c.1).max().unwrap_or(0);
        GroupSummary { counts, range: hi - lo }
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub model: SeriesModel,
    pub report: FitReport,
    /// `(century, actual, fitted)` for every bundled century.
    pub plot_rows: Vec<(i32, u32, f64)>,
    pub group_a: GroupSummary,
    pub group_b: GroupSummary,
    /// SS of the fitted model over the holdout centuries.
    pub holdout_ss: f64,
}

/// Fits a constant-plus-sines series to the training centuries. The model
/// takes raw century indices; the shift lives in its input transform.
pub fn run_demo(data: &EclipseDataset, settings: &DemoSettings) -> Result<DemoOutcome> {
    let train = data.to_dataset(TRAINING_CENTURIES)?;
    let (model, report) = fit(&train, &settings.fit_config()?)?;
    let plot_rows: Vec<(i32, u32, f64)> = data
        .rows()
        .iter()
        .map(|r| (r.century, r.count, model.predict(r.century as f64)))
        .collect();
    let holdout_ss = plot_rows
        .iter()
        .filter(|r| HOLDOUT_CENTURIES.contains(&r.0))
        .map(|&(_, y, f)| (y as f64 - f).powi(2))
        .sum();
    let group = |start| {
        data.six_century_group(start, GROUP_LEN)
            .map(GroupSummary::new)
            .ok_or_else(|| Error::InvalidConfig("eclipse table does not cover the six-century groups".into()))
    };
    Ok(DemoOutcome {
        group_a: group(GROUP_A_START)?,
        group_b: group(GROUP_B_START)?,
        model,
        report,
        plot_rows,
        holdout_ss,
    })
}
