//! C ABI for the iterfit series regression engine.
//!
//! Models and reports are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an
//! [`IterfitStatus`]; on failure [`iterfit_last_error_message`] describes
//! what went wrong on the calling thread.
//!
//! Strings returned through out-parameters are allocated here and must be
//! released with [`iterfit_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use iterfit::{
    fit, BaseKind, BasisFamily, BasisKind, Dataset, Error, FitConfig, FitReport, FrequencyBand, InputTransform,
    Observation, SeriesModel, StopReason,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterfitStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad configuration or argument value.
    InvalidArgument = 2,
    /// Empty dataset, non-finite values, non-positive weights.
    InvalidData = 3,
    /// The data admits no fit (for example every input maps to zero).
    FitFailed = 4,
    ParseError = 5,
    UnsupportedVersion = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterfitFamily {
    Sine = 0,
    Cosine = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterfitBase {
    Zero = 0,
    Constant = 1,
    Linear = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterfitTransform {
    Identity = 0,
    /// `g(x) = transform_scale * x + transform_offset`.
    Affine = 1,
    /// Affine map sending the data's x range onto [0, 2*pi].
    SpanTwoPi = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterfitStopReason {
    SsTargetReached = 0,
    MaxIterations = 1,
    NoImprovingCandidate = 2,
    ValidationWorsened = 3,
}

/// Fit settings. Start from [`iterfit_config_default`] and override fields.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterfitConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub grid_points: usize,
    pub refine_steps: usize,
    pub max_iterations: usize,
    pub ss_target: f64,
    pub min_relative_decrease: f64,
    /// 0 disables validation and early stopping.
    pub validation_fraction: f64,
    pub validation_patience: usize,
    pub seed: u64,
    pub family: IterfitFamily,
    pub base: IterfitBase,
    pub transform: IterfitTransform,
    /// Only read when `transform` is `Affine`.
    pub transform_scale: f64,
    pub transform_offset: f64,
}

/// Opaque fitted model.
pub struct IterfitModel {
    inner: SeriesModel,
}

/// Opaque fit report.
pub struct IterfitReport {
    inner: FitReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> IterfitStatus {
    match e {
        Error::InvalidConfig(_) | Error::LengthMismatch { .. } | Error::TooFewPoints { .. } => {
            IterfitStatus::InvalidArgument
        }
        Error::EmptyDataset | Error::NonPositiveWeight { .. } | Error::NonFiniteValue { .. } => {
            IterfitStatus::InvalidData
        }
        Error::Parse { .. } => IterfitStatus::ParseError,
        Error::UnsupportedVersion(_) => IterfitStatus::UnsupportedVersion,
        Error::DegenerateBasis
        | Error::NoViableCandidate
        | Error::AllInputsZero
        | Error::MissingValidationSs { .. } => IterfitStatus::FitFailed,
        Error::Io(_) => IterfitStatus::Internal,
    }
}

struct Failure(IterfitStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(IterfitStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, records any error or panic, and maps it to a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> IterfitStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IterfitStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            IterfitStatus::Internal
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `p` points at `n` readable doubles.
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(IterfitStatus::Internal, "string contains NUL".into()))
}

impl Default for IterfitConfig {
    fn default() -> Self {
        let d = FitConfig::default();
        IterfitConfig {
            beta_min: d.band.beta_min(),
            beta_max: d.band.beta_max(),
            grid_points: d.band.grid_points(),
            refine_steps: d.refine_steps,
            max_iterations: d.max_iterations,
            ss_target: d.ss_target,
            min_relative_decrease: d.min_relative_decrease,
            validation_fraction: d.validation_fraction,
            validation_patience: d.validation_patience,
            seed: d.seed,
            family: IterfitFamily::Sine,
            base: IterfitBase::Constant,
            transform: IterfitTransform::Identity,
            transform_scale: 1.0,
            transform_offset: 0.0,
        }
    }
}

impl IterfitConfig {
    fn to_fit_config(self, data: &Dataset) -> Result<FitConfig, Error> {
        let transform = match self.transform {
            IterfitTransform::Identity => InputTransform::Identity,
            IterfitTransform::Affine => InputTransform::affine(self.transform_scale, self.transform_offset)?,
            IterfitTransform::SpanTwoPi => InputTransform::span_two_pi(&data.xs())?,
        };
        let kind = match self.family {
            IterfitFamily::Sine => BasisKind::Sine,
            IterfitFamily::Cosine => BasisKind::Cosine,
        };
        let cfg = FitConfig {
            band: FrequencyBand::new(self.beta_min, self.beta_max, self.grid_points)?,
            refine_steps: self.refine_steps,
            max_iterations: self.max_iterations,
            ss_target: self.ss_target,
            min_relative_decrease: self.min_relative_decrease,
            validation_fraction: self.validation_fraction,
            validation_patience: self.validation_patience,
            seed: self.seed,
            family: BasisFamily { kind, transform },
            base: match self.base {
                IterfitBase::Zero => BaseKind::Zero,
                IterfitBase::Constant => BaseKind::Constant,
                IterfitBase::Linear => BaseKind::Linear,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fills `out` with the library defaults.
///
/// # Safety
/// `out` must be null or point to writable memory for one `IterfitConfig`.
#[no_mangle]
pub unsafe extern "C" fn iterfit_config_default(out: *mut IterfitConfig) -> IterfitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; caller guarantees validity.
        unsafe { out.write(IterfitConfig::default()) };
        Ok(())
    })
}

/// Fits a series to `n` observations. `ws` may be null for unit weights.
/// `config` may be null for defaults; `out_report` may be null when the
/// report is not wanted. On success `*out_model` owns a new model.
///
/// # Safety
/// `xs`, `ys` and non-null `ws` must each point to `n` doubles; `config`
/// must be null or valid; the out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn iterfit_fit(
    xs: *const f64,
    ys: *const f64,
    ws: *const f64,
    n: usize,
    config: *const IterfitConfig,
    out_model: *mut *mut IterfitModel,
    out_report: *mut *mut IterfitReport,
) -> IterfitStatus {
    guard(|| {
        if out_model.is_null() {
            return Err(null("out_model"));
        }
        // SAFETY: forwarded caller contract.
        let (xs, ys) = unsafe { (slice(xs, n, "xs")?, slice(ys, n, "ys")?) };
        let obs: Vec<Observation> = if ws.is_null() {
            xs.iter()
                .zip(ys)
                .map(|(&x, &y)| Observation::unweighted(x, y))
                .collect()
        } else {
            // SAFETY: as above.
            let ws = unsafe { slice(ws, n, "ws")? };
            xs.iter()
                .zip(ys)
                .zip(ws)
                .map(|((&x, &y), &w)| Observation::new(x, y, w))
                .collect()
        };
        let data = Dataset::new(obs)?;
        let cfg = if config.is_null() {
            IterfitConfig::default()
        } else {
            // SAFETY: non-null and valid per contract.
            unsafe { *config }
        };
        let (model, report) = fit(&data, &cfg.to_fit_config(&data)?)?;
        // SAFETY: out-pointers checked or null-tested here.
        unsafe {
            out_model.write(Box::into_raw(Box::new(IterfitModel { inner: model })));
            if !out_report.is_null() {
                out_report.write(Box::into_raw(Box::new(IterfitReport { inner: report })));
            }
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iterfit_model_predict(model: *const IterfitModel, x: f64, out: *mut f64) -> IterfitStatus {
    guard(|| {
        // SAFETY: caller contract.
        let m = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { out.write(m.inner.predict(x)) };
        Ok(())
    })
}

/// Evaluates the model at `n` points, writing `n` values to `out`.
///
/// # Safety
/// `xs` must hold `n` doubles and `out` room for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn iterfit_model_predict_many(
    model: *const IterfitModel,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> IterfitStatus {
    guard(|| {
        // SAFETY: caller contract.
        let m = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        let xs = unsafe { slice(xs, n, "xs")? };
        if n == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let out = unsafe { std::slice::from_raw_parts_mut(out, n) };
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = m.inner.predict(x);
        }
        Ok(())
    })
}

/// Number of series terms; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iterfit_model_term_count(model: *const IterfitModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.inner.terms.len())
}

/// Reads term `index`. Any out-pointer may be null.
///
/// # Safety
/// `model` must be a live handle; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn iterfit_model_term(
    model: *const IterfitModel,
    index: usize,
    kind: *mut IterfitFamily,
    beta: *mut f64,
    alpha: *mut f64,
) -> IterfitStatus {
    guard(|| {
        let m = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        let t = m.inner.terms.get(index).ok_or_else(|| {
            Failure(
                IterfitStatus::InvalidArgument,
                format!("term index {index} out of range ({} terms)", m.inner.terms.len()),
            )
        })?;
        unsafe {
            if !kind.is_null() {
                kind.write(match t.kind {
                    BasisKind::Sine => IterfitFamily::Sine,
                    BasisKind::Cosine => IterfitFamily::Cosine,
                });
            }
            if !beta.is_null() {
                beta.write(t.beta);
            }
            if !alpha.is_null() {
                alpha.write(t.alpha);
            }
        }
        Ok(())
    })
}

/// Serializes the model; free `*out` with [`iterfit_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iterfit_model_to_json(model: *const IterfitModel, out: *mut *mut c_char) -> IterfitStatus {
    guard(|| {
        let m = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = to_c_string(m.inner.serialize())?;
        unsafe { out.write(s) };
        Ok(())
    })
}

/// Parses a model file's text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iterfit_model_from_json(
    json: *const c_char,
    out_model: *mut *mut IterfitModel,
) -> IterfitStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out_model.is_null() {
            return Err(null("out_model"));
        }
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| Failure(IterfitStatus::ParseError, format!("model text is not UTF-8: {e}")))?;
        let model = SeriesModel::deserialize(text)?;
        unsafe { out_model.write(Box::into_raw(Box::new(IterfitModel { inner: model }))) };
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn iterfit_model_free(model: *mut IterfitModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// SS of the base model alone; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iterfit_report_initial_ss(report: *const IterfitReport) -> f64 {
    unsafe { report.as_ref() }.map_or(f64::NAN, |r| r.inner.initial_ss)
}

/// Training SS of the returned (possibly truncated) model.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iterfit_report_final_ss(report: *const IterfitReport) -> f64 {
    unsafe { report.as_ref() }.map_or(f64::NAN, |r| r.inner.final_ss())
}

/// Number of iterations run, including any later truncated away.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iterfit_report_iterations(report: *const IterfitReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.inner.records.len())
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iterfit_report_stop_reason(
    report: *const IterfitReport,
    out: *mut IterfitStopReason,
) -> IterfitStatus {
    guard(|| {
        let r = unsafe { report.as_ref() }.ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let reason = match r.inner.stop_reason {
            StopReason::SsTargetReached => IterfitStopReason::SsTargetReached,
            StopReason::MaxIterations => IterfitStopReason::MaxIterations,
            StopReason::NoImprovingCandidate => IterfitStopReason::NoImprovingCandidate,
            StopReason::ValidationWorsened => IterfitStopReason::ValidationWorsened,
        };
        unsafe { out.write(reason) };
        Ok(())
    })
}

/// Report as JSON; free `*out` with [`iterfit_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iterfit_report_to_json(report: *const IterfitReport, out: *mut *mut c_char) -> IterfitStatus {
    guard(|| {
        let r = unsafe { report.as_ref() }.ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = to_c_string(r.inner.to_json())?;
        unsafe { out.write(s) };
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn iterfit_report_free(report: *mut IterfitReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn iterfit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn iterfit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Model file format version written by this library.
#[no_mangle]
pub extern "C" fn iterfit_format_version() -> u32 {
    iterfit::model::FORMAT_VERSION as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        assert_eq!(status_of(&Error::EmptyDataset), IterfitStatus::InvalidData);
        assert_eq!(
            status_of(&Error::UnsupportedVersion(3)),
            IterfitStatus::UnsupportedVersion
        );
        assert_eq!(status_of(&Error::AllInputsZero), IterfitStatus::FitFailed);
        assert_eq!(
            status_of(&Error::InvalidConfig("x".into())),
            IterfitStatus::InvalidArgument
        );
    }

    #[test]
    fn config_conversion() {
        let data = Dataset::from_xy(&[2.0, 4.0], &[0.0, 1.0]).unwrap();
        let cfg = IterfitConfig {
            transform: IterfitTransform::SpanTwoPi,
            family: IterfitFamily::Cosine,
            base: IterfitBase::Linear,
            ..IterfitConfig::default()
        }
        .to_fit_config(&data)
        .unwrap();
        assert_eq!(cfg.family.kind, BasisKind::Cosine);
        assert_eq!(cfg.base, BaseKind::Linear);
        assert!((cfg.family.transform.apply(4.0) - std::f64::consts::TAU).abs() < 1e-12);

        let affine = IterfitConfig {
            transform: IterfitTransform::Affine,
            transform_scale: 0.0,
            ..IterfitConfig::default()
        };
        assert!(affine.to_fit_config(&data).is_err());
        let no_patience = IterfitConfig {
            validation_patience: 0,
            ..IterfitConfig::default()
        };
        assert!(no_patience.to_fit_config(&data).is_err());
    }

    #[test]
    fn guard_catches_panics() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, IterfitStatus::Internal);
        assert!(!iterfit_last_error_message().is_null());
        assert_eq!(guard(|| Ok(())), IterfitStatus::Ok);
        assert!(iterfit_last_error_message().is_null());
    }
}
