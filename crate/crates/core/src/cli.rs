//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 the fit stopped with
//! no improving candidate before reaching the SS target (outputs are still
//! written).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::basis::{BasisFamily, BasisKind, FrequencyBand, InputTransform};
use crate::dataset::{collapse_duplicates, Dataset, Observation};
use crate::eclipse::{self, DemoSettings, EclipseDataset};
use crate::error::Error;
use crate::fitter::{fit, BaseKind, FitConfig, FitReport, StopReason};
use crate::model::SeriesModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_STALLED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "iterfit", version, about = "Iterative sinusoidal series regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a series to x,y[,w] data and write model and report files.
    Fit(FitArgs),
    /// Evaluate a model at x values.
    Predict(PredictArgs),
    /// Write x, actual, fitted, residual rows for plotting.
    Plotdata(PlotArgs),
    /// Reproduce the per-century solar eclipse fit on the bundled data.
    #[command(name = "demo-eclipse")]
    DemoEclipse(DemoArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaseArg {
    Zero,
    Constant,
    Linear,
}

impl From<BaseArg> for BaseKind {
    fn from(b: BaseArg) -> Self {
        match b {
            BaseArg::Zero => BaseKind::Zero,
            BaseArg::Constant => BaseKind::Constant,
            BaseArg::Linear => BaseKind::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Sine,
    Cosine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformArg {
    Identity,
    /// Affine map of the data's x range onto [0, 2*pi].
    Span2pi,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long = "beta-min", default_value_t = 0.05)]
    pub beta_min: f64,
    #[arg(long = "beta-max", default_value_t = 3.2)]
    pub beta_max: f64,
    #[arg(long = "beta-grid", default_value_t = 4096)]
    pub beta_grid: usize,
    #[arg(long, default_value_t = 60)]
    pub refine: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Skip the first row of the input.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = BaseArg::Constant)]
    pub base: BaseArg,
    #[arg(long, value_enum, default_value_t = FamilyArg::Sine)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value_t = TransformArg::Identity)]
    pub transform: TransformArg,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long = "max-iters", default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long = "ss-target", default_value_t = 0.0)]
    pub ss_target: f64,
    #[arg(long = "min-decrease", default_value_t = 0.0)]
    pub min_decrease: f64,
    /// Fraction held out for early stopping (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub validation: f64,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Merge observations with equal x (optionally within a tolerance).
    #[arg(long = "collapse-duplicates", num_args = 0..=1, default_missing_value = "0")]
    pub collapse_duplicates: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV whose first column holds x.
    #[arg(long, conflicts_with = "x")]
    pub input: Option<PathBuf>,
    /// Inline comma-separated x values.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long)]
    pub header: bool,
    /// Print the integer part of each prediction.
    #[arg(long)]
    pub round: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// Alternative `century_index,count` table.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long = "beta-grid", default_value_t = 4096)]
    pub beta_grid: usize,
    #[arg(long, default_value_t = 60)]
    pub refine: usize,
    #[arg(long = "max-iters", default_value_t = 6)]
    pub max_iters: usize,
    /// Offset added to the century index inside each sine.
    #[arg(long, default_value_t = eclipse::CENTURY_SHIFT, allow_hyphen_values = true)]
    pub shift: f64,
    /// Also report the fit on the 21st-30th century holdout.
    #[arg(long)]
    pub holdout: bool,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }

    fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

type CliResult = std::result::Result<i32, CliError>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn std::io::Write) -> CliResult {
    match cmd {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Plotdata(a) => cmd_plotdata(a, out),
        Command::DemoEclipse(a) => cmd_demo_eclipse(a, out),
    }
}

fn read_file(path: &Path) -> std::result::Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> std::result::Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn std::io::Write, text: &str) -> std::result::Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::data(e.to_string()))
}

fn csv_reader(text: &str, header: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn parse_number(s: &str, line: u64, column: usize) -> Result<f64, Error> {
    s.parse::<f64>().map_err(|_| Error::Parse {
        line: line as usize,
        column,
        message: format!("not a number: '{s}'"),
    })
}

/// Reads `x,y` or `x,y,w` rows; missing weights default to 1.
pub fn parse_observations(text: &str, header: bool) -> Result<Vec<Observation>, Error> {
    let mut rows = Vec::new();
    for rec in csv_reader(text, header).records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if !(2..=3).contains(&rec.len()) {
            return Err(Error::Parse {
                line: line as usize,
                column: 1,
                message: format!("expected 2 or 3 columns, found {}", rec.len()),
            });
        }
        let x = parse_number(&rec[0], line, 1)?;
        let y = parse_number(&rec[1], line, 2)?;
        let w = match rec.get(2) {
            Some(w) => parse_number(w, line, 3)?,
            None => 1.0,
        };
        rows.push(Observation::new(x, y, w));
    }
    Ok(rows)
}

pub fn read_dataset(text: &str, header: bool) -> Result<Dataset, Error> {
    Dataset::new(parse_observations(text, header)?)
}

fn parse_xs(text: &str, header: bool) -> Result<Vec<f64>, Error> {
    let mut xs = Vec::new();
    for rec in csv_reader(text, header).records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        match rec.get(0) {
            Some(s) if !s.is_empty() => xs.push(parse_number(s, line, 1)?),
            _ => {}
        }
    }
    Ok(xs)
}

pub fn fit_config_from_args(a: &FitArgs, data: &Dataset) -> Result<FitConfig, Error> {
    let kind = match a.family {
        FamilyArg::Sine => BasisKind::Sine,
        FamilyArg::Cosine => BasisKind::Cosine,
    };
    let transform = match a.transform {
        TransformArg::Identity => InputTransform::Identity,
        TransformArg::Span2pi => InputTransform::span_two_pi(&data.xs())?,
    };
    let cfg = FitConfig {
        band: FrequencyBand::new(a.search.beta_min, a.search.beta_max, a.search.beta_grid)?,
        refine_steps: a.search.refine,
        max_iterations: a.max_iters,
        ss_target: a.ss_target,
        min_relative_decrease: a.min_decrease,
        validation_fraction: a.validation,
        validation_patience: a.patience,
        seed: a.seed,
        family: BasisFamily { kind, transform },
        base: a.base.into(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// The SS trajectory as printed by `fit`; numbers use the same shortest
/// round-trip rendering as the report file.
pub fn trajectory_table(report: &FitReport) -> String {
    let mut s = String::new();
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:?}"));
    let _ = writeln!(s, "iter\tbeta\talpha\ttrain_ss\tvalidation_ss");
    let _ = writeln!(
        s,
        "0\t-\t-\t{:?}\t{}",
        report.initial_ss,
        fmt_opt(report.initial_validation_ss)
    );
    for r in &report.records {
        let _ = writeln!(
            s,
            "{}\t{:?}\t{:?}\t{:?}\t{}",
            r.index,
            r.beta,
            r.alpha,
            r.train_ss,
            fmt_opt(r.validation_ss)
        );
    }
    let _ = writeln!(s, "stop: {} (kept {} terms)", report.stop_reason, report.kept_terms);
    s
}

fn exit_code_for(report: &FitReport) -> i32 {
    if report.stop_reason == StopReason::NoImprovingCandidate {
        EXIT_STALLED
    } else {
        EXIT_OK
    }
}

pub fn cmd_fit(a: &FitArgs, out: &mut dyn std::io::Write) -> CliResult {
    let mut data = read_dataset(&read_file(&a.input)?, a.header)?;
    if let Some(tol) = a.collapse_duplicates {
        if !(tol >= 0.0) {
            return Err(CliError::usage("duplicate tolerance must be non-negative"));
        }
        data = collapse_duplicates(&data, tol);
    }
    let cfg = fit_config_from_args(a, &data)?;
    let (model, report) = fit(&data, &cfg)?;
    write_file(&a.out, &model.serialize())?;
    write_file(&a.report, &report.to_json())?;
    emit(out, &trajectory_table(&report))?;
    Ok(exit_code_for(&report))
}

pub fn cmd_predict(a: &PredictArgs, out: &mut dyn std::io::Write) -> CliResult {
    let model = SeriesModel::deserialize(&read_file(&a.model)?)?;
    let xs = match (&a.input, &a.x) {
        (Some(path), _) => parse_xs(&read_file(path)?, a.header)?,
        (None, Some(inline)) => inline
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_number(s, 1, 1))
            .collect::<Result<_, _>>()?,
        (None, None) => return Err(CliError::usage("predict needs --input or --x")),
    };
    let mut text = String::new();
    for (x, y) in xs.iter().zip(model.predict_many(&xs)) {
        if a.round {
            let _ = writeln!(text, "{x},{}", y.trunc() as i64);
        } else {
            let _ = writeln!(text, "{x},{y:?}");
        }
    }
    match &a.out {
        Some(p) => write_file(p, &text)?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_OK)
}

/// `x,actual,fitted,residual` rows with a header line.
pub fn plot_rows(model: &SeriesModel, data: &Dataset) -> String {
    let mut s = String::from("x,actual,fitted,residual\n");
    for o in data.observations() {
        let f = model.predict(o.x);
        let _ = writeln!(s, "{:?},{:?},{:?},{:?}", o.x, o.y, f, o.y - f);
    }
    s
}

pub fn cmd_plotdata(a: &PlotArgs, out: &mut dyn std::io::Write) -> CliResult {
    let model = SeriesModel::deserialize(&read_file(&a.model)?)?;
    let data = read_dataset(&read_file(&a.input)?, a.header)?;
    let text = plot_rows(&model, &data);
    match &a.out {
        Some(p) => write_file(p, &text)?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_OK)
}

/// Human-readable series with two-decimal parameters.
pub fn rounded_series(model: &SeriesModel) -> String {
    let mut s = match model.base.params().as_slice() {
        [] => "0".to_string(),
        [c] => format!("{c:.2}"),
        [a, b] => format!("{a:.2} + {b:.2}x"),
        _ => unreachable!("base models have at most two parameters"),
    };
    for t in &model.terms {
        let sign = if t.alpha < 0.0 { '-' } else { '+' };
        let f = match t.kind {
            BasisKind::Sine => "sin",
            BasisKind::Cosine => "cos",
        };
        let _ = write!(s, " {sign} {:.2} {f}({:.2}n)", t.alpha.abs(), t.beta);
    }
    s
}

pub fn cmd_demo_eclipse(a: &DemoArgs, out: &mut dyn std::io::Write) -> CliResult {
    let data = match &a.data {
        Some(p) => EclipseDataset::parse(&read_file(p)?)?,
        None => EclipseDataset::bundled(),
    };
    let settings = DemoSettings {
        band: FrequencyBand::new(0.05, 3.2, a.beta_grid)?,
        refine_steps: a.refine,
        iterations: a.max_iters,
        shift: a.shift,
    };
    if settings.iterations == 0 {
        return Err(CliError::usage("max-iters must be positive"));
    }
    let outcome = eclipse::run_demo(&data, &settings)?;

    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::data(format!("{}: {e}", a.out_dir.display())))?;
    write_file(&a.out_dir.join("eclipse_model.json"), &outcome.model.serialize())?;
    write_file(&a.out_dir.join("eclipse_report.json"), &outcome.report.to_json())?;
    let mut plot = String::from("n,actual,fitted\n");
    for (n, y, f) in &outcome.plot_rows {
        let _ = writeln!(plot, "{n},{y},{f:?}");
    }
    write_file(&a.out_dir.join("eclipse_plot.csv"), &plot)?;

    let mut s = trajectory_table(&outcome.report);
    let _ = writeln!(
        s,
        "SS {:.2} -> {:.2} in {} iterations",
        outcome.report.initial_ss,
        outcome.report.final_ss(),
        outcome.report.kept_terms
    );
    let _ = writeln!(s, "E(n - {}) = {}", a.shift, rounded_series(&outcome.model));
    for (name, g) in [("A", &outcome.group_a), ("B", &outcome.group_b)] {
        let labels: Vec<String> = g
            .counts
            .iter()
            .map(|(c, n)| format!("{}={n}", eclipse::century_label(*c)))
            .collect();
        let _ = writeln!(s, "group {name}: {} (range {})", labels.join(", "), g.range);
    }
    if a.holdout {
        let _ = writeln!(s, "holdout SS (21st-30th AD): {:.2}", outcome.holdout_ss);
        for (n, y, f) in outcome
            .plot_rows
            .iter()
            .filter(|r| eclipse::HOLDOUT_CENTURIES.contains(&r.0))
        {
            let _ = writeln!(s, "  {n}\t{y}\t{f:.2}");
        }
    }
    emit(out, &s)?;
    let _ = out.flush();
    Ok(exit_code_for(&outcome.report))
}
