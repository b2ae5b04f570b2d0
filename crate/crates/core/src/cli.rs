//! Command-line front end.
//!
//! Exit codes: 0 success, 1 reproduction tolerance failure, 2 validation or
//! IO error, 3 solver error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{self, AnalysisError, Thresholds};
use crate::dataset::{self, Dataset, DatasetError, UncontrollableMode};
use crate::fixtures;
use crate::kam::{self, KamConfig, KamError, KamResult};
use crate::report::{self, Format, ReportError};
use crate::reproduce;
use crate::schemes::{EpsilonKind, EpsilonScheme, SchemeError, WeightScheme};

#[derive(Debug, Parser)]
#[command(
    name = "kam",
    version,
    about = "Epsilon-neighborhood DEA scores, targets and rankings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    Evaluate,
    Targets,
    Rank,
    Dominance,
    Productivity,
    ReproducePaper,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scores, slacks and targets for every firm.
    Evaluate(Args),
    /// Projected targets for every firm.
    Targets(Args),
    /// Firms ordered by score; needs a nonzero epsilon.
    Rank(Args),
    /// Shared-weight whole-dominance ordering.
    Dominance(Args),
    /// Efficiency/effectiveness classification against output goals.
    Productivity(Args),
    /// Recompute the bundled airport tables and check them.
    ReproducePaper(Args),
}

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Dataset CSV. Defaults to the bundled airport data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Factor schema TOML. Defaults to the bundled airport schema.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = EpsilonArg::PerFirm)]
    pub epsilon_scheme: EpsilonArg,
    /// sbm, min, avg or file:<path>.
    #[arg(long, default_value = "sbm")]
    pub weights: WeightArg,
    /// Replaces every uncontrollable factor's schema mode.
    #[arg(long, value_enum)]
    pub uncontrollable_mode: Option<ModeArg>,
    #[arg(long)]
    pub efficiency_threshold: Option<f64>,
    #[arg(long)]
    pub effectiveness_threshold: Option<f64>,
    /// Report file, or output directory for reproduce-paper.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EpsilonArg {
    PerWeight,
    PerFirm,
    PerAverage,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightArg {
    Sbm,
    Min,
    Avg,
    File(PathBuf),
}

impl FromStr for WeightArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sbm" => Ok(Self::Sbm),
            "min" => Ok(Self::Min),
            "avg" => Ok(Self::Avg),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(format!("expected sbm, min, avg or file:<path>, got `{s}`")),
            },
        }
    }
}

/// Validated run request.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub data_path: Option<PathBuf>,
    pub schema_path: Option<PathBuf>,
    pub epsilon: f64,
    pub epsilon_scheme: EpsilonArg,
    pub weights: WeightArg,
    pub uncontrollable_mode_override: Option<UncontrollableMode>,
    pub thresholds: Option<Thresholds>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Solver,
    CheckFailed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub class: ErrorClass,
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    fn validation(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Validation,
            code,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::CheckFailed => 1,
            ErrorClass::Validation => 2,
            ErrorClass::Solver => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let code = match e {
            DatasetError::Io(_) => "Io",
            _ => "InvalidDataset",
        };
        Self::validation(code, e.to_string())
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        Self::validation("InvalidScheme", e.to_string())
    }
}

impl From<KamError> for CliError {
    fn from(e: KamError) -> Self {
        if e.is_solver_failure() {
            return Self {
                class: ErrorClass::Solver,
                code: "SolverFailure",
                message: e.to_string(),
            };
        }
        match e {
            KamError::Scheme(s) => s.into(),
            KamError::MissingUncontrollableMode(_) => {
                Self::validation("MissingUncontrollableMode", e.to_string())
            }
            other => Self::validation("InvalidModel", other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        let code = match e {
            AnalysisError::Kam(k) => return k.into(),
            AnalysisError::SbmWeightsRejected => "SbmWeightsRejected",
            AnalysisError::RankingAtZeroEpsilon => "RankingAtZeroEpsilon",
            AnalysisError::NoGoalDefined => "NoGoalDefined",
            _ => "InvalidAnalysis",
        };
        Self::validation(code, e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::Io(_) => "Io",
            ReportError::Empty => "EmptyReport",
        };
        Self::validation(code, e.to_string())
    }
}

impl Command {
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let (command, a) = match self {
            Self::Evaluate(a) => (CommandKind::Evaluate, a),
            Self::Targets(a) => (CommandKind::Targets, a),
            Self::Rank(a) => (CommandKind::Rank, a),
            Self::Dominance(a) => (CommandKind::Dominance, a),
            Self::Productivity(a) => (CommandKind::Productivity, a),
            Self::ReproducePaper(a) => (CommandKind::ReproducePaper, a),
        };
        if !(a.epsilon.is_finite() && a.epsilon >= 0.0) {
            return Err(CliError::validation(
                "InvalidEpsilon",
                format!(
                    "--epsilon must be a finite non-negative number, got {}",
                    a.epsilon
                ),
            ));
        }
        if a.data.is_some() != a.schema.is_some() {
            return Err(CliError::validation(
                "InvalidArguments",
                "--data and --schema must be given together",
            ));
        }
        for p in a.data.iter().chain(&a.schema) {
            if !p.is_file() {
                return Err(CliError::validation(
                    "Io",
                    format!("cannot read `{}`", p.display()),
                ));
            }
        }
        let thresholds =
            match (a.efficiency_threshold, a.effectiveness_threshold) {
                (Some(efficiency), Some(effectiveness)) => Some(Thresholds {
                    efficiency,
                    effectiveness,
                }),
                (None, None) => None,
                _ => return Err(CliError::validation(
                    "InvalidArguments",
                    "--efficiency-threshold and --effectiveness-threshold must be given together",
                )),
            };
        if command == CommandKind::Productivity && thresholds.is_none() {
            return Err(CliError::validation(
                "InvalidArguments",
                "productivity needs --efficiency-threshold and --effectiveness-threshold",
            ));
        }
        Ok(RunConfig {
            command,
            data_path: a.data,
            schema_path: a.schema,
            epsilon: a.epsilon,
            epsilon_scheme: a.epsilon_scheme,
            weights: a.weights,
            uncontrollable_mode_override: a.uncontrollable_mode.map(|m| match m {
                ModeArg::Fixed => UncontrollableMode::Fixed,
                ModeArg::Bounded => UncontrollableMode::Bounded,
            }),
            thresholds,
            output_path: a.output,
            format: match a.format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Table => Format::Table,
            },
        })
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("Io", format!("cannot read `{}`: {e}", path.display())))
}

fn load(cfg: &RunConfig) -> Result<Dataset, CliError> {
    match (&cfg.data_path, &cfg.schema_path) {
        (Some(d), Some(s)) => Ok(dataset::load_dataset(&read(d)?, &read(s)?)?),
        _ => Ok(fixtures::airports()),
    }
}

fn model(ds: &Dataset, cfg: &RunConfig) -> Result<KamConfig, CliError> {
    let weights = match &cfg.weights {
        WeightArg::Sbm => WeightScheme::Sbm,
        WeightArg::Min => WeightScheme::Minimum,
        WeightArg::Avg => WeightScheme::Average,
        WeightArg::File(p) => {
            let (w_in, w_out) = dataset::load_weights(&read(p)?, ds)?;
            WeightScheme::custom(w_in, w_out)?
        }
    };
    let epsilon = match cfg.epsilon_scheme {
        EpsilonArg::PerWeight => {
            EpsilonScheme::new(EpsilonKind::PerWeight, cfg.epsilon).with_schema_mask(ds)
        }
        EpsilonArg::PerFirm => {
            EpsilonScheme::new(EpsilonKind::PerFirm, cfg.epsilon).with_schema_mask(ds)
        }
        EpsilonArg::PerAverage => {
            EpsilonScheme::new(EpsilonKind::PerAverage, cfg.epsilon).with_schema_mask(ds)
        }
        EpsilonArg::Explicit => EpsilonScheme::explicit_from_schema(ds)?,
    };
    Ok(KamConfig::from_schema(
        ds,
        weights,
        epsilon,
        cfg.uncontrollable_mode_override,
    )?)
}

fn evaluate_all(ds: &Dataset, cfg: &KamConfig) -> Result<Vec<KamResult>, CliError> {
    let mut ok = Vec::with_capacity(ds.num_firms());
    let mut first_err: Option<CliError> = None;
    let mut failed = Vec::new();
    for (l, r) in kam::evaluate_all(ds, cfg).into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed.push(ds.firms()[l].clone());
                let e = CliError::from(e);
                // A solver failure outranks a validation failure.
                if first_err
                    .as_ref()
                    .is_none_or(|f| f.class != ErrorClass::Solver && e.class == ErrorClass::Solver)
                {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        None => Ok(ok),
        Some(mut e) => {
            e.message = format!("{} (failed firms: {})", e.message, failed.join(", "));
            Err(e)
        }
    }
}

fn write_report(text: &str, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.output_path {
        Some(p) => report::emit(text, Some(p))?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::from(ReportError::Io(e)))?,
    }
    Ok(())
}

fn reproduce_paper(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let rep = reproduce::reproduce()?;
    let dir = cfg
        .output_path
        .clone()
        .unwrap_or_else(|| PathBuf::from("reproduction"));
    std::fs::create_dir_all(&dir).map_err(|e| {
        CliError::validation("Io", format!("cannot create `{}`: {e}", dir.display()))
    })?;
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Table => "txt",
    };
    for (name, table) in [
        ("scores_fixed", &rep.scores_fixed),
        ("targets_fixed", &rep.targets_fixed),
        ("scores_bounded", &rep.scores_bounded),
        ("targets_bounded", &rep.targets_bounded),
    ] {
        report::emit(
            &table.render(cfg.format),
            Some(&dir.join(format!("{name}.{ext}"))),
        )?;
    }
    out.write_all(rep.summary().as_bytes())
        .map_err(|e| CliError::from(ReportError::Io(e)))?;
    if rep.all_passed() {
        Ok(())
    } else {
        let failed = rep.checks.iter().filter(|c| !c.passed).count();
        Err(CliError {
            class: ErrorClass::CheckFailed,
            code: "ToleranceFailed",
            message: format!("{failed} reproduction check(s) failed"),
        })
    }
}

/// Execute a validated request, writing reports to `--output` or `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.command == CommandKind::ReproducePaper {
        return reproduce_paper(cfg, out);
    }
    let ds = load(cfg)?;
    let model = model(&ds, cfg)?;
    let table = match cfg.command {
        CommandKind::Evaluate => report::results_table(&ds, &evaluate_all(&ds, &model)?)?,
        CommandKind::Targets => report::targets_table(&ds, &evaluate_all(&ds, &model)?)?,
        CommandKind::Rank => {
            let results = evaluate_all(&ds, &model)?;
            let order = analysis::rank_by_score(&ds, &results)?;
            report::ranking_table(&ds, &results, &order)?
        }
        CommandKind::Dominance => {
            let rep = analysis::partial_dominance(&ds, &model.weights)?;
            report::dominance_table(&ds, &rep)?
        }
        CommandKind::Productivity => {
            let scores: Vec<f64> = evaluate_all(&ds, &model)?.iter().map(|r| r.score).collect();
            let thresholds = cfg.thresholds.expect("checked in into_config");
            let rep = analysis::classify_productivity(&ds, &scores, thresholds)?;
            report::productivity_table(&ds, &rep)?
        }
        CommandKind::ReproducePaper => unreachable!(),
    };
    write_report(&table.render(cfg.format), cfg, out)
}

/// Parse, run and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = cli
        .command
        .into_config()
        .and_then(|cfg| run(&cfg, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
