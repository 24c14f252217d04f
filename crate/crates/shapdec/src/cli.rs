//! `shapdec explain | experiment | fit-model`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shapdec_core::engine::{decompose, Budget};
use shapdec_core::models::{ForestParams, ForestTask, Model};
use shapdec_core::viz::{render_force_plot, ForcePlotSpec};
use shapdec_core::{FeatureMatrix, RngStream};

use crate::error::{AppError, AppResult};
use crate::experiments::{
    correlation, fit_model, imputation, run_correlation_study, run_fire_study, run_imputation_study, run_toy,
    CorrelationConfig, FireConfig, ImputationConfig, ModelKind, RunBudget,
};
use crate::io::{fit_sampler, load_model, parse_vector, read_csv, write_json, LoadedModel, OutDir, SamplerKind};
use crate::synthetic;

pub const THREADS_ENV: &str = "SHAPDEC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "shapdec", version, about = "Conditional SHAP values split into interventional and dependent parts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose the attribution of one sample.
    Explain(ExplainArgs),
    /// Run one of the bundled studies.
    Experiment(ExperimentArgs),
    /// Fit a model and write it as JSON.
    FitModel(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Draws per conditional expectation.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub k1: u64,
    /// Sampled orderings per feature for the interventional parts.
    #[arg(long, default_value_t = 4000, value_parser = clap::value_parser!(u64).range(1..))]
    pub k2: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl BudgetArgs {
    fn budget(&self) -> RunBudget {
        RunBudget::new(self.k1 as usize, self.k2 as usize, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Regression,
    BinaryProbability,
}

#[derive(Debug, Clone, Args)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,
    /// Defaults to ceil(sqrt(M)).
    #[arg(long)]
    pub features_per_split: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
}

impl ForestArgs {
    fn params(&self, task: ForestTask) -> ForestParams {
        ForestParams {
            trees: self.trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            features_per_split: self.features_per_split,
            bootstrap: !self.no_bootstrap,
            task,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Column dropped from the data before explaining; required with --fit.
    #[arg(long)]
    pub target: Option<String>,
    /// Model JSON file.
    #[arg(long, conflicts_with = "fit", required_unless_present = "fit")]
    pub model: Option<PathBuf>,
    /// Fit a model of this kind on the data instead of loading one.
    #[arg(long)]
    pub fit: Option<ModelKind>,
    #[arg(long, value_enum, default_value_t = SamplerKind::Gaussian)]
    pub sampler: SamplerKind,
    /// Comma-separated feature values, or `row:<index>` for a data row.
    #[arg(long, allow_hyphen_values = true)]
    pub sample: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write force.svg.
    #[arg(long)]
    pub plot: bool,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    Toy,
    Correlation,
    Housing,
    Fire,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub name: ExperimentName,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Target (housing) or label (fire) column.
    #[arg(long)]
    pub target: Option<String>,
    /// Use the bundled data generator instead of --data.
    #[arg(long)]
    pub synthetic: bool,
    /// Rows to generate with --synthetic.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Generate independent features with --synthetic (fire).
    #[arg(long)]
    pub independent: bool,
    #[arg(long, value_enum, default_value_t = ModelKind::Linear)]
    pub model: ModelKind,
    /// Interaction weight of the correlation study.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub a12: f64,
    /// Comma-separated correlations; defaults to -0.9..0.9 in steps of 0.1.
    #[arg(long, allow_hyphen_values = true)]
    pub alphas: Option<String>,
    /// Repeated estimates per correlation.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = imputation::DEFAULT_TOWNS)]
    pub towns: usize,
    /// Row shown in the fire force plots.
    #[arg(long, default_value_t = 0)]
    pub sample: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Defaults to results/<name>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub kind: ModelKind,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long, value_enum, default_value_t = TaskArg::Regression)]
    pub task: TaskArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    #[command(flatten)]
    pub forest: ForestArgs,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match thread_pool().and_then(|pool| pool.install(|| dispatch(cli.command))) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool() -> AppResult<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| AppError::usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::usage(format!("cannot start {threads} threads: {e}")))
}

fn dispatch(command: Command) -> AppResult<()> {
    match command {
        Command::Explain(a) => explain(a),
        Command::Experiment(a) => experiment(a),
        Command::FitModel(a) => fit(a),
    }
}

fn features_and_target(data: &FeatureMatrix, target: Option<&str>) -> AppResult<(FeatureMatrix, Option<Vec<f64>>)> {
    match target {
        Some(t) => {
            let (f, y) = data.split_target(t).map_err(|e| AppError::ingestion(format!("target column: {e}")))?;
            Ok((f, Some(y)))
        }
        None => Ok((data.clone(), None)),
    }
}

fn select_sample(text: &str, data: &FeatureMatrix) -> AppResult<Vec<f64>> {
    if let Some(row) = text.strip_prefix("row:") {
        let row: usize = row.trim().parse().map_err(|_| AppError::usage(format!("bad row index '{row}'")))?;
        if row >= data.n_rows() {
            return Err(AppError::usage(format!("row {row} out of range (0..{})", data.n_rows())));
        }
        return Ok(data.row(row).to_vec());
    }
    parse_vector(text, data.n_features())
}

fn explain(a: ExplainArgs) -> AppResult<()> {
    let data = read_csv(&a.data)?;
    let (features, target) = features_and_target(&data, a.target.as_deref())?;
    let model = match (&a.model, a.fit) {
        (Some(path), _) => load_model(path, features.n_features())?,
        (None, Some(kind)) => {
            let y = target.ok_or_else(|| AppError::usage("--fit needs --target"))?;
            let stream = RngStream::new(a.budget.seed).substream(10);
            LoadedModel::Native(fit_model(kind, &features, &y, &a.forest.params(ForestTask::Regression), stream)?)
        }
        (None, None) => return Err(AppError::usage("one of --model or --fit is required")),
    };
    let x = select_sample(&a.sample, &features)?;
    let sampler = fit_sampler(a.sampler, &features)?;
    let budget = Budget::new(a.budget.k1 as usize, a.budget.k2 as usize, a.budget.seed);
    let d = decompose(&model, &sampler, &x, &budget)?;
    for w in &d.meta.warnings {
        eprintln!("warning: {w}");
    }
    let out = OutDir::new(&a.out)?;
    let names = features.names();
    out.json("decomposition.json", &d.named(names)?)?;
    if a.plot {
        out.text("force.svg", &render_force_plot(&ForcePlotSpec::from_decomposition(&d, names, &x))?)?;
    }
    println!("base {:.6}", d.base);
    for (i, name) in names.iter().enumerate() {
        println!("{name:>16}  phi {:>10.6}  int {:>10.6}  dep {:>10.6}", d.phi[i], d.phi_int[i], d.phi_dep[i]);
    }
    Ok(())
}

fn fit(a: FitArgs) -> AppResult<()> {
    let data = read_csv(&a.data)?;
    let (features, y) = features_and_target(&data, Some(&a.target))?;
    let task = match a.task {
        TaskArg::Regression => ForestTask::Regression,
        TaskArg::BinaryProbability => ForestTask::BinaryProbability,
    };
    let model: Model = fit_model(a.kind, &features, &y.expect("target given"), &a.forest.params(task), RngStream::new(a.seed))?;
    write_json(&a.out, &model)
}

fn parse_alphas(text: &str) -> AppResult<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| AppError::usage(format!("'{v}' is not a correlation"))))
        .collect()
}

fn experiment_data(a: &ExperimentArgs, synthetic: impl FnOnce(RngStream) -> FeatureMatrix) -> AppResult<FeatureMatrix> {
    match (&a.data, a.synthetic) {
        (Some(_), true) => Err(AppError::usage("--data and --synthetic are exclusive")),
        (Some(path), false) => read_csv(path),
        (None, true) => Ok(synthetic(RngStream::new(a.budget.seed).substream(30))),
        (None, false) => Err(AppError::usage("give --data or --synthetic")),
    }
}

fn experiment(a: ExperimentArgs) -> AppResult<()> {
    let name = a.name.to_possible_value().expect("named variant").get_name().to_owned();
    let out = OutDir::new(a.out.clone().unwrap_or_else(|| PathBuf::from("results").join(&name)))?;
    let budget = a.budget.budget();
    match a.name {
        ExperimentName::Toy => run_toy(budget)?.write(&out),
        ExperimentName::Correlation => {
            let cfg = CorrelationConfig {
                a12: a.a12,
                alphas: match &a.alphas {
                    Some(t) => parse_alphas(t)?,
                    None => CorrelationConfig::default_alphas(),
                },
                repeats: a.n,
                budget,
            };
            let rows = run_correlation_study(&cfg)?;
            correlation::write(&cfg, &rows, &out)
        }
        ExperimentName::Housing => {
            let data = experiment_data(&a, |s| synthetic::housing(a.rows.unwrap_or(synthetic::HOUSING_ROWS), s))?;
            if a.synthetic {
                crate::io::write_csv(&out.file("data.csv"), &data)?;
            }
            let target = match (&a.target, a.synthetic) {
                (Some(t), _) => t.clone(),
                (None, true) => synthetic::HOUSING_TARGET.to_owned(),
                (None, false) => return Err(AppError::usage("housing needs --target")),
            };
            let cfg = ImputationConfig {
                target,
                model: a.model,
                forest: a.forest.params(ForestTask::Regression),
                towns: a.towns,
                budget,
            };
            let result = run_imputation_study(&data, &cfg)?;
            imputation::write(&cfg, &result, &out)
        }
        ExperimentName::Fire => {
            let correlated = !a.independent;
            let data = experiment_data(&a, |s| synthetic::fire(a.rows.unwrap_or(synthetic::FIRE_ROWS), correlated, s))?;
            if a.synthetic {
                crate::io::write_csv(&out.file("data.csv"), &data)?;
            }
            let cfg = FireConfig {
                label: a.target.clone().unwrap_or_else(|| synthetic::FIRE_LABEL.to_owned()),
                sample: a.sample,
                forest: a.forest.params(ForestTask::BinaryProbability),
                budget,
            };
            let result = run_fire_study(&data, &cfg)?;
            result.write(&cfg, &out)
        }
    }
}
