use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use scires_core::ingest::generate_synthetic_dataset;
use scires_core::recommender::{CriterionWeights, HardConstraints};
use scires_core::response::{RecommendOptions, Snapshot};
use scires_core::timeline::{Breakpoints, ResilienceMetrics, ScenarioComparison};
use serde::Serialize;

use crate::config::{read_json, AppConfig};
use crate::error::AppError;
use crate::pipeline::{
    load_dataset, rankings_csv, recommendation_rows, recommendations_csv, respond_all, timeline_report, train_scorer,
    DatasetPaths, DatasetSources, EventOutcome,
};
use crate::service::{SessionInit, SessionService};

#[derive(Debug, Parser)]
#[command(
    name = "scires",
    version,
    about = "Supply chain disruption response: recommend, simulate, serve"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the input tables and print the cleaning report.
    Ingest(DataArgs),
    /// Write a synthetic dataset.
    GenData(GenArgs),
    /// Detect disruptions and write response plans and rankings.
    Recommend(RunArgs),
    /// Write baseline and assisted performance curves with their metrics.
    Simulate(RunArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, value_name = "FILE")]
    pub demand: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub suppliers: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub history: Option<PathBuf>,
    /// On-time-in-full observations used to train the performance scorer.
    #[arg(long, value_name = "FILE")]
    pub performance: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

impl DataArgs {
    fn paths(&self) -> DatasetPaths {
        DatasetPaths {
            demand: self.demand.clone(),
            suppliers: self.suppliers.clone(),
            history: self.history.clone(),
            performance: self.performance.clone(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub constraints: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Only respond to this SKU.
    #[arg(long)]
    pub sku: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_name = "DIR", default_value = "data")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n_skus: usize,
    #[arg(long, default_value_t = 5)]
    pub n_suppliers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub constraints: Option<PathBuf>,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Seed of the synthetic dataset served when no files are given.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Ingest(args) => ingest(&args),
        Command::GenData(args) => gen_data(&args),
        Command::Recommend(args) => recommend(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Serve(args) => serve(&args),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| AppError::internal(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| AppError::internal(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, AppError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| AppError::internal(e.to_string()))
}

fn ingest(args: &DataArgs) -> Result<(), AppError> {
    let config = AppConfig::load(args.config.as_deref())?;
    let dataset = load_dataset(&DatasetSources::from_paths(&args.paths())?, config.cleaning_policy)?;
    print!("{}", to_json(&dataset.summary)?);
    Ok(())
}

fn gen_data(args: &GenArgs) -> Result<(), AppError> {
    let d = generate_synthetic_dataset(args.seed, args.n_skus, args.n_suppliers)?;
    for (name, text) in d.files() {
        write_file(&args.out.join(name), text)?;
    }
    println!("wrote synthetic dataset (seed {}) to {}", args.seed, args.out.display());
    Ok(())
}

fn operator_inputs(
    weights: Option<&Path>,
    constraints: Option<&Path>,
) -> Result<(CriterionWeights, HardConstraints), AppError> {
    let weights: CriterionWeights = weights.map(read_json).transpose()?.unwrap_or_default();
    let constraints: HardConstraints = constraints.map(read_json).transpose()?.unwrap_or_default();
    weights.validate()?;
    constraints.validate()?;
    Ok((weights, constraints))
}

struct Run {
    config: AppConfig,
    outcomes: Vec<EventOutcome>,
}

fn respond(args: &RunArgs) -> Result<Run, AppError> {
    let config = AppConfig::load(args.data.config.as_deref())?;
    let (weights, constraints) = operator_inputs(args.weights.as_deref(), args.constraints.as_deref())?;
    let dataset = load_dataset(&DatasetSources::from_paths(&args.data.paths())?, config.cleaning_policy)?;
    let fitted = train_scorer(&dataset.performance)?;
    if let Some(sku) = &args.sku {
        if dataset.store.sku(sku).is_none() {
            return Err(AppError::not_found(format!("unknown sku `{sku}`")));
        }
    }
    let snapshot = Snapshot::new(dataset.store, config.internal_resources.clone())?;
    let options = RecommendOptions {
        weights: &weights,
        constraints: &constraints,
        scorer: fitted.as_ref().map(|f| &f.model),
    };
    let outcomes = respond_all(&snapshot, &config, &options, args.sku.as_deref())?;

    write_file(&args.out.join("ingest_report.json"), &to_json(&dataset.summary)?)?;
    if let Some(f) = &fitted {
        write_file(&args.out.join("model.json"), &(f.model.to_json() + "\n"))?;
    }
    Ok(Run { config, outcomes })
}

fn recommend(args: &RunArgs) -> Result<(), AppError> {
    let Run { outcomes, .. } = respond(args)?;
    let rows = recommendation_rows(&outcomes);
    write_file(&args.out.join("plans.json"), &to_json(&outcomes)?)?;
    write_file(&args.out.join("recommendations.csv"), &recommendations_csv(&rows))?;
    write_file(&args.out.join("rankings.csv"), &rankings_csv(&outcomes))?;
    println!(
        "{} disruptions, {} with an external recommendation; outputs in {}",
        outcomes.len(),
        rows.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ScenarioMetrics {
    metrics: ResilienceMetrics,
    breakpoints: Breakpoints,
}

#[derive(Debug, Serialize)]
struct EventMetrics {
    event_id: String,
    sku: String,
    baseline: ScenarioMetrics,
    assisted: Option<ScenarioMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    assisted_unavailable: Option<String>,
    comparison: Option<ScenarioComparison>,
}

fn simulate(args: &RunArgs) -> Result<(), AppError> {
    let Run { config, outcomes } = respond(args)?;
    let dir = args.out.join("timelines");
    let mut all = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let report = timeline_report(&o.event, &o.plan, &config)?;
        write_file(
            &dir.join(format!("{}.baseline.csv", o.event.event_id)),
            &report.baseline.curve.to_csv(),
        )?;
        if let Some(a) = &report.assisted {
            write_file(
                &dir.join(format!("{}.assisted.csv", o.event.event_id)),
                &a.curve.to_csv(),
            )?;
        }
        let summarize = |s: &crate::pipeline::Scenario| ScenarioMetrics {
            metrics: s.metrics.clone(),
            breakpoints: s.curve.breakpoints.clone(),
        };
        all.push(EventMetrics {
            event_id: report.event_id.clone(),
            sku: o.event.disrupted_sku.clone(),
            baseline: summarize(&report.baseline),
            assisted: report.assisted.as_ref().map(summarize),
            assisted_unavailable: report.assisted_unavailable.clone(),
            comparison: report.comparison.clone(),
        });
    }
    write_file(&args.out.join("metrics.json"), &to_json(&all)?)?;
    println!("{} timelines written to {}", outcomes.len(), dir.display());
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<(), AppError> {
    let config = AppConfig::load(args.data.config.as_deref())?;
    let (weights, constraints) = operator_inputs(args.weights.as_deref(), args.constraints.as_deref())?;
    let sources = if args.data.demand.is_none() && args.data.suppliers.is_none() {
        DatasetSources::synthetic(args.seed, 100, 5)?
    } else {
        DatasetSources::from_paths(&args.data.paths())?
    };
    let init = SessionInit {
        sources,
        config,
        weights,
        constraints,
    };
    // Fail at startup rather than on the first request.
    crate::service::Session::open(init.clone())?;
    let service = Arc::new(SessionService::new(init));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::internal(e.to_string()))?;
    runtime.block_on(async move {
        let addr = SocketAddr::from(([127, 0, 0, 1], args.port));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| AppError::internal(format!("cannot bind {addr}: {e}")))?;
        let bound = listener.local_addr().map_err(|e| AppError::internal(e.to_string()))?;
        eprintln!("listening on http://{bound}");
        axum::serve(listener, crate::http::router(service))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| AppError::internal(e.to_string()))
    })
}
