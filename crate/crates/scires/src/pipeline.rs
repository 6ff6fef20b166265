//! Dataset loading and the batch detect, respond and simulate pipeline.

use std::path::PathBuf;

use scires_core::ingest::{
    build_profiles, clean_records, generate_synthetic_dataset, parse_dataset, parse_history, parse_performance,
    CleaningPolicy, CleaningReport, DatasetKind, PerformanceObservation, ProfileStore, RawTable, SkuRecord,
    SupplierProfile, SUPPLIER_FEATURE_NAMES,
};
use scires_core::learning::{fit_linear_scorer, FitConfig, FittedScorer};
use scires_core::response::{
    detect_disruption, run_response, DisruptionEvent, Phase, RecommendOptions, ResponsePlan, Snapshot,
};
use scires_core::timeline::{
    build_timeline, compare_scenarios, derive_params_from_plan, resilience_metrics, PerformanceCurve,
    ResilienceMetrics, ScenarioComparison, TimelineParams,
};
use serde::Serialize;

use crate::config::AppConfig;
use crate::error::AppError;

/// Raw CSV text of every input table.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSources {
    pub demand: String,
    pub suppliers: String,
    pub history: Option<String>,
    pub performance: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetPaths {
    pub demand: Option<PathBuf>,
    pub suppliers: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub performance: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<String, AppError> {
    std::fs::read_to_string(path).map_err(|e| AppError::input(format!("cannot read {}: {e}", path.display())))
}

impl DatasetSources {
    pub fn from_paths(paths: &DatasetPaths) -> Result<Self, AppError> {
        let demand = paths
            .demand
            .as_ref()
            .ok_or_else(|| AppError::input("--demand FILE is required"))?;
        let suppliers = paths
            .suppliers
            .as_ref()
            .ok_or_else(|| AppError::input("--suppliers FILE is required"))?;
        Ok(DatasetSources {
            demand: read(demand)?,
            suppliers: read(suppliers)?,
            history: paths.history.as_ref().map(read).transpose()?,
            performance: paths.performance.as_ref().map(read).transpose()?,
        })
    }

    /// The generated dataset, including history and performance tables.
    pub fn synthetic(seed: u64, n_skus: usize, n_suppliers: usize) -> Result<Self, AppError> {
        let d = generate_synthetic_dataset(seed, n_skus, n_suppliers)?;
        Ok(DatasetSources {
            demand: d.demand_csv,
            suppliers: d.supplier_csv,
            history: Some(d.history_csv),
            performance: Some(d.performance_csv),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub demand: CleaningReport,
    pub suppliers: CleaningReport,
    pub history_rows: usize,
    pub performance_rows: usize,
    /// Suppliers accepted only after a repair.
    pub incomplete_suppliers: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub store: ProfileStore,
    pub performance: Vec<PerformanceObservation>,
    pub summary: IngestSummary,
}

fn repaired_ids(table: &RawTable, report: &CleaningReport) -> Vec<String> {
    report
        .repaired_rows()
        .into_iter()
        .filter_map(|row| table.rows.iter().find(|r| r.index == row))
        .map(|r| r.cells[0].clone())
        .collect()
}

pub fn load_dataset(sources: &DatasetSources, policy: CleaningPolicy) -> Result<Dataset, AppError> {
    let demand_table = parse_dataset(&sources.demand, DatasetKind::Demand)?;
    let (skus, demand_report) = clean_records::<SkuRecord>(&demand_table, policy)?;
    let supplier_table = parse_dataset(&sources.suppliers, DatasetKind::Supplier)?;
    let (suppliers, supplier_report) = clean_records::<SupplierProfile>(&supplier_table, policy)?;
    let history = sources
        .history
        .as_deref()
        .map(parse_history)
        .transpose()?
        .unwrap_or_default();
    let performance = sources
        .performance
        .as_deref()
        .map(parse_performance)
        .transpose()?
        .unwrap_or_default();
    let incomplete = repaired_ids(&supplier_table, &supplier_report);
    let store = build_profiles(skus, suppliers, &history)?.with_incomplete(incomplete.clone());
    Ok(Dataset {
        store,
        summary: IngestSummary {
            demand: demand_report,
            suppliers: supplier_report,
            history_rows: history.len(),
            performance_rows: performance.len(),
            incomplete_suppliers: incomplete,
        },
        performance,
    })
}

/// Fits the supervised scorer when performance observations exist.
pub fn train_scorer(observations: &[PerformanceObservation]) -> Result<Option<FittedScorer>, AppError> {
    if observations.is_empty() {
        return Ok(None);
    }
    let features: Vec<Vec<f64>> = observations.iter().map(|o| o.features.to_vec()).collect();
    let labels: Vec<f64> = observations.iter().map(|o| o.on_time_in_full).collect();
    let names = SUPPLIER_FEATURE_NAMES.iter().map(|n| n.to_string()).collect();
    Ok(Some(fit_linear_scorer(
        &features,
        &labels,
        names,
        &FitConfig::default(),
    )?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventOutcome {
    pub event: DisruptionEvent,
    pub plan: ResponsePlan,
}

/// Detects disruptions in the demand table and plans a response to each.
pub fn respond_all(
    snapshot: &Snapshot,
    config: &AppConfig,
    options: &RecommendOptions<'_>,
    sku_filter: Option<&str>,
) -> Result<Vec<EventOutcome>, AppError> {
    detect_disruption(snapshot.store().skus(), config.availability_threshold)
        .into_iter()
        .filter(|e| sku_filter.is_none_or(|s| s == e.disrupted_sku))
        .map(|event| {
            let plan = run_response(&event, snapshot, options)?;
            Ok(EventOutcome { event, plan })
        })
        .collect()
}

/// One row of the demand-to-resource table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationRow {
    pub demand: String,
    pub recommended_resource: String,
    pub overall_score: f64,
}

/// Top external supplier per event, best score first.
pub fn recommendation_rows(outcomes: &[EventOutcome]) -> Vec<RecommendationRow> {
    let mut rows: Vec<RecommendationRow> = outcomes
        .iter()
        .filter_map(|o| {
            let top = o.plan.external.as_ref()?.top()?;
            Some(RecommendationRow {
                demand: o.event.disrupted_sku.clone(),
                recommended_resource: top.supplier_id.clone(),
                overall_score: top.overall_score,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        b.overall_score
            .total_cmp(&a.overall_score)
            .then_with(|| a.demand.cmp(&b.demand))
    });
    rows
}

pub fn recommendations_csv(rows: &[RecommendationRow]) -> String {
    let mut out = String::from("demand,recommended_resource,overall_score\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6}\n",
            r.demand, r.recommended_resource, r.overall_score
        ));
    }
    out
}

/// Every ranked candidate for every event.
pub fn rankings_csv(outcomes: &[EventOutcome]) -> String {
    let mut out = String::from(
        "event_id,demand,rank,supplier,overall_score,lead_time,unit_cost,fulfillable_quantity,algorithm\n",
    );
    for o in outcomes {
        let Some(rec) = &o.plan.external else { continue };
        for (i, e) in rec.entries.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{},{:.4},{},{}\n",
                o.event.event_id,
                rec.demand,
                i + 1,
                e.supplier_id,
                e.overall_score,
                e.lead_time,
                e.unit_cost,
                e.fulfillable_quantity,
                rec.algorithm
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub params: TimelineParams,
    pub metrics: ResilienceMetrics,
    pub curve: PerformanceCurve,
}

impl Scenario {
    fn build(params: TimelineParams) -> Result<Self, AppError> {
        let curve = build_timeline(&params)?;
        Ok(Scenario {
            metrics: resilience_metrics(&curve),
            params,
            curve,
        })
    }
}

/// Baseline (external supply after the configured delay) versus assisted
/// (external supply from the top recommendation).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineReport {
    pub event_id: String,
    pub baseline: Scenario,
    pub assisted: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assisted_unavailable: Option<String>,
    pub comparison: Option<ScenarioComparison>,
}

pub fn timeline_report(
    event: &DisruptionEvent,
    plan: &ResponsePlan,
    config: &AppConfig,
) -> Result<TimelineReport, AppError> {
    let defaults = TimelineParams {
        horizon: event.detected_at + config.timeline.horizon,
        ..config.timeline.params()
    };
    let derived = derive_params_from_plan(plan, event, &defaults);
    let baseline = TimelineParams {
        external_arrival: event.detected_at + config.baseline_recovery_delay,
        ..derived.clone()
    };
    let top = plan.external.as_ref().and_then(|r| r.top());
    let (assisted, assisted_unavailable) = match top {
        Some(_) => (
            Some(TimelineParams {
                external_arrival: derived.external_arrival.min(baseline.external_arrival),
                ..derived
            }),
            None,
        ),
        None if plan.phase == Phase::InternalOnly => (
            None,
            Some("shortfall covered internally; no external supply scheduled".to_string()),
        ),
        None => (None, Some("no qualifying external supplier".to_string())),
    };
    let comparison = assisted.as_ref().map(|a| compare_scenarios(&baseline, a)).transpose()?;
    Ok(TimelineReport {
        event_id: event.event_id.clone(),
        baseline: Scenario::build(baseline)?,
        assisted: assisted.map(Scenario::build).transpose()?,
        assisted_unavailable,
        comparison,
    })
}
