//! Session-hosting service. Transport-independent: the HTTP layer only maps
//! requests onto these methods.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use scires_core::ingest::CleaningPolicy;
use scires_core::learning::LinearScorer;
use scires_core::recommender::{CriterionWeights, HardConstraints, Recommendation};
use scires_core::response::{
    apply_resource_update, demand_gap, run_response, urgency_for, Allocation, DisruptionEvent, InternalResource, Phase,
    RecommendOptions, ResourceUpdate, ResponsePlan, Snapshot, Urgency,
};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::config::AppConfig;
use crate::error::AppError;
use crate::pipeline::{load_dataset, timeline_report, train_scorer, DatasetSources, IngestSummary, TimelineReport};

const STREAM_CAPACITY: usize = 64;

/// Everything a session is built from before any logged change.
#[derive(Debug, Clone)]
pub struct SessionInit {
    pub sources: DatasetSources,
    pub config: AppConfig,
    pub weights: CriterionWeights,
    pub constraints: HardConstraints,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub demand_csv: Option<String>,
    pub supplier_csv: Option<String>,
    pub history_csv: Option<String>,
    pub performance_csv: Option<String>,
    pub weights: Option<CriterionWeights>,
    pub constraints: Option<HardConstraints>,
    pub internal_resources: Option<Vec<InternalResource>>,
    pub cleaning_policy: Option<CleaningPolicy>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisruptionRequest {
    pub sku: String,
    /// Defaults to open orders minus stock.
    pub shortfall_quantity: Option<u64>,
    pub urgency: Option<Urgency>,
    pub detected_at: Option<f64>,
}

/// One entry of the session event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEntry {
    Disruption { event: DisruptionEvent },
    Update { update: ResourceUpdate },
    Weights { weights: CriterionWeights },
    Constraints { constraints: HardConstraints },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamEvent {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub version: u64,
}

#[derive(Debug, Clone)]
pub struct Session {
    init: SessionInit,
    summary: IngestSummary,
    scorer: Option<LinearScorer>,
    snapshot: Snapshot,
    weights: CriterionWeights,
    constraints: HardConstraints,
    events: Vec<DisruptionEvent>,
    log: Vec<LogEntry>,
}

impl Session {
    pub fn open(init: SessionInit) -> Result<Self, AppError> {
        init.config.validate()?;
        init.weights.validate()?;
        init.constraints.validate()?;
        let dataset = load_dataset(&init.sources, init.config.cleaning_policy)?;
        let scorer = train_scorer(&dataset.performance)?.map(|f| f.model);
        let snapshot = Snapshot::new(dataset.store, init.config.internal_resources.clone())?;
        Ok(Session {
            summary: dataset.summary,
            scorer,
            snapshot,
            weights: init.weights.clone(),
            constraints: init.constraints.clone(),
            events: Vec::new(),
            log: Vec::new(),
            init,
        })
    }

    /// Rebuilds a session by re-applying `log` to its initial inputs.
    pub fn replay(init: SessionInit, log: &[LogEntry]) -> Result<Self, AppError> {
        let mut session = Session::open(init)?;
        for entry in log {
            session.apply(entry.clone())?;
        }
        Ok(session)
    }

    /// Validates and applies one change, then appends it to the log.
    pub fn apply(&mut self, entry: LogEntry) -> Result<(), AppError> {
        match &entry {
            LogEntry::Disruption { event } => {
                event.validate()?;
                if self.events.iter().any(|e| e.event_id == event.event_id) {
                    return Err(AppError::validation(format!("duplicate event id `{}`", event.event_id)));
                }
                self.events.push(event.clone());
            }
            LogEntry::Update { update } => {
                self.snapshot = apply_resource_update(&self.snapshot, update)?;
            }
            LogEntry::Weights { weights } => {
                weights.validate()?;
                self.weights = weights.clone();
            }
            LogEntry::Constraints { constraints } => {
                constraints.validate()?;
                self.constraints = constraints.clone();
            }
        }
        self.log.push(entry);
        Ok(())
    }

    pub fn version(&self) -> u64 {
        self.snapshot.version()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    fn event(&self, event_id: &str) -> Result<&DisruptionEvent, AppError> {
        self.events
            .iter()
            .find(|e| e.event_id == event_id)
            .ok_or_else(|| AppError::not_found(format!("unknown event `{event_id}`")))
    }

    /// Runs the two-step response against the current snapshot.
    pub fn plan(&self, event: &DisruptionEvent) -> Result<ResponsePlan, AppError> {
        let options = RecommendOptions {
            weights: &self.weights,
            constraints: &self.constraints,
            scorer: self.scorer.as_ref(),
        };
        Ok(run_response(event, &self.snapshot, &options)?)
    }

    pub fn recommendations(&self, event_id: &str, phase: PhaseFilter) -> Result<RecommendationsView, AppError> {
        let plan = self.plan(self.event(event_id)?)?;
        Ok(recommendations_view(plan, self.version(), phase))
    }

    pub fn timeline(&self, event_id: &str, scenarios: ScenarioSet) -> Result<TimelineView, AppError> {
        let event = self.event(event_id)?;
        let plan = self.plan(event)?;
        let mut report = timeline_report(event, &plan, &self.init.config)?;
        if !scenarios.assisted {
            report.assisted = None;
            report.comparison = None;
            report.assisted_unavailable = Some("not requested".into());
        }
        Ok(TimelineView {
            snapshot_version: self.version(),
            report,
        })
    }

    pub fn view(&self, session_id: &str) -> SessionView {
        SessionView {
            session_id: session_id.to_string(),
            version: self.version(),
            weights: self.weights.clone(),
            constraints: self.constraints.clone(),
            events: self.events.iter().map(|e| e.event_id.clone()).collect(),
            log_length: self.log.len(),
            has_performance_model: self.scorer.is_some(),
            ingest: self.summary.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub version: u64,
    pub weights: CriterionWeights,
    pub constraints: HardConstraints,
    pub events: Vec<String>,
    pub log_length: usize,
    pub has_performance_model: bool,
    pub ingest: IngestSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DisruptionResponse {
    Disruption {
        event_id: String,
        event: DisruptionEvent,
        plan: ResponsePlan,
    },
    NoDisruption {
        sku: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFilter {
    Internal,
    External,
    #[default]
    Both,
}

impl std::str::FromStr for PhaseFilter {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        match s {
            "internal" => Ok(PhaseFilter::Internal),
            "external" => Ok(PhaseFilter::External),
            "both" => Ok(PhaseFilter::Both),
            other => Err(AppError::input(format!(
                "unknown phase `{other}`; expected internal, external or both"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InternalView {
    pub allocations: Vec<Allocation>,
    pub residual_shortfall: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalView {
    pub recommendation: Option<Recommendation>,
    pub no_qualifying_supplier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationsView {
    pub event_id: String,
    pub snapshot_version: u64,
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub internal: Option<InternalView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalView>,
}

/// Scenarios requested from the timeline endpoint. The baseline is always
/// returned because it is the reference for the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSet {
    pub assisted: bool,
}

impl Default for ScenarioSet {
    fn default() -> Self {
        ScenarioSet { assisted: true }
    }
}

impl std::str::FromStr for ScenarioSet {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        let mut set = ScenarioSet { assisted: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "baseline" => {}
                "assisted" => set.assisted = true,
                other => {
                    return Err(AppError::input(format!(
                        "unknown scenario `{other}`; expected baseline and/or assisted"
                    )))
                }
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineView {
    pub snapshot_version: u64,
    #[serde(flatten)]
    pub report: TimelineReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateAck {
    pub version: u64,
    pub target: scires_core::response::UpdateTarget,
}

struct SessionHandle {
    state: RwLock<Session>,
    stream: broadcast::Sender<StreamEvent>,
}

/// Owns all live sessions. Every mutation of a session happens under its
/// write lock, so the version precondition doubles as compare-and-set.
pub struct SessionService {
    defaults: SessionInit,
    sessions: RwLock<BTreeMap<String, Arc<SessionHandle>>>,
    next_id: AtomicU64,
}

fn poisoned() -> AppError {
    AppError::internal("session state lock poisoned")
}

impl SessionService {
    pub fn new(defaults: SessionInit) -> Self {
        SessionService {
            defaults,
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    fn handle(&self, session_id: &str) -> Result<Arc<SessionHandle>, AppError> {
        self.sessions
            .read()
            .map_err(|_| poisoned())?
            .get(session_id)
            .cloned()
            .ok_or_else(|| AppError::not_found(format!("unknown session `{session_id}`")))
    }

    fn read<T>(&self, session_id: &str, f: impl FnOnce(&Session) -> Result<T, AppError>) -> Result<T, AppError> {
        let handle = self.handle(session_id)?;
        let state = handle.state.read().map_err(|_| poisoned())?;
        f(&state)
    }

    /// Applies `entry` and notifies subscribers with `kind`.
    fn write(&self, session_id: &str, kind: &'static str, entry: LogEntry) -> Result<u64, AppError> {
        let handle = self.handle(session_id)?;
        let mut state = handle.state.write().map_err(|_| poisoned())?;
        state.apply(entry)?;
        let version = state.version();
        // No subscribers is not an error.
        let _ = handle.stream.send(StreamEvent { kind, version });
        Ok(version)
    }

    /// Initial inputs of a new session: service defaults overridden by
    /// whatever the request supplies.
    pub fn session_init(&self, req: CreateSessionRequest) -> Result<SessionInit, AppError> {
        let mut init = self.defaults.clone();
        match (req.demand_csv, req.supplier_csv) {
            (Some(demand), Some(suppliers)) => {
                init.sources = DatasetSources {
                    demand,
                    suppliers,
                    history: req.history_csv,
                    performance: req.performance_csv,
                };
            }
            (None, None) => {
                if req.history_csv.is_some() || req.performance_csv.is_some() {
                    return Err(AppError::input(
                        "history_csv and performance_csv need demand_csv and supplier_csv",
                    ));
                }
            }
            _ => return Err(AppError::input("demand_csv and supplier_csv must be given together")),
        }
        if let Some(w) = req.weights {
            init.weights = w;
        }
        if let Some(c) = req.constraints {
            init.constraints = c;
        }
        if let Some(r) = req.internal_resources {
            init.config.internal_resources = r;
        }
        if let Some(p) = req.cleaning_policy {
            init.config.cleaning_policy = p;
        }
        Ok(init)
    }

    pub fn create_session(&self, req: CreateSessionRequest) -> Result<SessionView, AppError> {
        let session = Session::open(self.session_init(req)?)?;
        let id = format!("s-{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let view = session.view(&id);
        let (stream, _) = broadcast::channel(STREAM_CAPACITY);
        self.sessions.write().map_err(|_| poisoned())?.insert(
            id,
            Arc::new(SessionHandle {
                state: RwLock::new(session),
                stream,
            }),
        );
        Ok(view)
    }

    pub fn get_session(&self, session_id: &str) -> Result<SessionView, AppError> {
        self.read(session_id, |s| Ok(s.view(session_id)))
    }

    pub fn session_log(&self, session_id: &str) -> Result<Vec<LogEntry>, AppError> {
        self.read(session_id, |s| Ok(s.log().to_vec()))
    }

    pub fn create_disruption(&self, session_id: &str, req: DisruptionRequest) -> Result<DisruptionResponse, AppError> {
        let handle = self.handle(session_id)?;
        let mut state = handle.state.write().map_err(|_| poisoned())?;
        let record = state
            .snapshot
            .store()
            .sku(&req.sku)
            .ok_or_else(|| AppError::not_found(format!("unknown sku `{}`", req.sku)))?;
        let shortfall = req.shortfall_quantity.unwrap_or_else(|| demand_gap(record));
        if shortfall == 0 {
            return Ok(DisruptionResponse::NoDisruption {
                sku: req.sku,
                message: "stock covers open orders; no disruption to respond to".into(),
            });
        }
        let event = DisruptionEvent {
            event_id: format!("evt-{}", state.events.len() + 1),
            disrupted_sku: req.sku.clone(),
            shortfall_quantity: shortfall,
            detected_at: req.detected_at.unwrap_or(0.0),
            urgency: req.urgency.unwrap_or_else(|| urgency_for(record)),
        };
        event.validate()?;
        let plan = state.plan(&event)?;
        state.apply(LogEntry::Disruption { event: event.clone() })?;
        let _ = handle.stream.send(StreamEvent {
            kind: "disruption_created",
            version: state.version(),
        });
        Ok(DisruptionResponse::Disruption {
            event_id: event.event_id.clone(),
            event,
            plan,
        })
    }

    pub fn put_weights(&self, session_id: &str, weights: CriterionWeights) -> Result<CriterionWeights, AppError> {
        self.write(
            session_id,
            "weights_updated",
            LogEntry::Weights {
                weights: weights.clone(),
            },
        )?;
        Ok(weights)
    }

    pub fn put_constraints(&self, session_id: &str, constraints: HardConstraints) -> Result<HardConstraints, AppError> {
        self.write(
            session_id,
            "constraints_updated",
            LogEntry::Constraints {
                constraints: constraints.clone(),
            },
        )?;
        Ok(constraints)
    }

    pub fn post_update(&self, session_id: &str, update: ResourceUpdate) -> Result<UpdateAck, AppError> {
        let target = update.target.clone();
        let version = self.write(session_id, "snapshot_updated", LogEntry::Update { update })?;
        Ok(UpdateAck { version, target })
    }

    pub fn recommendations(
        &self,
        session_id: &str,
        event_id: &str,
        phase: PhaseFilter,
    ) -> Result<RecommendationsView, AppError> {
        self.read(session_id, |s| s.recommendations(event_id, phase))
    }

    pub fn timeline(&self, session_id: &str, event_id: &str, scenarios: ScenarioSet) -> Result<TimelineView, AppError> {
        self.read(session_id, |s| s.timeline(event_id, scenarios))
    }

    pub fn subscribe(&self, session_id: &str) -> Result<broadcast::Receiver<StreamEvent>, AppError> {
        Ok(self.handle(session_id)?.stream.subscribe())
    }
}

fn recommendations_view(plan: ResponsePlan, version: u64, phase: PhaseFilter) -> RecommendationsView {
    let internal = matches!(phase, PhaseFilter::Internal | PhaseFilter::Both).then(|| InternalView {
        allocations: plan.internal_allocations.clone(),
        residual_shortfall: plan.residual_shortfall,
    });
    let external = matches!(phase, PhaseFilter::External | PhaseFilter::Both).then(|| ExternalView {
        recommendation: plan.external.clone(),
        no_qualifying_supplier: plan.no_qualifying_supplier,
    });
    RecommendationsView {
        event_id: plan.event_id,
        snapshot_version: version,
        phase: plan.phase,
        internal,
        external,
    }
}
