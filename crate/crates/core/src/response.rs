//! Disruption response: detect the demand gap, cover it from internal
//! redundancy first, then rank external suppliers for whatever remains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ingest::{ProfileStore, SkuRecord, SupplierProfile};
use crate::learning::{cluster_suppliers, LearningError, LinearScorer};
use crate::recommender::{
    base_columns, collaborative_scores, content_similarity, filter_hard_constraints, score_columns, select_algorithm,
    Algorithm, Criterion, CriterionColumn, CriterionWeights, DataCharacteristics, HardConstraints, RecommendError,
    Recommendation,
};

/// Cluster count used by the cluster-first path, capped by the pool size.
pub const CLUSTER_FIRST_K: usize = 3;
pub const CLUSTER_FIRST_SEED: u64 = 0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("no supplier satisfies the hard constraints for `{sku}` ({candidates} candidates considered)")]
    NoQualifyingSupplier { sku: String, candidates: usize },
    #[error("{stage} stage failed: {source}")]
    Recommend {
        stage: &'static str,
        #[source]
        source: RecommendError,
    },
    #[error("{stage} stage failed: {source}")]
    Learning {
        stage: &'static str,
        #[source]
        source: LearningError,
    },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("internal resource {index} is invalid: {message}")]
    InvalidResource { index: usize, message: String },
    #[error("version conflict: expected {expected}, got {got}")]
    VersionConflict { expected: u64, got: u64 },
    #[error("unknown update target {0}")]
    UnknownTarget(String),
    #[error("invalid update: {0}")]
    InvalidUpdate(String),
}

impl ResponseError {
    fn recommend(stage: &'static str) -> impl FnOnce(RecommendError) -> Self {
        move |source| ResponseError::Recommend { stage, source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Urgency {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisruptionEvent {
    pub event_id: String,
    pub disrupted_sku: String,
    pub shortfall_quantity: u64,
    /// Scenario time in days.
    pub detected_at: f64,
    pub urgency: Urgency,
}

impl DisruptionEvent {
    pub fn validate(&self) -> Result<(), ResponseError> {
        if self.shortfall_quantity == 0 {
            return Err(ResponseError::InvalidEvent("shortfall_quantity must be > 0".into()));
        }
        if !(self.detected_at.is_finite() && self.detected_at >= 0.0) {
            return Err(ResponseError::InvalidEvent(
                "detected_at must be a finite value >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Open orders not covered by stock.
pub fn demand_gap(record: &SkuRecord) -> u64 {
    record.order_quantity.saturating_sub(record.stock_level)
}

/// High when stock is zero, medium when stock covers less than half the
/// order, low otherwise.
pub fn urgency_for(record: &SkuRecord) -> Urgency {
    if record.stock_level == 0 {
        Urgency::High
    } else if 2 * record.stock_level < record.order_quantity {
        Urgency::Medium
    } else {
        Urgency::Low
    }
}

/// Flags SKUs whose stock cannot cover open orders while availability is
/// below `availability_threshold`. Events are stamped at day 0 and named
/// `evt-<sku>`.
pub fn detect_disruption(records: &[SkuRecord], availability_threshold: u64) -> Vec<DisruptionEvent> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    records
        .iter()
        .filter_map(|r| {
            let gap = demand_gap(r);
            if gap == 0 || r.availability >= availability_threshold {
                return None;
            }
            let n = seen.entry(r.sku_id.as_str()).or_insert(0);
            *n += 1;
            let event_id = if *n == 1 {
                format!("evt-{}", r.sku_id)
            } else {
                format!("evt-{}-{n}", r.sku_id)
            };
            Some(DisruptionEvent {
                event_id,
                disrupted_sku: r.sku_id.clone(),
                shortfall_quantity: gap,
                detected_at: 0.0,
                urgency: urgency_for(r),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    InventoryBuffer,
    CapacityBuffer,
    HumanResource,
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceKind::InventoryBuffer => "inventory_buffer",
            ResourceKind::CapacityBuffer => "capacity_buffer",
            ResourceKind::HumanResource => "human_resource",
        })
    }
}

/// Internal redundancy. Human resources are expressed in output units per
/// period so all kinds share one quantity scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalResource {
    pub resource_kind: ResourceKind,
    /// Inventory is tied to a SKU; capacity and people may be generic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sku_id: Option<String>,
    pub quantity_available: u64,
    /// Days until the resource can be used.
    pub activation_delay: f64,
}

impl InternalResource {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.activation_delay.is_finite() && self.activation_delay >= 0.0) {
            return Err("activation_delay must be a finite value >= 0".into());
        }
        match self.resource_kind {
            ResourceKind::InventoryBuffer => {
                if self.activation_delay != 0.0 {
                    return Err("inventory_buffer must have activation_delay 0".into());
                }
                if self.sku_id.is_none() {
                    return Err("inventory_buffer must name its sku_id".into());
                }
            }
            _ => {
                if self.activation_delay <= 0.0 {
                    return Err(format!("{} must have activation_delay > 0", self.resource_kind));
                }
            }
        }
        Ok(())
    }

    fn serves(&self, sku: &str) -> bool {
        self.sku_id.as_deref().is_none_or(|s| s == sku)
    }
}

pub fn validate_resources(resources: &[InternalResource]) -> Result<(), ResponseError> {
    for (index, r) in resources.iter().enumerate() {
        r.validate()
            .map_err(|message| ResponseError::InvalidResource { index, message })?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub resource_kind: ResourceKind,
    /// Position of the resource in the input list.
    pub resource_index: usize,
    pub quantity: u64,
    pub available_at: f64,
}

/// Greedy cover of the shortfall from internal redundancy.
///
/// Eligible resources are inventory for the disrupted SKU and capacity or
/// human resources that are generic or tied to that SKU. They are consumed
/// by activation delay ascending, then larger quantity first, with
/// inventory before capacity before human resources on remaining ties.
/// Returns the allocations and the uncovered residual.
pub fn plan_internal_response(event: &DisruptionEvent, resources: &[InternalResource]) -> (Vec<Allocation>, u64) {
    let mut order: Vec<usize> = (0..resources.len())
        .filter(|&i| resources[i].serves(&event.disrupted_sku) && resources[i].quantity_available > 0)
        .collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&resources[a], &resources[b]);
        ra.activation_delay
            .total_cmp(&rb.activation_delay)
            .then(rb.quantity_available.cmp(&ra.quantity_available))
            .then(ra.resource_kind.cmp(&rb.resource_kind))
            .then(a.cmp(&b))
    });
    let mut remaining = event.shortfall_quantity;
    let mut allocations = Vec::new();
    for i in order {
        if remaining == 0 {
            break;
        }
        let r = &resources[i];
        let quantity = remaining.min(r.quantity_available);
        remaining -= quantity;
        allocations.push(Allocation {
            resource_kind: r.resource_kind,
            resource_index: i,
            quantity,
            available_at: event.detected_at + r.activation_delay,
        });
    }
    (allocations, remaining)
}

/// Ranking inputs owned by the operator.
#[derive(Debug, Clone, Copy)]
pub struct RecommendOptions<'a> {
    pub weights: &'a CriterionWeights,
    pub constraints: &'a HardConstraints,
    pub scorer: Option<&'a LinearScorer>,
}

/// Ranks external suppliers for the residual demand of `event`.
///
/// Stages: algorithm selection, hard-constraint filter, criterion assembly
/// (the five base criteria plus the signal of the selected algorithm),
/// weighted scoring. Every stage appends one line to `algorithm_trace`.
pub fn recommend_external(
    event: &DisruptionEvent,
    residual: u64,
    store: &ProfileStore,
    options: &RecommendOptions<'_>,
    snapshot_version: u64,
) -> Result<Recommendation, ResponseError> {
    if residual == 0 {
        return Err(ResponseError::InvalidEvent(
            "external recommendation needs a residual shortfall > 0".into(),
        ));
    }
    let sku = event.disrupted_sku.as_str();
    let mut trace = Vec::new();

    let data = DataCharacteristics {
        has_performance_labels: options.scorer.is_some(),
        profiles_complete: store.profiles_complete(),
        has_interaction_history: store
            .interactions()
            .row(sku)
            .is_some_and(|row| row.iter().any(|&c| c > 0)),
    };
    let choice = select_algorithm(data);
    trace.push(format!("select: {} ({})", choice.chosen, choice.reason));

    options
        .constraints
        .validate()
        .map_err(ResponseError::recommend("filter"))?;
    let all = store.suppliers();
    let survivors = filter_hard_constraints(all, options.constraints);
    trace.push(format!(
        "filter: {} of {} suppliers pass hard constraints",
        survivors.len(),
        all.len()
    ));
    if survivors.is_empty() {
        return Err(ResponseError::NoQualifyingSupplier {
            sku: sku.to_string(),
            candidates: all.len(),
        });
    }

    let mut columns = base_columns(&survivors);
    let mut clusters: Option<BTreeMap<String, usize>> = None;
    match choice.chosen {
        Algorithm::SupervisedScoring => {
            let scorer = options.scorer.expect("supervised path implies a scorer");
            let values = survivors
                .iter()
                .map(|s| scorer.predict(&crate::ingest::supplier_features(s)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| ResponseError::Learning {
                    stage: "predict",
                    source,
                })?;
            trace.push(format!(
                "predict: scored {} suppliers with the supervised model",
                values.len()
            ));
            columns.push(CriterionColumn {
                criterion: Criterion::PredictedPerformance,
                values,
            });
        }
        Algorithm::Collaborative => {
            let scores =
                collaborative_scores(store.interactions(), sku).map_err(ResponseError::recommend("collaborative"))?;
            let values = survivors
                .iter()
                .map(|s| scores.get(&s.supplier_id).copied().unwrap_or(0.0))
                .collect();
            trace.push(format!(
                "collaborative: item-based affinity from order history of {sku}"
            ));
            columns.push(CriterionColumn {
                criterion: Criterion::CollaborativeAffinity,
                values,
            });
        }
        Algorithm::ClusterFirst => {
            let ids: Vec<String> = all.iter().map(|s| s.supplier_id.clone()).collect();
            let k = CLUSTER_FIRST_K.min(ids.len());
            let assignment =
                cluster_suppliers(&ids, &store.clustering_features(), k, CLUSTER_FIRST_SEED).map_err(|source| {
                    ResponseError::Learning {
                        stage: "cluster",
                        source,
                    }
                })?;
            trace.push(format!(
                "cluster: k={k} seed={CLUSTER_FIRST_SEED} sse={:.6} iterations={}",
                assignment.sse, assignment.iterations
            ));
            clusters = Some(assignment.assignments);
        }
        Algorithm::KnowledgeMulticriteria | Algorithm::ContentBased => {}
    }

    if options.weights.content_similarity.is_some_and(|w| w > 0.0) {
        if let Some(anchor) = store
            .interactions()
            .preferred_supplier(sku)
            .and_then(|id| store.scaled_features(id).map(|f| (id.to_string(), f)))
        {
            let values = survivors
                .iter()
                .map(|s| {
                    let f = store.scaled_features(&s.supplier_id).expect("survivor is in the store");
                    content_similarity(&f, &anchor.1).unwrap_or(0.0)
                })
                .collect();
            trace.push(format!("content: similarity to preferred supplier {}", anchor.0));
            columns.push(CriterionColumn {
                criterion: Criterion::ContentSimilarity,
                values,
            });
        }
    }

    let mut entries =
        score_columns(&survivors, &columns, options.weights).map_err(ResponseError::recommend("score"))?;
    let criteria: BTreeSet<Criterion> = columns.iter().map(|c| c.criterion).collect();
    trace.push(format!(
        "score: {} candidates on {}",
        entries.len(),
        criteria.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ")
    ));
    for e in &mut entries {
        e.fulfillable_quantity = residual.min(e.production_volume);
        if let Some(c) = &clusters {
            e.cluster = c.get(&e.supplier_id).copied();
        }
    }

    Ok(Recommendation {
        demand: sku.to_string(),
        entries,
        snapshot_version,
        algorithm: choice.chosen,
        algorithm_trace: trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    InternalOnly,
    InternalPlusExternal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePlan {
    pub event_id: String,
    pub internal_allocations: Vec<Allocation>,
    pub residual_shortfall: u64,
    pub external: Option<Recommendation>,
    pub phase: Phase,
    /// Set when a residual remained but every supplier was filtered out.
    pub no_qualifying_supplier: bool,
}

impl ResponsePlan {
    pub fn internal_total(&self) -> u64 {
        self.internal_allocations.iter().map(|a| a.quantity).sum()
    }
}

/// Immutable session state: the profile store and internal resources at a
/// given version.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    version: u64,
    store: Arc<ProfileStore>,
    resources: Arc<Vec<InternalResource>>,
}

impl Snapshot {
    pub fn new(store: ProfileStore, resources: Vec<InternalResource>) -> Result<Self, ResponseError> {
        validate_resources(&resources)?;
        Ok(Snapshot {
            version: 0,
            store: Arc::new(store),
            resources: Arc::new(resources),
        })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn store(&self) -> &ProfileStore {
        &self.store
    }

    pub fn internal_resources(&self) -> &[InternalResource] {
        &self.resources
    }
}

/// Step 1 then, only if demand remains, step 2.
pub fn run_response(
    event: &DisruptionEvent,
    snapshot: &Snapshot,
    options: &RecommendOptions<'_>,
) -> Result<ResponsePlan, ResponseError> {
    event.validate()?;
    options
        .weights
        .validate()
        .map_err(ResponseError::recommend("weights"))?;
    options
        .constraints
        .validate()
        .map_err(ResponseError::recommend("constraints"))?;

    let (internal_allocations, residual) = plan_internal_response(event, snapshot.internal_resources());
    if residual == 0 {
        return Ok(ResponsePlan {
            event_id: event.event_id.clone(),
            internal_allocations,
            residual_shortfall: 0,
            external: None,
            phase: Phase::InternalOnly,
            no_qualifying_supplier: false,
        });
    }
    let (external, no_qualifying_supplier) =
        match recommend_external(event, residual, snapshot.store(), options, snapshot.version()) {
            Ok(r) => (Some(r), false),
            Err(ResponseError::NoQualifyingSupplier { .. }) => (None, true),
            Err(e) => return Err(e),
        };
    Ok(ResponsePlan {
        event_id: event.event_id.clone(),
        internal_allocations,
        residual_shortfall: residual,
        external,
        phase: Phase::InternalPlusExternal,
        no_qualifying_supplier,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateTarget {
    Supplier(String),
    /// Index into the snapshot's internal resource list.
    Internal(usize),
}

impl fmt::Display for UpdateTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdateTarget::Supplier(id) => write!(f, "supplier `{id}`"),
            UpdateTarget::Internal(i) => write!(f, "internal resource {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceUpdate {
    pub version: u64,
    pub target: UpdateTarget,
    pub changed_fields: serde_json::Map<String, Value>,
    #[serde(default)]
    pub at_time: f64,
}

/// Overwrites `changes` on the serialized form of `record` and parses it back.
/// Unknown fields are rejected by the record's deserializer.
fn merge_fields<T>(record: &T, changes: &serde_json::Map<String, Value>, immutable: &str) -> Result<T, ResponseError>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let mut value = serde_json::to_value(record).expect("plain data serializes");
    let obj = value.as_object_mut().expect("records serialize to objects");
    for (field, v) in changes {
        if field == immutable {
            return Err(ResponseError::InvalidUpdate(format!("`{field}` cannot be changed")));
        }
        obj.insert(field.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| ResponseError::InvalidUpdate(e.to_string()))
}

/// Applies one versioned change and returns the next snapshot. The input
/// snapshot is left untouched.
pub fn apply_resource_update(snapshot: &Snapshot, update: &ResourceUpdate) -> Result<Snapshot, ResponseError> {
    let expected = snapshot.version + 1;
    if update.version != expected {
        return Err(ResponseError::VersionConflict {
            expected,
            got: update.version,
        });
    }
    if !(update.at_time.is_finite() && update.at_time >= 0.0) {
        return Err(ResponseError::InvalidUpdate(
            "at_time must be a finite value >= 0".into(),
        ));
    }
    if update.changed_fields.is_empty() {
        return Err(ResponseError::InvalidUpdate("changed_fields is empty".into()));
    }
    match &update.target {
        UpdateTarget::Supplier(id) => {
            let current = snapshot
                .store
                .supplier(id)
                .ok_or_else(|| ResponseError::UnknownTarget(update.target.to_string()))?;
            let updated: SupplierProfile = merge_fields(current, &update.changed_fields, "supplier_id")?;
            updated
                .validate()
                .map_err(|(field, message)| ResponseError::InvalidUpdate(format!("{field}: {message}")))?;
            let store = snapshot
                .store
                .with_supplier(updated)
                .map_err(|e| ResponseError::InvalidUpdate(e.to_string()))?;
            Ok(Snapshot {
                version: expected,
                store: Arc::new(store),
                resources: Arc::clone(&snapshot.resources),
            })
        }
        UpdateTarget::Internal(index) => {
            let current = snapshot
                .resources
                .get(*index)
                .ok_or_else(|| ResponseError::UnknownTarget(update.target.to_string()))?;
            let updated: InternalResource = merge_fields(current, &update.changed_fields, "resource_kind")?;
            updated.validate().map_err(ResponseError::InvalidUpdate)?;
            let mut resources = (*snapshot.resources).clone();
            resources[*index] = updated;
            Ok(Snapshot {
                version: expected,
                store: Arc::clone(&snapshot.store),
                resources: Arc::new(resources),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_profiles, InspectionResult, TransportMode};

    fn sku(id: &str, order: u64, stock: u64, availability: u64) -> SkuRecord {
        SkuRecord {
            sku_id: id.into(),
            product_type: "haircare".into(),
            price: 10.0,
            availability,
            units_sold: 10,
            revenue: 100.0,
            customer_demographic: "Unknown".into(),
            stock_level: stock,
            order_quantity: order,
        }
    }

    fn supplier(id: &str, lead: f64, cost: f64, volume: u64) -> SupplierProfile {
        SupplierProfile {
            supplier_id: id.into(),
            location: "Mumbai".into(),
            lead_time: lead,
            production_volume: volume,
            manufacturing_lead_time: 2.0,
            manufacturing_cost: cost,
            inspection_result: InspectionResult::Pass,
            defect_rate: 0.01,
            transport_mode: TransportMode::Road,
            route: "Route A".into(),
            shipping_cost: 0.0,
        }
    }

    fn event(shortfall: u64) -> DisruptionEvent {
        DisruptionEvent {
            event_id: "evt-SKU1".into(),
            disrupted_sku: "SKU1".into(),
            shortfall_quantity: shortfall,
            detected_at: 10.0,
            urgency: Urgency::Medium,
        }
    }

    fn inventory(q: u64) -> InternalResource {
        InternalResource {
            resource_kind: ResourceKind::InventoryBuffer,
            sku_id: Some("SKU1".into()),
            quantity_available: q,
            activation_delay: 0.0,
        }
    }

    fn capacity(q: u64, delay: f64) -> InternalResource {
        InternalResource {
            resource_kind: ResourceKind::CapacityBuffer,
            sku_id: None,
            quantity_available: q,
            activation_delay: delay,
        }
    }

    fn store() -> ProfileStore {
        build_profiles(
            vec![sku("SKU1", 40, 15, 3)],
            vec![supplier("A", 5.0, 10.0, 20), supplier("B", 10.0, 8.0, 500)],
            &[],
        )
        .unwrap()
    }

    fn weights() -> CriterionWeights {
        CriterionWeights::base(0.6, 0.4, 0.0, 0.0, 0.0)
    }

    #[test]
    fn detection_rules() {
        let events = detect_disruption(
            &[
                sku("S0", 40, 0, 0),
                sku("S1", 40, 60, 0),
                sku("S2", 40, 15, 3),
                sku("S3", 40, 25, 3),
                sku("S4", 40, 0, 10),
            ],
            10,
        );
        let got: Vec<_> = events
            .iter()
            .map(|e| (e.disrupted_sku.as_str(), e.shortfall_quantity, e.urgency))
            .collect();
        assert_eq!(
            got,
            [
                ("S0", 40, Urgency::High),
                ("S2", 25, Urgency::Medium),
                ("S3", 15, Urgency::Low)
            ]
        );
        assert_eq!(events[0].event_id, "evt-S0");
    }

    #[test]
    fn duplicate_skus_get_distinct_event_ids() {
        let events = detect_disruption(&[sku("S0", 40, 0, 0), sku("S0", 30, 0, 0)], 10);
        assert_eq!(events[0].event_id, "evt-S0");
        assert_eq!(events[1].event_id, "evt-S0-2");
    }

    #[test]
    fn internal_cover_examples() {
        let (a, r) = plan_internal_response(&event(50), &[inventory(80)]);
        assert_eq!((a.len(), a[0].quantity, r), (1, 50, 0));

        let (a, r) = plan_internal_response(&event(100), &[capacity(40, 2.0), inventory(30)]);
        let got: Vec<_> = a
            .iter()
            .map(|x| (x.resource_kind, x.quantity, x.available_at))
            .collect();
        assert_eq!(
            got,
            [
                (ResourceKind::InventoryBuffer, 30, 10.0),
                (ResourceKind::CapacityBuffer, 40, 12.0)
            ]
        );
        assert_eq!(r, 30);

        let (a, r) = plan_internal_response(&event(10), &[]);
        assert!(a.is_empty());
        assert_eq!(r, 10);
    }

    #[test]
    fn foreign_inventory_is_ignored() {
        let mut other = inventory(100);
        other.sku_id = Some("SKU9".into());
        let (a, r) = plan_internal_response(&event(10), &[other]);
        assert!(a.is_empty());
        assert_eq!(r, 10);
    }

    #[test]
    fn resource_validation() {
        let mut bad = inventory(1);
        bad.activation_delay = 1.0;
        assert!(bad.validate().is_err());
        assert!(capacity(1, 0.0).validate().is_err());
        assert!(matches!(
            Snapshot::new(store(), vec![capacity(1, -1.0)]),
            Err(ResponseError::InvalidResource { index: 0, .. })
        ));
    }

    #[test]
    fn external_caps_fulfillable() {
        let s = store();
        let opts = RecommendOptions {
            weights: &weights(),
            constraints: &HardConstraints::default(),
            scorer: None,
        };
        let rec = recommend_external(&event(100), 30, &s, &opts, 0).unwrap();
        assert_eq!(rec.algorithm, Algorithm::KnowledgeMulticriteria);
        let got: Vec<_> = rec
            .entries
            .iter()
            .map(|e| (e.supplier_id.as_str(), e.fulfillable_quantity))
            .collect();
        assert_eq!(got, [("A", 20), ("B", 30)]);
        assert!((rec.entries[0].overall_score - 0.6).abs() < 1e-12);
        assert_eq!(rec.algorithm_trace.len(), 3);
    }

    #[test]
    fn supervised_adds_predicted_performance() {
        let s = store();
        let model = LinearScorer::new(
            crate::ingest::SUPPLIER_FEATURE_NAMES
                .iter()
                .map(|n| n.to_string())
                .collect(),
            vec![0.0, 0.0, 0.001, 0.0, 0.0],
            0.5,
            0.0,
        )
        .unwrap();
        let opts = RecommendOptions {
            weights: &weights(),
            constraints: &HardConstraints::default(),
            scorer: Some(&model),
        };
        let rec = recommend_external(&event(100), 30, &s, &opts, 0).unwrap();
        assert_eq!(rec.algorithm, Algorithm::SupervisedScoring);
        // B has the larger volume, so its predicted performance is the maximum.
        let b = rec.entries.iter().find(|e| e.supplier_id == "B").unwrap();
        assert_eq!(b.criterion_scores[&Criterion::PredictedPerformance], 1.0);
        assert!((b.overall_score - 1.4).abs() < 1e-12);
        assert_eq!(rec.top().unwrap().supplier_id, "B");
    }

    #[test]
    fn no_qualifying_supplier() {
        let s = Snapshot::new(store(), vec![]).unwrap();
        let c = HardConstraints {
            max_lead_time: Some(1.0),
            ..Default::default()
        };
        let opts = RecommendOptions {
            weights: &weights(),
            constraints: &c,
            scorer: None,
        };
        assert!(matches!(
            recommend_external(&event(10), 10, s.store(), &opts, 0),
            Err(ResponseError::NoQualifyingSupplier { .. })
        ));
        let plan = run_response(&event(10), &s, &opts).unwrap();
        assert!(plan.no_qualifying_supplier);
        assert!(plan.external.is_none());
        assert_eq!(plan.residual_shortfall, 10);
    }

    #[test]
    fn sequencing() {
        let opts = RecommendOptions {
            weights: &weights(),
            constraints: &HardConstraints::default(),
            scorer: None,
        };
        let covered = Snapshot::new(store(), vec![inventory(200)]).unwrap();
        let plan = run_response(&event(100), &covered, &opts).unwrap();
        assert_eq!(plan.phase, Phase::InternalOnly);
        assert!(plan.external.is_none());

        let partial = Snapshot::new(store(), vec![inventory(30), capacity(40, 1.0)]).unwrap();
        let plan = run_response(&event(100), &partial, &opts).unwrap();
        assert_eq!(plan.phase, Phase::InternalPlusExternal);
        assert_eq!(plan.internal_total(), 70);
        assert_eq!(plan.residual_shortfall, 30);
        let ext = plan.external.unwrap();
        assert!(ext.entries.iter().all(|e| e.fulfillable_quantity <= 30));
    }

    #[test]
    fn update_versioning() {
        let s0 = Snapshot::new(store(), vec![capacity(10, 1.0)]).unwrap();
        let mut fields = serde_json::Map::new();
        fields.insert("lead_time".into(), 1.0.into());
        let up = ResourceUpdate {
            version: 1,
            target: UpdateTarget::Supplier("B".into()),
            changed_fields: fields,
            at_time: 2.0,
        };
        let s1 = apply_resource_update(&s0, &up).unwrap();
        assert_eq!(s1.version(), 1);
        assert_eq!(s1.store().supplier("B").unwrap().lead_time, 1.0);
        assert_eq!(s0.store().supplier("B").unwrap().lead_time, 10.0);
        assert_eq!(
            apply_resource_update(&s1, &up),
            Err(ResponseError::VersionConflict { expected: 2, got: 1 })
        );

        let mut internal = serde_json::Map::new();
        internal.insert("quantity_available".into(), 99.into());
        let s2 = apply_resource_update(
            &s1,
            &ResourceUpdate {
                version: 2,
                target: UpdateTarget::Internal(0),
                changed_fields: internal,
                at_time: 3.0,
            },
        )
        .unwrap();
        assert_eq!(s2.internal_resources()[0].quantity_available, 99);
    }

    #[test]
    fn bad_updates() {
        let s0 = Snapshot::new(store(), vec![]).unwrap();
        let mk = |target: UpdateTarget, field: &str, v: Value| {
            let mut m = serde_json::Map::new();
            m.insert(field.into(), v);
            ResourceUpdate {
                version: 1,
                target,
                changed_fields: m,
                at_time: 0.0,
            }
        };
        let sup = || UpdateTarget::Supplier("A".into());
        assert!(matches!(
            apply_resource_update(&s0, &mk(UpdateTarget::Supplier("Z".into()), "lead_time", 1.into())),
            Err(ResponseError::UnknownTarget(_))
        ));
        for (field, v) in [
            ("nope", Value::from(1)),
            ("supplier_id", "X".into()),
            ("lead_time", (-1).into()),
            ("lead_time", "x".into()),
        ] {
            assert!(matches!(
                apply_resource_update(&s0, &mk(sup(), field, v)),
                Err(ResponseError::InvalidUpdate(_))
            ));
        }
    }

    #[test]
    fn plan_serialization_is_stable() {
        let s = Snapshot::new(store(), vec![inventory(10)]).unwrap();
        let opts = RecommendOptions {
            weights: &weights(),
            constraints: &HardConstraints::default(),
            scorer: None,
        };
        let a = serde_json::to_string(&run_response(&event(40), &s, &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&run_response(&event(40), &s, &opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
