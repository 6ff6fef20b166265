use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::RecommendError;
use crate::ingest::{InspectionResult, SupplierProfile, TransportMode};

/// Knock-out requirements on external suppliers. Absent bounds impose
/// nothing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardConstraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lead_time: Option<f64>,
    /// Upper bound on manufacturing plus shipping cost per unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_unit_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_production_volume: Option<f64>,
    /// Minimum acceptable level on `Fail < Pending < Pass`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_inspection: Option<InspectionResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_defect_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_transport_modes: Option<BTreeSet<TransportMode>>,
}

impl HardConstraints {
    pub fn validate(&self) -> Result<(), RecommendError> {
        let mut bad = Vec::new();
        let non_negative = |v: Option<f64>| v.is_none_or(|v| v.is_finite() && v >= 0.0);
        if !non_negative(self.max_lead_time) {
            bad.push("max_lead_time");
        }
        if !non_negative(self.max_unit_cost) {
            bad.push("max_unit_cost");
        }
        if !non_negative(self.min_production_volume) {
            bad.push("min_production_volume");
        }
        if !self.max_defect_rate.is_none_or(|v| (0.0..=1.0).contains(&v)) {
            bad.push("max_defect_rate");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(RecommendError::InvalidConstraints {
                fields: bad.into_iter().map(String::from).collect(),
                message: "bounds must be finite and inside the field's domain".into(),
            })
        }
    }

    /// Names of the bounds `supplier` violates; empty when it qualifies.
    pub fn violations(&self, supplier: &SupplierProfile) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.max_lead_time.is_some_and(|m| supplier.lead_time > m) {
            out.push("max_lead_time");
        }
        if self.max_unit_cost.is_some_and(|m| supplier.unit_cost() > m) {
            out.push("max_unit_cost");
        }
        if self
            .min_production_volume
            .is_some_and(|m| (supplier.production_volume as f64) < m)
        {
            out.push("min_production_volume");
        }
        if self.required_inspection.is_some_and(|r| supplier.inspection_result < r) {
            out.push("required_inspection");
        }
        if self.max_defect_rate.is_some_and(|m| supplier.defect_rate > m) {
            out.push("max_defect_rate");
        }
        if self
            .allowed_transport_modes
            .as_ref()
            .is_some_and(|modes| !modes.contains(&supplier.transport_mode))
        {
            out.push("allowed_transport_modes");
        }
        out
    }

    pub fn admits(&self, supplier: &SupplierProfile) -> bool {
        self.violations(supplier).is_empty()
    }
}

/// Keeps the candidates that satisfy every present bound, in input order.
/// An empty result is a valid outcome the caller has to surface.
pub fn filter_hard_constraints(candidates: &[SupplierProfile], constraints: &HardConstraints) -> Vec<SupplierProfile> {
    candidates.iter().filter(|s| constraints.admits(s)).cloned().collect()
}
