//! Dataset ingestion: CSV parsing, cleaning, profile construction and the
//! synthetic dataset generator.
//!
//! Two fixed schemas are understood: the demand (SKU) table and the supplier
//! table. A third, the order-history table, feeds the interaction matrix used
//! by collaborative filtering. Optional supplier performance observations are
//! the training set for the supervised scorer.

mod clean;
mod parse;
mod profile;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use clean::{clean_records, CleaningPolicy, CleaningReport, Issue, IssueAction, IssueKind};
pub use parse::{
    parse_dataset, parse_history, parse_performance, write_csv, write_history, write_performance, RawRow, RawTable,
    TableRecord,
};
pub use profile::{
    build_profiles, supplier_features, InteractionMatrix, OrderHistoryEntry, PerformanceObservation, ProfileStore,
    SUPPLIER_FEATURE_NAMES,
};
pub use synthetic::{generate_synthetic_dataset, SyntheticDataset};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("{dataset} dataset is missing mandatory column `{column}`")]
    MissingColumn { dataset: DatasetKind, column: String },
    #[error("malformed CSV in {dataset} dataset: {message}")]
    Csv { dataset: DatasetKind, message: String },
    #[error("{dataset} dataset has no usable rows")]
    EmptyDataset { dataset: DatasetKind },
    #[error("duplicate id `{id}`")]
    DuplicateId { id: String },
    #[error("{dataset} row {row}: {message}")]
    InvalidRow {
        dataset: DatasetKind,
        row: usize,
        message: String,
    },
    #[error("unknown {kind} `{id}` referenced by {dataset} row {row}")]
    UnknownReference {
        dataset: DatasetKind,
        kind: &'static str,
        id: String,
        row: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Demand,
    Supplier,
    History,
    Performance,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Demand => "demand",
            DatasetKind::Supplier => "supplier",
            DatasetKind::History => "history",
            DatasetKind::Performance => "performance",
        })
    }
}

/// One row of the demand table (the user profile).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkuRecord {
    pub sku_id: String,
    pub product_type: String,
    pub price: f64,
    pub availability: u64,
    pub units_sold: u64,
    pub revenue: f64,
    /// Opaque category; never used as a numeric feature.
    pub customer_demographic: String,
    pub stock_level: u64,
    pub order_quantity: u64,
}

/// One external resource (supplier) profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplierProfile {
    pub supplier_id: String,
    pub location: String,
    pub lead_time: f64,
    pub production_volume: u64,
    pub manufacturing_lead_time: f64,
    pub manufacturing_cost: f64,
    pub inspection_result: InspectionResult,
    pub defect_rate: f64,
    pub transport_mode: TransportMode,
    pub route: String,
    pub shipping_cost: f64,
}

impl SupplierProfile {
    /// Manufacturing plus shipping cost per unit.
    pub fn unit_cost(&self) -> f64 {
        self.manufacturing_cost + self.shipping_cost
    }

    /// Checks the type invariants; returns the offending field on failure.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.supplier_id.trim().is_empty() {
            return Err(("supplier_id", "must be non-empty".into()));
        }
        if !(self.lead_time.is_finite() && self.lead_time > 0.0) {
            return Err(("lead_time", format!("{} is not > 0", self.lead_time)));
        }
        for (name, v) in [
            ("manufacturing_lead_time", self.manufacturing_lead_time),
            ("manufacturing_cost", self.manufacturing_cost),
            ("shipping_cost", self.shipping_cost),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err((name, format!("{v} is not a finite value >= 0")));
            }
        }
        if !(self.defect_rate.is_finite() && (0.0..=1.0).contains(&self.defect_rate)) {
            return Err(("defect_rate", format!("{} is outside [0, 1]", self.defect_rate)));
        }
        Ok(())
    }
}

impl SkuRecord {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.sku_id.trim().is_empty() {
            return Err(("sku_id", "must be non-empty".into()));
        }
        for (name, v) in [("price", self.price), ("revenue", self.revenue)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err((name, format!("{v} is not a finite value >= 0")));
            }
        }
        Ok(())
    }
}

/// Quality inspection outcome, ordered `Fail < Pending < Pass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InspectionResult {
    Fail,
    Pending,
    Pass,
}

impl InspectionResult {
    pub fn score(self) -> f64 {
        match self {
            InspectionResult::Pass => 1.0,
            InspectionResult::Pending => 0.5,
            InspectionResult::Fail => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InspectionResult::Pass => "Pass",
            InspectionResult::Pending => "Pending",
            InspectionResult::Fail => "Fail",
        }
    }
}

impl FromStr for InspectionResult {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pass" => Ok(InspectionResult::Pass),
            "pending" => Ok(InspectionResult::Pending),
            "fail" => Ok(InspectionResult::Fail),
            _ => Err(s.to_string()),
        }
    }
}

impl fmt::Display for InspectionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransportMode {
    Road,
    Rail,
    Air,
    Sea,
}

impl TransportMode {
    pub const ALL: [TransportMode; 4] = [
        TransportMode::Road,
        TransportMode::Rail,
        TransportMode::Air,
        TransportMode::Sea,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransportMode::Road => "Road",
            TransportMode::Rail => "Rail",
            TransportMode::Air => "Air",
            TransportMode::Sea => "Sea",
        }
    }
}

impl FromStr for TransportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "road" => Ok(TransportMode::Road),
            "rail" => Ok(TransportMode::Rail),
            "air" => Ok(TransportMode::Air),
            "sea" => Ok(TransportMode::Sea),
            _ => Err(s.to_string()),
        }
    }
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Header normalization: trimmed, lower-cased, spaces and dashes become `_`.
pub(crate) fn normalize_header(h: &str) -> String {
    h.trim()
        .trim_start_matches('\u{feff}')
        .chars()
        .map(|c| match c {
            ' ' | '-' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}
