//! Ranking primitives for external resource recommendation.
//!
//! Candidates are scored by a weighted sum of min-max normalized criteria.
//! Weights are expert inputs and need not sum to one, so overall scores can
//! exceed 1. Hard constraints are applied before scoring, which keeps the
//! normalization range confined to suppliers that can actually be used.

mod filter;
mod scoring;
mod select;
mod similarity;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use filter::{filter_hard_constraints, HardConstraints};
pub use scoring::{base_columns, normalize_criterion, score_columns, score_multicriteria, CriterionColumn};
pub use select::{select_algorithm, Algorithm, AlgorithmChoice, DataCharacteristics};
pub use similarity::{collaborative_scores, content_similarity};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RecommendError {
    #[error("cannot normalize an empty criterion")]
    EmptyInput,
    #[error("no candidates to score")]
    NoCandidates,
    #[error("criterion `{criterion}` has a non-finite value")]
    NonFinite { criterion: String },
    #[error("criterion column `{criterion}` has {got} values for {expected} candidates")]
    ColumnLength {
        criterion: Criterion,
        expected: usize,
        got: usize,
    },
    #[error("invalid weights ({}): {message}", fields.join(", "))]
    InvalidWeights { fields: Vec<String>, message: String },
    #[error("invalid constraints ({}): {message}", fields.join(", "))]
    InvalidConstraints { fields: Vec<String>, message: String },
    #[error("similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no interaction history for `{sku}`")]
    ColdStart { sku: String },
}

/// Normalization direction of a criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Larger is better.
    Benefit,
    /// Smaller is better.
    Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    LeadTime,
    Cost,
    ProductionVolume,
    InspectionResult,
    DefectRate,
    /// Output of the supervised scorer.
    PredictedPerformance,
    /// Item-based collaborative filtering score for the disrupted SKU.
    CollaborativeAffinity,
    /// Similarity to the SKU's historically preferred supplier.
    ContentSimilarity,
}

impl Criterion {
    pub const BASE: [Criterion; 5] = [
        Criterion::LeadTime,
        Criterion::Cost,
        Criterion::ProductionVolume,
        Criterion::InspectionResult,
        Criterion::DefectRate,
    ];

    pub fn direction(self) -> Direction {
        match self {
            Criterion::LeadTime | Criterion::Cost | Criterion::DefectRate => Direction::Cost,
            _ => Direction::Benefit,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::LeadTime => "lead_time",
            Criterion::Cost => "cost",
            Criterion::ProductionVolume => "production_volume",
            Criterion::InspectionResult => "inspection_result",
            Criterion::DefectRate => "defect_rate",
            Criterion::PredictedPerformance => "predicted_performance",
            Criterion::CollaborativeAffinity => "collaborative_affinity",
            Criterion::ContentSimilarity => "content_similarity",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Expert-defined criterion weights.
///
/// The five base weights are always used. The optional signals default to
/// 1.0 (`predicted_performance`, `collaborative_affinity`) when their signal
/// is available; `content_similarity` is opt-in and only applies when set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionWeights {
    #[serde(default)]
    pub lead_time: f64,
    #[serde(default)]
    pub cost: f64,
    #[serde(default)]
    pub production_volume: f64,
    #[serde(default)]
    pub inspection_result: f64,
    #[serde(default)]
    pub defect_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_performance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collaborative_affinity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_similarity: Option<f64>,
}

impl Default for CriterionWeights {
    fn default() -> Self {
        CriterionWeights {
            lead_time: 0.3,
            cost: 0.25,
            production_volume: 0.15,
            inspection_result: 0.15,
            defect_rate: 0.15,
            predicted_performance: None,
            collaborative_affinity: None,
            content_similarity: None,
        }
    }
}

impl CriterionWeights {
    /// Weights for the base criteria only; everything else zero.
    pub fn base(lead_time: f64, cost: f64, production_volume: f64, inspection_result: f64, defect_rate: f64) -> Self {
        CriterionWeights {
            lead_time,
            cost,
            production_volume,
            inspection_result,
            defect_rate,
            predicted_performance: None,
            collaborative_affinity: None,
            content_similarity: None,
        }
    }

    /// Weight applied to `criterion` when its signal is present.
    pub fn weight(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::LeadTime => self.lead_time,
            Criterion::Cost => self.cost,
            Criterion::ProductionVolume => self.production_volume,
            Criterion::InspectionResult => self.inspection_result,
            Criterion::DefectRate => self.defect_rate,
            Criterion::PredictedPerformance => self.predicted_performance.unwrap_or(1.0),
            Criterion::CollaborativeAffinity => self.collaborative_affinity.unwrap_or(1.0),
            Criterion::ContentSimilarity => self.content_similarity.unwrap_or(0.0),
        }
    }

    fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("lead_time", Some(self.lead_time)),
            ("cost", Some(self.cost)),
            ("production_volume", Some(self.production_volume)),
            ("inspection_result", Some(self.inspection_result)),
            ("defect_rate", Some(self.defect_rate)),
            ("predicted_performance", self.predicted_performance),
            ("collaborative_affinity", self.collaborative_affinity),
            ("content_similarity", self.content_similarity),
        ]
    }

    /// All weights finite and `>= 0`, and at least one strictly positive.
    pub fn validate(&self) -> Result<(), RecommendError> {
        let bad: Vec<String> = self
            .entries()
            .into_iter()
            .filter_map(|(name, w)| w.filter(|w| !(w.is_finite() && *w >= 0.0)).map(|_| name.to_string()))
            .collect();
        if !bad.is_empty() {
            return Err(RecommendError::InvalidWeights {
                fields: bad,
                message: "weights must be finite and >= 0".into(),
            });
        }
        if !self.entries().iter().any(|(_, w)| w.is_some_and(|w| w > 0.0)) {
            return Err(RecommendError::InvalidWeights {
                fields: self
                    .entries()
                    .iter()
                    .filter(|(_, w)| w.is_some())
                    .map(|(n, _)| n.to_string())
                    .collect(),
                message: "at least one weight must be > 0".into(),
            });
        }
        Ok(())
    }

    /// Multiplies every explicitly set weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CriterionWeights {
            lead_time: self.lead_time * factor,
            cost: self.cost * factor,
            production_volume: self.production_volume * factor,
            inspection_result: self.inspection_result * factor,
            defect_rate: self.defect_rate * factor,
            predicted_performance: self.predicted_performance.map(|w| w * factor),
            collaborative_affinity: self.collaborative_affinity.map(|w| w * factor),
            content_similarity: self.content_similarity.map(|w| w * factor),
        }
    }
}

/// One ranked supplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub supplier_id: String,
    pub overall_score: f64,
    /// Normalized score per criterion, each in [0, 1].
    pub criterion_scores: BTreeMap<Criterion, f64>,
    pub lead_time: f64,
    pub unit_cost: f64,
    pub production_volume: u64,
    pub inspection_result: crate::ingest::InspectionResult,
    /// Units this supplier can cover for the current demand.
    pub fulfillable_quantity: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
}

/// Ranked external resources for one demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// The disrupted SKU.
    pub demand: String,
    /// Sorted by overall score descending, then shorter lead time, then id.
    pub entries: Vec<RankedEntry>,
    pub snapshot_version: u64,
    pub algorithm: Algorithm,
    pub algorithm_trace: Vec<String>,
}

impl Recommendation {
    pub fn top(&self) -> Option<&RankedEntry> {
        self.entries.first()
    }
}
