use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DatasetKind, IngestError, SkuRecord, SupplierProfile, TransportMode};

/// Order of the numeric supplier feature vector.
pub const SUPPLIER_FEATURE_NAMES: [&str; 5] = [
    "lead_time",
    "unit_cost",
    "production_volume",
    "defect_rate",
    "inspection_score",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderHistoryEntry {
    pub sku_id: String,
    pub supplier_id: String,
    pub orders_count: u64,
}

/// A historical delivery: the supplier's feature vector at the time plus the
/// observed on-time-in-full fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceObservation {
    pub supplier_id: String,
    /// Ordered as [`SUPPLIER_FEATURE_NAMES`].
    pub features: [f64; 5],
    pub on_time_in_full: f64,
}

/// SKU x supplier order counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    sku_ids: Vec<String>,
    supplier_ids: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl InteractionMatrix {
    pub fn zeros(sku_ids: Vec<String>, supplier_ids: Vec<String>) -> Self {
        let counts = vec![vec![0; supplier_ids.len()]; sku_ids.len()];
        InteractionMatrix {
            sku_ids,
            supplier_ids,
            counts,
        }
    }

    /// Builds a matrix from explicit rows; every row must have one count per
    /// supplier.
    pub fn from_rows(
        sku_ids: Vec<String>,
        supplier_ids: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, IngestError> {
        if counts.len() != sku_ids.len() || counts.iter().any(|r| r.len() != supplier_ids.len()) {
            return Err(IngestError::InvalidArgument(
                "interaction matrix shape does not match its labels".into(),
            ));
        }
        Ok(InteractionMatrix {
            sku_ids,
            supplier_ids,
            counts,
        })
    }

    pub fn sku_ids(&self) -> &[String] {
        &self.sku_ids
    }

    pub fn supplier_ids(&self) -> &[String] {
        &self.supplier_ids
    }

    pub fn row(&self, sku_id: &str) -> Option<&[u64]> {
        self.sku_ids
            .iter()
            .position(|s| s == sku_id)
            .map(|i| self.counts[i].as_slice())
    }

    pub fn column(&self, supplier: usize) -> impl Iterator<Item = u64> + '_ {
        self.counts.iter().map(move |r| r[supplier])
    }

    pub fn count(&self, sku_id: &str, supplier_id: &str) -> u64 {
        let j = self.supplier_ids.iter().position(|s| s == supplier_id);
        match (self.row(sku_id), j) {
            (Some(row), Some(j)) => row[j],
            _ => 0,
        }
    }

    pub fn has_history(&self) -> bool {
        self.counts.iter().flatten().any(|&c| c > 0)
    }

    /// The supplier this SKU was ordered from most often (ties go to the
    /// earlier supplier column).
    pub fn preferred_supplier(&self, sku_id: &str) -> Option<&str> {
        let row = self.row(sku_id)?;
        let mut best: Option<(usize, u64)> = None;
        for (j, &c) in row.iter().enumerate() {
            if c > 0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        best.map(|(j, _)| self.supplier_ids[j].as_str())
    }
}

/// Indexed demand and resource profiles with derived features.
///
/// Immutable once built; updates produce a new store.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileStore {
    skus: Vec<SkuRecord>,
    sku_index: BTreeMap<String, usize>,
    suppliers: Vec<SupplierProfile>,
    supplier_index: BTreeMap<String, usize>,
    features: Vec<[f64; 5]>,
    scaled: Vec<[f64; 5]>,
    interactions: InteractionMatrix,
    incomplete: BTreeSet<String>,
}

pub fn supplier_features(s: &SupplierProfile) -> [f64; 5] {
    [
        s.lead_time,
        s.unit_cost(),
        s.production_volume as f64,
        s.defect_rate,
        s.inspection_result.score(),
    ]
}

/// Per-dimension min-max scaling into [0, 1]; a constant dimension maps to 0.5.
fn min_max_scale(rows: &[[f64; 5]]) -> Vec<[f64; 5]> {
    let mut lo = [f64::INFINITY; 5];
    let mut hi = [f64::NEG_INFINITY; 5];
    for r in rows {
        for d in 0..5 {
            lo[d] = lo[d].min(r[d]);
            hi[d] = hi[d].max(r[d]);
        }
    }
    rows.iter()
        .map(|r| {
            let mut out = [0.5; 5];
            for d in 0..5 {
                if hi[d] > lo[d] {
                    out[d] = (r[d] - lo[d]) / (hi[d] - lo[d]);
                }
            }
            out
        })
        .collect()
}

/// Indexes cleaned records, derives supplier feature vectors and assembles
/// the order-count interaction matrix.
pub fn build_profiles(
    skus: Vec<SkuRecord>,
    suppliers: Vec<SupplierProfile>,
    order_history: &[OrderHistoryEntry],
) -> Result<ProfileStore, IngestError> {
    let mut sku_index = BTreeMap::new();
    for (i, s) in skus.iter().enumerate() {
        if sku_index.insert(s.sku_id.clone(), i).is_some() {
            return Err(IngestError::DuplicateId { id: s.sku_id.clone() });
        }
    }
    let mut supplier_index = BTreeMap::new();
    for (i, s) in suppliers.iter().enumerate() {
        if supplier_index.insert(s.supplier_id.clone(), i).is_some() {
            return Err(IngestError::DuplicateId {
                id: s.supplier_id.clone(),
            });
        }
    }

    let mut interactions = InteractionMatrix::zeros(
        skus.iter().map(|s| s.sku_id.clone()).collect(),
        suppliers.iter().map(|s| s.supplier_id.clone()).collect(),
    );
    for (row, entry) in order_history.iter().enumerate() {
        let unknown = |kind, id: &str| IngestError::UnknownReference {
            dataset: DatasetKind::History,
            kind,
            id: id.to_string(),
            row,
        };
        let i = *sku_index
            .get(&entry.sku_id)
            .ok_or_else(|| unknown("sku", &entry.sku_id))?;
        let j = *supplier_index
            .get(&entry.supplier_id)
            .ok_or_else(|| unknown("supplier", &entry.supplier_id))?;
        interactions.counts[i][j] += entry.orders_count;
    }

    let features: Vec<[f64; 5]> = suppliers.iter().map(supplier_features).collect();
    let scaled = min_max_scale(&features);
    Ok(ProfileStore {
        skus,
        sku_index,
        suppliers,
        supplier_index,
        features,
        scaled,
        interactions,
        incomplete: BTreeSet::new(),
    })
}

impl ProfileStore {
    pub fn skus(&self) -> &[SkuRecord] {
        &self.skus
    }

    pub fn sku(&self, id: &str) -> Option<&SkuRecord> {
        self.sku_index.get(id).map(|&i| &self.skus[i])
    }

    pub fn suppliers(&self) -> &[SupplierProfile] {
        &self.suppliers
    }

    pub fn supplier(&self, id: &str) -> Option<&SupplierProfile> {
        self.supplier_index.get(id).map(|&i| &self.suppliers[i])
    }

    /// Raw feature vector, ordered as [`SUPPLIER_FEATURE_NAMES`].
    pub fn features(&self, supplier_id: &str) -> Option<[f64; 5]> {
        self.supplier_index.get(supplier_id).map(|&i| self.features[i])
    }

    /// Feature vector min-max scaled across all suppliers in the store.
    pub fn scaled_features(&self, supplier_id: &str) -> Option<[f64; 5]> {
        self.supplier_index.get(supplier_id).map(|&i| self.scaled[i])
    }

    pub fn interactions(&self) -> &InteractionMatrix {
        &self.interactions
    }

    /// Scaled numeric features followed by one-hot transport mode and
    /// one-hot location (locations in sorted order). Rows follow
    /// [`suppliers`](Self::suppliers).
    pub fn clustering_features(&self) -> Vec<Vec<f64>> {
        let locations: BTreeSet<&str> = self.suppliers.iter().map(|s| s.location.as_str()).collect();
        self.suppliers
            .iter()
            .zip(&self.scaled)
            .map(|(s, scaled)| {
                let mut row = scaled.to_vec();
                row.extend(
                    TransportMode::ALL
                        .iter()
                        .map(|m| if *m == s.transport_mode { 1.0 } else { 0.0 }),
                );
                row.extend(locations.iter().map(|l| if *l == s.location { 1.0 } else { 0.0 }));
                row
            })
            .collect()
    }

    /// Flags suppliers whose profiles needed repair during cleaning.
    pub fn with_incomplete<I: IntoIterator<Item = String>>(mut self, ids: I) -> Self {
        self.incomplete.extend(ids);
        self
    }

    pub fn incomplete_suppliers(&self) -> &BTreeSet<String> {
        &self.incomplete
    }

    /// True when no supplier profile carries an imputed field.
    pub fn profiles_complete(&self) -> bool {
        self.incomplete.is_empty()
    }

    /// Returns a new store with one supplier profile replaced.
    pub fn with_supplier(&self, updated: SupplierProfile) -> Result<ProfileStore, IngestError> {
        let i = *self
            .supplier_index
            .get(&updated.supplier_id)
            .ok_or_else(|| IngestError::InvalidArgument(format!("unknown supplier `{}`", updated.supplier_id)))?;
        let mut suppliers = self.suppliers.clone();
        suppliers[i] = updated;
        let features: Vec<[f64; 5]> = suppliers.iter().map(supplier_features).collect();
        let scaled = min_max_scale(&features);
        Ok(ProfileStore {
            suppliers,
            features,
            scaled,
            ..self.clone()
        })
    }
}
