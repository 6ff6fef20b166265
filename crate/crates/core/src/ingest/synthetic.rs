//! Deterministic synthetic dataset with the same schema as the public
//! supply-chain analysis data (one demand row per SKU, one row per supplier).

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::parse::{write_csv, write_history, write_performance};
use super::profile::{supplier_features, OrderHistoryEntry, PerformanceObservation};
use super::{IngestError, InspectionResult, SkuRecord, SupplierProfile, TransportMode};

const PRODUCT_TYPES: &[&str] = &["haircare", "skincare", "cosmetics"];
const DEMOGRAPHICS: &[&str] = &["Female", "Male", "Non-binary", "Unknown"];
const LOCATIONS: &[&str] = &["Bangalore", "Chennai", "Delhi", "Kolkata", "Mumbai"];
const ROUTES: &[&str] = &["Route A", "Route B", "Route C"];
const OBSERVATIONS_PER_SUPPLIER: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticDataset {
    pub demand_csv: String,
    pub supplier_csv: String,
    pub history_csv: String,
    /// On-time-in-full observations per supplier; a synthetic stand-in for
    /// historical performance labels.
    pub performance_csv: String,
}

impl SyntheticDataset {
    pub const DEMAND_FILE: &'static str = "demand.csv";
    pub const SUPPLIER_FILE: &'static str = "suppliers.csv";
    pub const HISTORY_FILE: &'static str = "history.csv";
    pub const PERFORMANCE_FILE: &'static str = "performance.csv";

    pub fn files(&self) -> [(&'static str, &str); 4] {
        [
            (Self::DEMAND_FILE, &self.demand_csv),
            (Self::SUPPLIER_FILE, &self.supplier_csv),
            (Self::HISTORY_FILE, &self.history_csv),
            (Self::PERFORMANCE_FILE, &self.performance_csv),
        ]
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

fn jitter(rng: &mut ChaCha8Rng, value: f64, spread: f64) -> f64 {
    value * (1.0 + rng.random_range(-spread..=spread))
}

/// Generates demand, supplier, history and performance CSVs.
///
/// Output is a pure function of the arguments. SKU ids are `SKU0..SKU{n-1}`
/// and supplier ids `Supplier 1..Supplier {m}`.
pub fn generate_synthetic_dataset(
    seed: u64,
    n_skus: usize,
    n_suppliers: usize,
) -> Result<SyntheticDataset, IngestError> {
    if n_skus == 0 || n_suppliers == 0 {
        return Err(IngestError::InvalidArgument(
            "n_skus and n_suppliers must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let suppliers: Vec<SupplierProfile> = (1..=n_suppliers)
        .map(|j| {
            let roll: f64 = rng.random();
            let inspection_result = if roll < 0.4 {
                InspectionResult::Pass
            } else if roll < 0.75 {
                InspectionResult::Pending
            } else {
                InspectionResult::Fail
            };
            SupplierProfile {
                supplier_id: format!("Supplier {j}"),
                location: LOCATIONS.choose(&mut rng).unwrap().to_string(),
                lead_time: rng.random_range(1..=30) as f64,
                production_volume: rng.random_range(100..=1000),
                manufacturing_lead_time: rng.random_range(1..=30) as f64,
                manufacturing_cost: round_to(rng.random_range(5.0..100.0), 2),
                inspection_result,
                defect_rate: round_to(rng.random_range(0.0..0.05), 4),
                transport_mode: *TransportMode::ALL.choose(&mut rng).unwrap(),
                route: ROUTES.choose(&mut rng).unwrap().to_string(),
                shipping_cost: round_to(rng.random_range(1.0..10.0), 2),
            }
        })
        .collect();

    let skus: Vec<SkuRecord> = (0..n_skus)
        .map(|i| {
            let price = round_to(rng.random_range(1.0..100.0), 2);
            let units_sold = rng.random_range(0..=1000u64);
            SkuRecord {
                sku_id: format!("SKU{i}"),
                product_type: PRODUCT_TYPES.choose(&mut rng).unwrap().to_string(),
                price,
                availability: rng.random_range(0..=100),
                units_sold,
                revenue: round_to(price * units_sold as f64, 2),
                customer_demographic: DEMOGRAPHICS.choose(&mut rng).unwrap().to_string(),
                stock_level: rng.random_range(0..=100),
                order_quantity: rng.random_range(1..=100),
            }
        })
        .collect();

    let mut history = Vec::new();
    for sku in &skus {
        if !rng.random_bool(0.8) {
            continue;
        }
        let picks = rng.random_range(1..=n_suppliers.min(2));
        let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, n_suppliers, picks).into_vec();
        chosen.sort_unstable();
        for j in chosen {
            history.push(OrderHistoryEntry {
                sku_id: sku.sku_id.clone(),
                supplier_id: suppliers[j].supplier_id.clone(),
                orders_count: rng.random_range(1..=20),
            });
        }
    }

    let mut observations = Vec::with_capacity(n_suppliers * OBSERVATIONS_PER_SUPPLIER);
    for s in &suppliers {
        let base = supplier_features(s);
        for _ in 0..OBSERVATIONS_PER_SUPPLIER {
            let lead = round_to(jitter(&mut rng, base[0], 0.2).max(0.5), 2);
            let cost = round_to(jitter(&mut rng, base[1], 0.1), 2);
            let volume = jitter(&mut rng, base[2], 0.2).round();
            let defect = round_to(jitter(&mut rng, base[3], 0.3).clamp(0.0, 1.0), 4);
            let inspection = [0.0, 0.5, 1.0][rng.random_range(0..3)];
            let otif = 0.95 - 0.01 * lead - 0.002 * cost + 0.0001 * volume - 2.0 * defect
                + 0.05 * inspection
                + rng.random_range(-0.02..=0.02);
            observations.push(PerformanceObservation {
                supplier_id: s.supplier_id.clone(),
                features: [lead, cost, volume, defect, inspection],
                on_time_in_full: round_to(otif.clamp(0.0, 1.0), 4),
            });
        }
    }

    Ok(SyntheticDataset {
        demand_csv: write_csv(&skus),
        supplier_csv: write_csv(&suppliers),
        history_csv: write_history(&history),
        performance_csv: write_performance(&observations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{clean_records, parse_dataset, parse_history, parse_performance, CleaningPolicy, DatasetKind};

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic_dataset(7, 100, 5).unwrap();
        let b = generate_synthetic_dataset(7, 100, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic_dataset(8, 100, 5).unwrap());
    }

    #[test]
    fn supplier_ids_follow_convention() {
        let d = generate_synthetic_dataset(7, 10, 5).unwrap();
        let table = parse_dataset(&d.supplier_csv, DatasetKind::Supplier).unwrap();
        let (suppliers, _) = clean_records::<SupplierProfile>(&table, CleaningPolicy::Strict).unwrap();
        let ids: Vec<_> = suppliers.iter().map(|s| s.supplier_id.as_str()).collect();
        assert_eq!(
            ids,
            ["Supplier 1", "Supplier 2", "Supplier 3", "Supplier 4", "Supplier 5"]
        );
    }

    #[test]
    fn every_row_passes_strict_cleaning_and_round_trips() {
        for seed in 0..5 {
            let d = generate_synthetic_dataset(seed, 40, 6).unwrap();
            let demand = parse_dataset(&d.demand_csv, DatasetKind::Demand).unwrap();
            let (skus, report) = clean_records::<SkuRecord>(&demand, CleaningPolicy::Strict).unwrap();
            assert_eq!(report.rows_rejected, 0);
            assert_eq!(skus.len(), 40);
            assert_eq!(write_csv(&skus), d.demand_csv);

            let supply = parse_dataset(&d.supplier_csv, DatasetKind::Supplier).unwrap();
            let (suppliers, report) = clean_records::<SupplierProfile>(&supply, CleaningPolicy::Strict).unwrap();
            assert_eq!(report.rows_rejected, 0);
            assert_eq!(write_csv(&suppliers), d.supplier_csv);

            assert_eq!(write_history(&parse_history(&d.history_csv).unwrap()), d.history_csv);
            assert_eq!(
                write_performance(&parse_performance(&d.performance_csv).unwrap()),
                d.performance_csv
            );
        }
    }

    #[test]
    fn rejects_empty_shapes() {
        assert!(generate_synthetic_dataset(1, 0, 5).is_err());
        assert!(generate_synthetic_dataset(1, 5, 0).is_err());
    }
}
