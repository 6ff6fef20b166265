use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{Criterion, CriterionWeights, Direction, RankedEntry, RecommendError};
use crate::ingest::SupplierProfile;

/// Min-max normalization into [0, 1].
///
/// Benefit criteria map the maximum to 1, cost criteria map the minimum to
/// 1. A constant column maps every value to 0.5.
pub fn normalize_criterion(values: &[f64], direction: Direction) -> Result<Vec<f64>, RecommendError> {
    if values.is_empty() {
        return Err(RecommendError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RecommendError::NonFinite {
            criterion: "input".into(),
        });
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(vec![0.5; values.len()]);
    }
    // Halving is exact and keeps the span finite for extreme inputs.
    let scale = if (hi - lo).is_finite() { 1.0 } else { 0.5 };
    let (lo, hi) = (lo * scale, hi * scale);
    let span = hi - lo;
    Ok(values
        .iter()
        .map(|&v| {
            let v = v * scale;
            let s = match direction {
                Direction::Benefit => (v - lo) / span,
                Direction::Cost => (hi - v) / span,
            };
            s.clamp(0.0, 1.0)
        })
        .collect())
}

/// Raw values of one criterion across a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionColumn {
    pub criterion: Criterion,
    pub values: Vec<f64>,
}

/// The five profile-derived criteria for each candidate.
pub fn base_columns(candidates: &[SupplierProfile]) -> Vec<CriterionColumn> {
    Criterion::BASE
        .iter()
        .map(|&criterion| CriterionColumn {
            criterion,
            values: candidates
                .iter()
                .map(|s| match criterion {
                    Criterion::LeadTime => s.lead_time,
                    Criterion::Cost => s.unit_cost(),
                    Criterion::ProductionVolume => s.production_volume as f64,
                    Criterion::InspectionResult => s.inspection_result.score(),
                    Criterion::DefectRate => s.defect_rate,
                    _ => unreachable!("not a base criterion"),
                })
                .collect(),
        })
        .collect()
}

/// Total order used for every ranking: overall score descending, then
/// shorter lead time, then supplier id.
pub(crate) fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.overall_score
        .total_cmp(&a.overall_score)
        .then(a.lead_time.total_cmp(&b.lead_time))
        .then_with(|| a.supplier_id.cmp(&b.supplier_id))
}

/// Scores candidates on arbitrary criterion columns.
///
/// Each column is normalized over the candidate set and the overall score is
/// the weighted sum of the normalized scores.
pub fn score_columns(
    candidates: &[SupplierProfile],
    columns: &[CriterionColumn],
    weights: &CriterionWeights,
) -> Result<Vec<RankedEntry>, RecommendError> {
    if candidates.is_empty() {
        return Err(RecommendError::NoCandidates);
    }
    weights.validate()?;

    let mut columns: Vec<&CriterionColumn> = columns.iter().collect();
    columns.sort_by_key(|c| c.criterion);
    let mut normalized = Vec::with_capacity(columns.len());
    for col in &columns {
        if col.values.len() != candidates.len() {
            return Err(RecommendError::ColumnLength {
                criterion: col.criterion,
                expected: candidates.len(),
                got: col.values.len(),
            });
        }
        let scores = normalize_criterion(&col.values, col.criterion.direction()).map_err(|e| match e {
            RecommendError::NonFinite { .. } => RecommendError::NonFinite {
                criterion: col.criterion.to_string(),
            },
            e => e,
        })?;
        normalized.push((col.criterion, scores));
    }

    let mut entries: Vec<RankedEntry> = candidates
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut criterion_scores = BTreeMap::new();
            let mut overall = 0.0;
            for (criterion, scores) in &normalized {
                overall += weights.weight(*criterion) * scores[i];
                criterion_scores.insert(*criterion, scores[i]);
            }
            RankedEntry {
                supplier_id: s.supplier_id.clone(),
                overall_score: overall,
                criterion_scores,
                lead_time: s.lead_time,
                unit_cost: s.unit_cost(),
                production_volume: s.production_volume,
                inspection_result: s.inspection_result,
                fulfillable_quantity: s.production_volume,
                cluster: None,
            }
        })
        .collect();
    entries.sort_by(rank_order);
    Ok(entries)
}

/// Weighted-sum ranking over the five base criteria.
pub fn score_multicriteria(
    candidates: &[SupplierProfile],
    weights: &CriterionWeights,
) -> Result<Vec<RankedEntry>, RecommendError> {
    score_columns(candidates, &base_columns(candidates), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{InspectionResult, TransportMode};

    pub(crate) fn supplier(id: &str, lead: f64, cost: f64) -> SupplierProfile {
        SupplierProfile {
            supplier_id: id.into(),
            location: "Delhi".into(),
            lead_time: lead,
            production_volume: 100,
            manufacturing_lead_time: 1.0,
            manufacturing_cost: cost,
            inspection_result: InspectionResult::Pass,
            defect_rate: 0.01,
            transport_mode: TransportMode::Road,
            route: "Route A".into(),
            shipping_cost: 0.0,
        }
    }

    #[test]
    fn normalize_cost_type() {
        assert_eq!(
            normalize_criterion(&[10.0, 20.0, 30.0], Direction::Cost).unwrap(),
            [1.0, 0.5, 0.0]
        );
    }

    #[test]
    fn normalize_degenerate_and_endpoints() {
        for d in [Direction::Benefit, Direction::Cost] {
            assert_eq!(normalize_criterion(&[7.0, 7.0, 7.0], d).unwrap(), [0.5, 0.5, 0.5]);
        }
        assert_eq!(
            normalize_criterion(&[0.0, 100.0], Direction::Benefit).unwrap(),
            [0.0, 1.0]
        );
        assert_eq!(
            normalize_criterion(&[], Direction::Benefit),
            Err(RecommendError::EmptyInput)
        );
    }

    #[test]
    fn normalize_extreme_range_stays_finite() {
        let s = normalize_criterion(&[-f64::MAX, 0.0, f64::MAX], Direction::Benefit).unwrap();
        assert_eq!(s, [0.0, 0.5, 1.0]);
    }

    #[test]
    fn two_candidate_hand_computation() {
        let candidates = [supplier("A", 5.0, 10.0), supplier("B", 10.0, 8.0)];
        let w = CriterionWeights::base(0.6, 0.4, 0.0, 0.0, 0.0);
        let ranked = score_multicriteria(&candidates, &w).unwrap();
        assert_eq!(ranked[0].supplier_id, "A");
        assert!((ranked[0].overall_score - 0.6).abs() < 1e-12);
        assert_eq!(ranked[1].supplier_id, "B");
        assert!((ranked[1].overall_score - 0.4).abs() < 1e-12);
    }

    #[test]
    fn single_candidate_is_half_weight_sum() {
        let w = CriterionWeights::base(0.6, 0.4, 0.2, 0.3, 0.5);
        let ranked = score_multicriteria(&[supplier("A", 5.0, 10.0)], &w).unwrap();
        assert!(ranked[0].criterion_scores.values().all(|&s| s == 0.5));
        assert!((ranked[0].overall_score - 0.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn ties_break_on_lead_time_then_id() {
        // Identical scores: C and B share lead 5, A has lead 10 but equal score.
        let w = CriterionWeights::base(0.0, 1.0, 0.0, 0.0, 0.0);
        let ranked = score_multicriteria(
            &[
                supplier("C", 5.0, 1.0),
                supplier("A", 10.0, 1.0),
                supplier("B", 5.0, 1.0),
            ],
            &w,
        )
        .unwrap();
        let ids: Vec<_> = ranked.iter().map(|e| e.supplier_id.as_str()).collect();
        assert_eq!(ids, ["B", "C", "A"]);
    }

    #[test]
    fn empty_candidates_error() {
        assert_eq!(
            score_multicriteria(&[], &CriterionWeights::default()),
            Err(RecommendError::NoCandidates)
        );
    }

    #[test]
    fn column_length_checked() {
        let cols = vec![CriterionColumn {
            criterion: Criterion::PredictedPerformance,
            values: vec![1.0],
        }];
        let err = score_columns(
            &[supplier("A", 1.0, 1.0), supplier("B", 1.0, 1.0)],
            &cols,
            &CriterionWeights::default(),
        );
        assert!(matches!(err, Err(RecommendError::ColumnLength { .. })));
    }
}
