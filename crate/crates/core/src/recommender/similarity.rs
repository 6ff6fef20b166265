use std::collections::BTreeMap;

use super::RecommendError;
use crate::ingest::InteractionMatrix;

/// Cosine similarity of two non-negative feature vectors (callers scale each
/// dimension into [0, 1] first), clamped into [0, 1].
pub fn content_similarity(a: &[f64], b: &[f64]) -> Result<f64, RecommendError> {
    if a.len() != b.len() {
        return Err(RecommendError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(RecommendError::ZeroVector);
    }
    Ok((dot / (na * nb).sqrt()).clamp(0.0, 1.0))
}

fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    content_similarity(a, b).unwrap_or(0.0)
}

/// Item-based collaborative filtering over supplier columns.
///
/// `score(s) = sum over s' ordered for target of cos(col s, col s') * count(target, s')`.
/// Suppliers whose column is all zeros score 0. A SKU without any recorded
/// order yields [`RecommendError::ColdStart`].
pub fn collaborative_scores(
    matrix: &InteractionMatrix,
    target_sku: &str,
) -> Result<BTreeMap<String, f64>, RecommendError> {
    let cold = || RecommendError::ColdStart {
        sku: target_sku.to_string(),
    };
    let row = matrix.row(target_sku).ok_or_else(cold)?;
    if row.iter().all(|&c| c == 0) {
        return Err(cold());
    }
    let columns: Vec<Vec<f64>> = (0..matrix.supplier_ids().len())
        .map(|j| matrix.column(j).map(|c| c as f64).collect())
        .collect();
    Ok(matrix
        .supplier_ids()
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let score = row
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| cosine_or_zero(&columns[j], &columns[k]) * c as f64)
                .sum();
            (id.clone(), score)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(counts: Vec<Vec<u64>>) -> InteractionMatrix {
        let skus = (0..counts.len()).map(|i| format!("SKU{i}")).collect();
        let suppliers = (0..counts[0].len()).map(|j| format!("Supplier {}", j + 1)).collect();
        InteractionMatrix::from_rows(skus, suppliers, counts).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cosine_examples() {
        assert_eq!(content_similarity(&[0.3, 0.7, 0.1], &[0.3, 0.7, 0.1]).unwrap(), 1.0);
        assert_eq!(content_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = content_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((s - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((s - 0.70711).abs() < 1e-5);
        assert_eq!(
            content_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(RecommendError::ZeroVector)
        );
        assert!(matches!(
            content_similarity(&[1.0], &[1.0, 0.0]),
            Err(RecommendError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_cell_scores_highest() {
        let m = matrix(vec![vec![0, 0, 0], vec![0, 4, 0], vec![0, 0, 0]]);
        let scores = collaborative_scores(&m, "SKU1").unwrap();
        assert_eq!(scores["Supplier 2"], 4.0);
        assert_eq!(scores["Supplier 1"], 0.0);
        assert_eq!(scores["Supplier 3"], 0.0);
    }

    #[test]
    fn cold_start() {
        let m = matrix(vec![vec![0, 0], vec![0, 0]]);
        assert!(matches!(
            collaborative_scores(&m, "SKU0"),
            Err(RecommendError::ColdStart { .. })
        ));
        let m = matrix(vec![vec![1, 0], vec![0, 0]]);
        assert!(matches!(
            collaborative_scores(&m, "SKU9"),
            Err(RecommendError::ColdStart { .. })
        ));
        assert!(matches!(
            collaborative_scores(&m, "SKU1"),
            Err(RecommendError::ColdStart { .. })
        ));
    }

    /// Direct double loop over raw counts, sharing nothing with the
    /// implementation.
    fn brute_force(counts: &[Vec<u64>], target: usize) -> Vec<f64> {
        let n_sup = counts[0].len();
        let mut out = vec![0.0; n_sup];
        for (s, slot) in out.iter_mut().enumerate() {
            for t in 0..n_sup {
                let c = counts[target][t] as f64;
                if c == 0.0 {
                    continue;
                }
                let (mut dot, mut ns, mut nt) = (0.0, 0.0, 0.0);
                for row in counts {
                    dot += (row[s] * row[t]) as f64;
                    ns += (row[s] * row[s]) as f64;
                    nt += (row[t] * row[t]) as f64;
                }
                if ns > 0.0 && nt > 0.0 {
                    *slot += dot / (ns.sqrt() * nt.sqrt()) * c;
                }
            }
        }
        out
    }

    #[test]
    fn three_by_three_matches_brute_force() {
        let counts = vec![vec![2, 1, 0], vec![0, 3, 1], vec![1, 0, 4]];
        let m = matrix(counts.clone());
        let scores = collaborative_scores(&m, "SKU0").unwrap();
        let oracle = brute_force(&counts, 0);
        for (j, expected) in oracle.iter().enumerate() {
            assert!((scores[&format!("Supplier {}", j + 1)] - expected).abs() < 1e-12);
        }
        // Frozen hand values: 2 + 2/sqrt(50), 4/sqrt(50) + 1, 8/sqrt(85) + 3/sqrt(170).
        assert!((oracle[0] - 2.2828427).abs() < 1e-6);
        assert!((oracle[1] - 1.5656854).abs() < 1e-6);
        assert!((oracle[2] - 1.0978113).abs() < 1e-6);
    }
}
