//! Supervised supplier-performance scorer and k-means supplier clustering.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Ridge term added to the (column-equilibrated) normal equations when they
/// are numerically singular.
pub const RIDGE_LAMBDA: f64 = 1e-8;
const SINGULAR_PIVOT: f64 = 1e-12;
pub const KMEANS_MAX_ITERATIONS: usize = 300;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LearningError {
    #[error("training set is empty")]
    EmptyBatch,
    #[error("row {row} has {got} features, expected {expected}")]
    Shape { row: usize, expected: usize, got: usize },
    #[error("{0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("{labels} labels for {rows} feature rows")]
    LabelCount { rows: usize, labels: usize },
    #[error("feature vector has length {got}, model expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("k = {k} is invalid for {n} points")]
    InvalidK { k: usize, n: usize },
    #[error("normal equations could not be solved even with ridge regularization")]
    Unsolvable,
    #[error("invalid model document: {0}")]
    Model(String),
}

/// Linear model `intercept + coefficients . features`.
///
/// Serializes to `{feature_names, coefficients, intercept, training_loss}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Mean squared error on the training set.
    pub training_loss: f64,
}

impl LinearScorer {
    pub fn new(
        feature_names: Vec<String>,
        coefficients: Vec<f64>,
        intercept: f64,
        training_loss: f64,
    ) -> Result<Self, LearningError> {
        let model = LinearScorer {
            feature_names,
            coefficients,
            intercept,
            training_loss,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), LearningError> {
        if self.coefficients.len() != self.feature_names.len() {
            return Err(LearningError::Model(format!(
                "{} coefficients for {} feature names",
                self.coefficients.len(),
                self.feature_names.len()
            )));
        }
        if self.training_loss.is_nan() || self.training_loss < 0.0 {
            return Err(LearningError::Model("training_loss must be >= 0".into()));
        }
        Ok(())
    }

    /// `intercept + dot(coefficients, features)`.
    pub fn predict(&self, features: &[f64]) -> Result<f64, LearningError> {
        if features.len() != self.coefficients.len() {
            return Err(LearningError::LengthMismatch {
                expected: self.coefficients.len(),
                got: features.len(),
            });
        }
        Ok(self.intercept + dot(&self.coefficients, features))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearningError> {
        let model: LinearScorer = serde_json::from_str(text).map_err(|e| LearningError::Model(e.to_string()))?;
        model.check()?;
        Ok(model)
    }
}

/// Alias kept for readability at call sites.
pub fn predict_performance(model: &LinearScorer, supplier_features: &[f64]) -> Result<f64, LearningError> {
    model.predict(supplier_features)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    #[default]
    NormalEquations,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub method: FitMethod,
    /// Gradient-descent step. `None` picks `1 / (2 * trace(A'A / n))`, a lower
    /// bound on the inverse Lipschitz constant of the MSE gradient.
    pub learning_rate: Option<f64>,
    pub max_iters: usize,
    /// Stop once the gradient infinity-norm is at most this.
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            method: FitMethod::NormalEquations,
            learning_rate: None,
            max_iters: 200_000,
            tol: 1e-10,
        }
    }
}

/// A fitted scorer plus how the fit went.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedScorer {
    pub model: LinearScorer,
    pub method: FitMethod,
    /// Normal equations were singular and were solved with [`RIDGE_LAMBDA`].
    pub ridge_applied: bool,
    pub iterations: usize,
    pub converged: bool,
    /// Training MSE before the first step and after every gradient step.
    pub loss_trace: Vec<f64>,
}

fn check_batch(features: &[Vec<f64>], labels: &[f64]) -> Result<usize, LearningError> {
    if features.is_empty() {
        return Err(LearningError::EmptyBatch);
    }
    if labels.len() != features.len() {
        return Err(LearningError::LabelCount {
            rows: features.len(),
            labels: labels.len(),
        });
    }
    let d = features[0].len();
    for (row, x) in features.iter().enumerate() {
        if x.len() != d {
            return Err(LearningError::Shape {
                row,
                expected: d,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LearningError::NonFinite("features"));
        }
    }
    if labels.iter().any(|v| !v.is_finite()) {
        return Err(LearningError::NonFinite("labels"));
    }
    Ok(d)
}

/// Mean squared error of a raw parameter vector (coefficients, intercept last).
fn mse(params: &[f64], features: &[Vec<f64>], labels: &[f64]) -> f64 {
    let d = params.len() - 1;
    features
        .iter()
        .zip(labels)
        .map(|(x, y)| {
            let r = y - (params[d] + dot(&params[..d], x));
            r * r
        })
        .sum::<f64>()
        / features.len() as f64
}

fn mse_gradient(params: &[f64], features: &[Vec<f64>], labels: &[f64]) -> Vec<f64> {
    let d = params.len() - 1;
    let n = features.len() as f64;
    let mut grad = vec![0.0; d + 1];
    for (x, y) in features.iter().zip(labels) {
        let r = y - (params[d] + dot(&params[..d], x));
        for k in 0..d {
            grad[k] -= 2.0 * r * x[k];
        }
        grad[d] -= 2.0 * r;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    grad
}

/// Exact gradient of the training MSE with respect to
/// `(coefficients..., intercept)`.
pub fn loss_gradient(model: &LinearScorer, features: &[Vec<f64>], labels: &[f64]) -> Result<Vec<f64>, LearningError> {
    let d = check_batch(features, labels)?;
    if d != model.coefficients.len() {
        return Err(LearningError::LengthMismatch {
            expected: model.coefficients.len(),
            got: d,
        });
    }
    Ok(mse_gradient(&params_of(model), features, labels))
}

fn params_of(model: &LinearScorer) -> Vec<f64> {
    let mut p = model.coefficients.clone();
    p.push(model.intercept);
    p
}

/// Normal matrix `A'A / n` and right-hand side `A'y / n` for the design
/// matrix `A = [X | 1]`.
fn normal_system(features: &[Vec<f64>], labels: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = features.len();
    let d = features[0].len();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j < d { features[i][j] } else { 1.0 });
    let y = DVector::from_column_slice(labels);
    let gram = design.transpose() * &design / n as f64;
    let rhs = design.transpose() * y / n as f64;
    (gram, rhs)
}

fn solve_normal_equations(features: &[Vec<f64>], labels: &[f64]) -> Result<(Vec<f64>, bool), LearningError> {
    let (gram, rhs) = normal_system(features, labels);
    let p = gram.nrows();
    // Equilibrate so that pivots are comparable across feature scales.
    let scale: Vec<f64> = (0..p)
        .map(|k| {
            let s = gram[(k, k)].sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(p, p, |i, j| gram[(i, j)] / (scale[i] * scale[j]));
    let scaled_rhs = DVector::from_fn(p, |i, _| rhs[i] / scale[i]);

    let well_posed = scaled.clone().cholesky().filter(|c| {
        let l = c.l_dirty();
        (0..p).all(|k| l[(k, k)] * l[(k, k)] > SINGULAR_PIVOT)
    });
    let (chol, ridge) = match well_posed {
        Some(c) => (c, false),
        None => {
            let ridged = scaled + DMatrix::identity(p, p) * RIDGE_LAMBDA;
            (ridged.cholesky().ok_or(LearningError::Unsolvable)?, true)
        }
    };
    let z = chol.solve(&scaled_rhs);
    Ok(((0..p).map(|k| z[k] / scale[k]).collect(), ridge))
}

/// Least-squares fit of `labels` on `features` with an intercept.
pub fn fit_linear_scorer(
    features: &[Vec<f64>],
    labels: &[f64],
    feature_names: Vec<String>,
    config: &FitConfig,
) -> Result<FittedScorer, LearningError> {
    let d = check_batch(features, labels)?;
    if feature_names.len() != d {
        return Err(LearningError::Model(format!(
            "{} feature names for {d} features",
            feature_names.len()
        )));
    }

    let (params, ridge_applied, iterations, converged, loss_trace) = match config.method {
        FitMethod::NormalEquations => {
            let (params, ridge) = solve_normal_equations(features, labels)?;
            (params, ridge, 0, true, Vec::new())
        }
        FitMethod::GradientDescent => {
            let lr = match config.learning_rate {
                Some(lr) => lr,
                None => {
                    let (gram, _) = normal_system(features, labels);
                    1.0 / (2.0 * gram.trace())
                }
            };
            let mut params = vec![0.0; d + 1];
            let mut trace = vec![mse(&params, features, labels)];
            let mut converged = false;
            let mut iterations = 0;
            while iterations < config.max_iters {
                let grad = mse_gradient(&params, features, labels);
                if grad.iter().all(|g| g.abs() <= config.tol) {
                    converged = true;
                    break;
                }
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= lr * g;
                }
                iterations += 1;
                trace.push(mse(&params, features, labels));
            }
            (params, false, iterations, converged, trace)
        }
    };

    let training_loss = mse(&params, features, labels);
    let intercept = params[d];
    let model = LinearScorer::new(feature_names, params[..d].to_vec(), intercept, training_loss)?;
    Ok(FittedScorer {
        model,
        method: config.method,
        ridge_applied,
        iterations,
        converged,
        loss_trace,
    })
}

/// Result of a k-means run on a plain point set.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
    pub iterations: usize,
    /// SSE after each Lloyd iteration.
    pub sse_trace: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // Every remaining point coincides with a centroid.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(c, (s, n))| {
            if n == 0 {
                previous[c].clone()
            } else {
                s.into_iter().map(|v| v / n as f64).collect()
            }
        })
        .collect()
}

fn total_sse(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| squared_distance(p, &centroids[c]))
        .sum()
}

/// Moves the point farthest from its centroid (taken from a cluster with at
/// least two members) into each empty cluster. Returns whether anything moved.
fn repair_empty_clusters(points: &[Vec<f64>], assignments: &mut [usize], centroids: &[Vec<f64>], k: usize) -> bool {
    let mut repaired = false;
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignments.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return repaired;
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[assignments[i]]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("k <= n leaves a cluster with two members");
        assignments[i] = empty;
        repaired = true;
    }
}

/// Lloyd's algorithm with k-means++ seeding from `seed`.
///
/// Stops when an assignment pass changes nothing or after
/// [`KMEANS_MAX_ITERATIONS`] iterations. Distance ties go to the lower
/// cluster index, so the result is a pure function of the inputs.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit, LearningError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(LearningError::InvalidK { k, n });
    }
    let dim = points[0].len();
    for (row, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(LearningError::Shape {
                row,
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(LearningError::NonFinite("features"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut assignments: Vec<usize> = vec![usize::MAX; n];
    let mut sse_trace = Vec::new();
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERATIONS {
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let changed = next != assignments;
        assignments = next;
        let repaired = repair_empty_clusters(points, &mut assignments, &centroids, k);
        centroids = means(points, &assignments, k, &centroids);
        sse_trace.push(total_sse(points, &assignments, &centroids));
        if !changed && !repaired {
            break;
        }
    }
    Ok(KMeansFit {
        k,
        sse: *sse_trace.last().expect("at least one iteration"),
        assignments,
        centroids,
        iterations,
        sse_trace,
    })
}

/// Cluster membership keyed by supplier id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
    pub iterations: usize,
}

/// Clusters suppliers on (already scaled) feature rows aligned with `ids`.
pub fn cluster_suppliers(
    ids: &[String],
    features: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<ClusterAssignment, LearningError> {
    if ids.len() != features.len() {
        return Err(LearningError::LabelCount {
            rows: features.len(),
            labels: ids.len(),
        });
    }
    let fit = kmeans(features, k, seed)?;
    Ok(ClusterAssignment {
        k,
        assignments: ids.iter().cloned().zip(fit.assignments).collect(),
        centroids: fit.centroids,
        sse: fit.sse,
        iterations: fit.iterations,
    })
}
