//! Piecewise-linear supply chain performance model around one disruption,
//! with shortage-loss metrics and baseline/assisted scenario comparison.
//!
//! The curve stays at nominal until the disruption, drops instantly by
//! `initial_drop`, declines slowly while internal buffers last, declines
//! steeply after they run out, and ramps back once external supply lands.
//! It is clamped to `[0, nominal]`.

use serde::{Deserialize, Serialize};

use crate::response::{DisruptionEvent, ResponsePlan};

pub const SAMPLE_STEP: f64 = 0.1;
const MAX_SAMPLES: usize = 1_000_000;
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("invalid timeline parameter `{field}`: {message}")]
    InvalidParam { field: &'static str, message: String },
    #[error("scenarios differ in {}; only external_arrival may differ", fields.join(", "))]
    Confounded { fields: Vec<&'static str> },
    #[error("assisted external_arrival {assisted} is later than baseline {baseline}")]
    ArrivalOrder { baseline: f64, assisted: f64 },
}

/// Rates are in nominal-performance units per day; times are in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineParams {
    pub nominal_performance: f64,
    pub t_disrupt: f64,
    /// Fraction of nominal lost at the moment of disruption.
    pub initial_drop: f64,
    /// Days the internal buffers sustain the slow-decline phase.
    pub internal_coverage: f64,
    pub slow_decline_rate: f64,
    pub steep_decline_rate: f64,
    pub external_arrival: f64,
    /// May be `+inf` for an instantaneous recovery.
    pub recovery_ramp_rate: f64,
    pub horizon: f64,
}

impl TimelineParams {
    pub fn validate(&self) -> Result<(), TimelineError> {
        let bad = |field, message: &str| {
            Err(TimelineError::InvalidParam {
                field,
                message: message.to_string(),
            })
        };
        if !(self.nominal_performance.is_finite() && self.nominal_performance > 0.0) {
            return bad("nominal_performance", "must be finite and > 0");
        }
        if !(self.t_disrupt.is_finite() && self.t_disrupt >= 0.0) {
            return bad("t_disrupt", "must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.initial_drop) {
            return bad("initial_drop", "must lie in [0, 1)");
        }
        if !(self.internal_coverage.is_finite() && self.internal_coverage >= 0.0) {
            return bad("internal_coverage", "must be finite and >= 0");
        }
        if !(self.slow_decline_rate.is_finite() && self.slow_decline_rate >= 0.0) {
            return bad("slow_decline_rate", "must be finite and >= 0");
        }
        if !(self.steep_decline_rate.is_finite() && self.steep_decline_rate >= self.slow_decline_rate) {
            return bad("steep_decline_rate", "must be finite and >= slow_decline_rate");
        }
        if !(self.external_arrival.is_finite() && self.external_arrival >= self.t_disrupt) {
            return bad("external_arrival", "must be finite and >= t_disrupt");
        }
        if self.recovery_ramp_rate.is_nan() || self.recovery_ramp_rate <= 0.0 {
            return bad("recovery_ramp_rate", "must be > 0");
        }
        if !(self.horizon.is_finite() && self.horizon >= self.t_disrupt) {
            return bad("horizon", "must be finite and >= t_disrupt");
        }
        if self.horizon / SAMPLE_STEP > MAX_SAMPLES as f64 {
            return bad("horizon", "too long for the sampling step");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub performance: f64,
}

/// Named phase boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    pub disrupt: f64,
    pub buffer_exhausted: f64,
    pub external_arrival: f64,
    /// Absent when performance is still below nominal at the horizon.
    pub recovered: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub nominal: f64,
    pub horizon: f64,
    /// Exact corners of the piecewise-linear curve. The disruption appears
    /// twice, before and after the drop.
    pub knots: Vec<CurvePoint>,
    /// Values on the fixed grid, with `t_disrupt` and the horizon included.
    pub samples: Vec<CurvePoint>,
    pub breakpoints: Breakpoints,
    /// Whether performance ever falls below nominal.
    pub dips: bool,
}

struct KnotBuilder {
    knots: Vec<CurvePoint>,
}

impl KnotBuilder {
    fn push(&mut self, t: f64, performance: f64) {
        if let Some(last) = self.knots.last() {
            if last.t == t && last.performance == performance {
                return;
            }
        }
        self.knots.push(CurvePoint { t, performance });
    }

    fn last(&self) -> CurvePoint {
        *self.knots.last().expect("builder starts with a knot")
    }

    /// Linear decline at `rate` until `until`, clamped at zero.
    fn decline(&mut self, until: f64, rate: f64) {
        let CurvePoint { t, performance: p } = self.last();
        if until <= t {
            return;
        }
        let end = p - rate * (until - t);
        if end < 0.0 {
            self.push(t + p / rate, 0.0);
            self.push(until, 0.0);
        } else {
            self.push(until, end);
        }
    }
}

/// Builds the curve from closed-form knots and samples it on a 0.1-day grid.
pub fn build_timeline(params: &TimelineParams) -> Result<PerformanceCurve, TimelineError> {
    params.validate()?;
    let n = params.nominal_performance;
    let td = params.t_disrupt;
    let horizon = params.horizon;
    let arrival = params.external_arrival;
    let exhausted = td + params.internal_coverage;

    let mut b = KnotBuilder { knots: Vec::new() };
    b.push(0.0, n);
    b.push(td, n);
    b.push(td, n * (1.0 - params.initial_drop));
    let decline_end = arrival.min(horizon);
    b.decline(exhausted.min(decline_end), params.slow_decline_rate);
    b.decline(decline_end, params.steep_decline_rate);

    let mut recovered = None;
    if arrival <= horizon {
        let p = b.last().performance;
        let t_full = arrival + (n - p) / params.recovery_ramp_rate;
        if t_full <= horizon {
            b.push(t_full, n);
            b.push(horizon, n);
            recovered = Some(t_full);
        } else {
            b.push(horizon, p + params.recovery_ramp_rate * (horizon - arrival));
        }
    }
    let knots = b.knots;
    let dips = knots.iter().any(|k| k.performance < n);
    if !dips {
        recovered = Some(td);
    }

    let mut curve = PerformanceCurve {
        nominal: n,
        horizon,
        knots,
        samples: Vec::new(),
        breakpoints: Breakpoints {
            disrupt: td,
            buffer_exhausted: exhausted,
            external_arrival: arrival,
            recovered,
        },
        dips,
    };
    curve.samples = sample_times(td, horizon)
        .into_iter()
        .map(|t| CurvePoint {
            t,
            performance: curve.value_at(t),
        })
        .collect();
    Ok(curve)
}

/// Grid `0, 0.1, ...` up to the horizon, with the disruption time and the
/// horizon themselves included (replacing a grid point they coincide with).
fn sample_times(td: f64, horizon: f64) -> Vec<f64> {
    let steps = (horizon / SAMPLE_STEP + GRID_SNAP).floor() as usize;
    let mut ts: Vec<f64> = (0..=steps).map(|i| i as f64 * SAMPLE_STEP).collect();
    for special in [td, horizon] {
        match ts.iter().position(|&t| (t - special).abs() <= GRID_SNAP) {
            Some(i) => ts[i] = special,
            None => ts.push(special),
        }
    }
    ts.retain(|&t| t <= horizon);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

impl PerformanceCurve {
    /// Right-continuous evaluation: at the disruption time this is the
    /// post-drop value.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.knots.partition_point(|k| k.t <= t);
        if i == 0 {
            return self.knots[0].performance;
        }
        let a = self.knots[i - 1];
        match self.knots.get(i) {
            None => a.performance,
            Some(b) => {
                let v = a.performance + (b.performance - a.performance) * (t - a.t) / (b.t - a.t);
                v.clamp(0.0, self.nominal)
            }
        }
    }

    /// `t,performance` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,performance\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.t, s.performance));
        }
        out
    }
}

/// Exact integral of `nominal - P(t)` over `[t_disrupt, horizon]`, summed
/// segment by segment over the knots.
pub fn cumulative_loss(curve: &PerformanceCurve) -> f64 {
    let start = curve.breakpoints.disrupt;
    curve
        .knots
        .windows(2)
        .filter(|w| w[0].t >= start)
        .map(|w| {
            let deficit = (curve.nominal - w[0].performance) + (curve.nominal - w[1].performance);
            0.5 * deficit * (w[1].t - w[0].t)
        })
        .sum::<f64>()
        .max(0.0)
}

/// Trapezoid rule over the samples from `t_disrupt` on.
pub fn sampled_loss(curve: &PerformanceCurve) -> f64 {
    let start = curve.breakpoints.disrupt;
    curve
        .samples
        .windows(2)
        .filter(|w| w[0].t >= start)
        .map(|w| 0.5 * ((curve.nominal - w[0].performance) + (curve.nominal - w[1].performance)) * (w[1].t - w[0].t))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceMetrics {
    /// Time at which performance is back at nominal: the disruption time if
    /// it never dips, the horizon if it has not recovered by then.
    pub time_to_recovery: f64,
    pub cumulative_loss: f64,
    pub minimum_performance: f64,
}

pub fn resilience_metrics(curve: &PerformanceCurve) -> ResilienceMetrics {
    ResilienceMetrics {
        time_to_recovery: curve.breakpoints.recovered.unwrap_or(curve.horizon),
        cumulative_loss: cumulative_loss(curve),
        minimum_performance: curve.knots.iter().map(|k| k.performance).fold(curve.nominal, f64::min),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub baseline: ResilienceMetrics,
    pub assisted: ResilienceMetrics,
    /// Baseline minus assisted.
    pub delta_time_to_recovery: f64,
    pub delta_cumulative_loss: f64,
}

/// Compares two scenarios that differ only in when external supply lands.
pub fn compare_scenarios(
    baseline: &TimelineParams,
    assisted: &TimelineParams,
) -> Result<ScenarioComparison, TimelineError> {
    let fields = [
        (
            "nominal_performance",
            baseline.nominal_performance,
            assisted.nominal_performance,
        ),
        ("t_disrupt", baseline.t_disrupt, assisted.t_disrupt),
        ("initial_drop", baseline.initial_drop, assisted.initial_drop),
        (
            "internal_coverage",
            baseline.internal_coverage,
            assisted.internal_coverage,
        ),
        (
            "slow_decline_rate",
            baseline.slow_decline_rate,
            assisted.slow_decline_rate,
        ),
        (
            "steep_decline_rate",
            baseline.steep_decline_rate,
            assisted.steep_decline_rate,
        ),
        (
            "recovery_ramp_rate",
            baseline.recovery_ramp_rate,
            assisted.recovery_ramp_rate,
        ),
        ("horizon", baseline.horizon, assisted.horizon),
    ];
    let differing: Vec<&'static str> = fields
        .iter()
        .filter(|(_, a, b)| a.to_bits() != b.to_bits())
        .map(|(name, _, _)| *name)
        .collect();
    if !differing.is_empty() {
        return Err(TimelineError::Confounded { fields: differing });
    }
    if assisted.external_arrival > baseline.external_arrival {
        return Err(TimelineError::ArrivalOrder {
            baseline: baseline.external_arrival,
            assisted: assisted.external_arrival,
        });
    }
    let b = resilience_metrics(&build_timeline(baseline)?);
    let a = resilience_metrics(&build_timeline(assisted)?);
    Ok(ScenarioComparison {
        delta_time_to_recovery: b.time_to_recovery - a.time_to_recovery,
        delta_cumulative_loss: b.cumulative_loss - a.cumulative_loss,
        baseline: b,
        assisted: a,
    })
}

/// Maps a response plan onto the curve parameters.
///
/// The shortfall is treated as a daily demand rate, so internal coverage is
/// the allocated quantity divided by the shortfall, in days. External supply
/// lands after the coverage plus the lead time of the top recommendation, or
/// at the horizon when nothing was recommended.
pub fn derive_params_from_plan(
    plan: &ResponsePlan,
    event: &DisruptionEvent,
    defaults: &TimelineParams,
) -> TimelineParams {
    let internal_coverage = plan.internal_total() as f64 / event.shortfall_quantity.max(1) as f64;
    let external_arrival = match plan.external.as_ref().and_then(|r| r.top()) {
        Some(top) => event.detected_at + internal_coverage + top.lead_time,
        None => defaults.horizon,
    };
    TimelineParams {
        t_disrupt: event.detected_at,
        internal_coverage,
        external_arrival,
        ..defaults.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TimelineParams {
        TimelineParams {
            nominal_performance: 1.0,
            t_disrupt: 10.0,
            initial_drop: 0.2,
            internal_coverage: 5.0,
            slow_decline_rate: 0.02,
            steep_decline_rate: 0.05,
            external_arrival: 15.0,
            recovery_ramp_rate: 0.1,
            horizon: 60.0,
        }
    }

    #[test]
    fn flat_limit() {
        let p = TimelineParams {
            initial_drop: 0.0,
            slow_decline_rate: 0.0,
            steep_decline_rate: 0.0,
            ..params()
        };
        let c = build_timeline(&p).unwrap();
        assert!(c.samples.iter().all(|s| s.performance == 1.0));
        assert_eq!(cumulative_loss(&c), 0.0);
        let m = resilience_metrics(&c);
        assert_eq!(m.time_to_recovery, 10.0);
        assert_eq!(m.minimum_performance, 1.0);
    }

    #[test]
    fn zero_gap_closed_form() {
        let p = params();
        let (drop, c, slow, ramp): (f64, f64, f64, f64) = (0.2, 5.0, 0.02, 0.1);
        let closed = drop * c + slow * c * c / 2.0 + (drop + slow * c) * (drop + slow * c) / (2.0 * ramp);
        assert!((closed - 1.7).abs() < 1e-12);
        let curve = build_timeline(&p).unwrap();
        assert!((cumulative_loss(&curve) - closed).abs() < 1e-12);
        assert!((sampled_loss(&curve) - closed).abs() < 1e-6);
        assert_eq!(curve.breakpoints.recovered, Some(18.0));
    }

    #[test]
    fn rectangle() {
        let p = TimelineParams {
            initial_drop: 0.5,
            slow_decline_rate: 0.0,
            steep_decline_rate: 0.0,
            external_arrival: 20.0,
            recovery_ramp_rate: f64::INFINITY,
            ..params()
        };
        let c = build_timeline(&p).unwrap();
        assert_eq!(cumulative_loss(&c), 5.0);
        assert_eq!(resilience_metrics(&c).time_to_recovery, 20.0);
    }

    #[test]
    fn clamps_at_zero() {
        let p = TimelineParams {
            internal_coverage: 0.0,
            steep_decline_rate: 0.5,
            external_arrival: 40.0,
            ..params()
        };
        let c = build_timeline(&p).unwrap();
        assert!(c.samples.iter().all(|s| s.performance >= 0.0));
        assert_eq!(resilience_metrics(&c).minimum_performance, 0.0);
        assert_eq!(c.value_at(30.0), 0.0);
        // 0.8 / 0.5 = 1.6 days to reach zero.
        assert!(c
            .knots
            .iter()
            .any(|k| (k.t - 11.6).abs() < 1e-12 && k.performance == 0.0));
    }

    #[test]
    fn value_before_and_at_disruption() {
        let c = build_timeline(&params()).unwrap();
        assert_eq!(c.value_at(9.99), 1.0);
        assert_eq!(c.value_at(10.0), 0.8);
        assert!(c.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(c.samples.last().unwrap().t, 60.0);
    }

    #[test]
    fn validation_names_field() {
        let p = TimelineParams {
            steep_decline_rate: 0.01,
            ..params()
        };
        assert!(matches!(
            build_timeline(&p),
            Err(TimelineError::InvalidParam {
                field: "steep_decline_rate",
                ..
            })
        ));
        let p = TimelineParams {
            external_arrival: 5.0,
            ..params()
        };
        assert!(matches!(
            p.validate(),
            Err(TimelineError::InvalidParam {
                field: "external_arrival",
                ..
            })
        ));
    }

    #[test]
    fn comparison_examples() {
        let same = compare_scenarios(&params(), &params()).unwrap();
        assert_eq!(same.delta_cumulative_loss, 0.0);
        assert_eq!(same.delta_time_to_recovery, 0.0);

        let baseline = TimelineParams {
            external_arrival: 30.0,
            ..params()
        };
        let assisted = TimelineParams {
            external_arrival: 25.0,
            ..params()
        };
        assert!(compare_scenarios(&baseline, &assisted).unwrap().delta_cumulative_loss > 0.0);

        // Baseline never lands within the horizon.
        let baseline = TimelineParams {
            external_arrival: 60.0,
            ..params()
        };
        let cmp = compare_scenarios(&baseline, &params()).unwrap();
        assert_eq!(cmp.baseline.time_to_recovery, 60.0);
        assert_eq!(cmp.delta_time_to_recovery, 60.0 - 18.0);

        let confounded = TimelineParams {
            horizon: 50.0,
            ..params()
        };
        assert_eq!(
            compare_scenarios(&params(), &confounded),
            Err(TimelineError::Confounded {
                fields: vec!["horizon"]
            })
        );
        assert!(matches!(
            compare_scenarios(&params(), &baseline),
            Err(TimelineError::ArrivalOrder { .. })
        ));
    }

    #[test]
    fn csv_export() {
        let c = build_timeline(&params()).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("t,performance\n0,1\n"));
        assert_eq!(csv.lines().count(), c.samples.len() + 1);
    }
}
