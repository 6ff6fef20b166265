use proptest::prelude::*;
use scires::config::AppConfig;
use scires::pipeline::DatasetSources;
use scires::service::{LogEntry, PhaseFilter, ScenarioSet, Session, SessionInit};
use scires_core::recommender::{CriterionWeights, HardConstraints};
use scires_core::response::{DisruptionEvent, ResourceUpdate, UpdateTarget, Urgency};
use serde_json::json;

fn init() -> SessionInit {
    SessionInit {
        sources: DatasetSources::synthetic(7, 100, 5).unwrap(),
        config: AppConfig::default(),
        weights: CriterionWeights::default(),
        constraints: HardConstraints::default(),
    }
}

#[derive(Debug, Clone)]
enum Op {
    Update { supplier: u8, lead_time: f64, stale: bool },
    Internal { index: usize, quantity: u64 },
    Weights { lead_time: f64, cost: f64 },
    MaxLeadTime(f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (1u8..=6, 1.0f64..30.0, proptest::bool::weighted(0.15)).prop_map(|(supplier, lead_time, stale)| Op::Update {
            supplier,
            lead_time,
            stale
        }),
        (0usize..3, 0u64..60).prop_map(|(index, quantity)| Op::Internal { index, quantity }),
        (0.0f64..1.0, 0.01f64..1.0).prop_map(|(lead_time, cost)| Op::Weights { lead_time, cost }),
        (0.5f64..30.0).prop_map(Op::MaxLeadTime),
    ]
}

fn entry(op: &Op, version: u64) -> LogEntry {
    let update = |target, fields: serde_json::Value, v| LogEntry::Update {
        update: ResourceUpdate {
            version: v,
            target,
            changed_fields: fields.as_object().unwrap().clone(),
            at_time: 0.0,
        },
    };
    match op {
        Op::Update {
            supplier,
            lead_time,
            stale,
        } => update(
            UpdateTarget::Supplier(format!("Supplier {supplier}")),
            json!({ "lead_time": lead_time }),
            if *stale { version } else { version + 1 },
        ),
        Op::Internal { index, quantity } => update(
            UpdateTarget::Internal(*index),
            json!({ "quantity_available": quantity }),
            version + 1,
        ),
        Op::Weights { lead_time, cost } => LogEntry::Weights {
            weights: CriterionWeights::base(*lead_time, *cost, 0.1, 0.1, 0.1),
        },
        Op::MaxLeadTime(m) => LogEntry::Constraints {
            constraints: HardConstraints {
                max_lead_time: Some(*m),
                ..Default::default()
            },
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn version_counts_applied_updates_and_replay_matches(ops in proptest::collection::vec(op(), 0..15), sku in 0usize..100) {
        let mut live = Session::open(init()).unwrap();
        let event = DisruptionEvent {
            event_id: "evt-1".into(),
            disrupted_sku: format!("SKU{sku}"),
            shortfall_quantity: 120,
            detected_at: 1.0,
            urgency: Urgency::High,
        };
        live.apply(LogEntry::Disruption { event }).unwrap();
        let mut applied_updates = 0u64;
        for op in &ops {
            let e = entry(op, live.version());
            let is_update = matches!(e, LogEntry::Update { .. });
            let logged = live.log().len();
            match live.apply(e) {
                Ok(()) => applied_updates += u64::from(is_update),
                Err(_) => prop_assert_eq!(live.log().len(), logged),
            }
            prop_assert_eq!(live.version(), applied_updates);
        }

        let replayed = Session::replay(init(), live.log()).unwrap();
        prop_assert_eq!(replayed.version(), live.version());
        prop_assert_eq!(replayed.view("s"), live.view("s"));
        let bytes = |s: &Session| {
            (
                serde_json::to_vec(&s.recommendations("evt-1", PhaseFilter::Both).unwrap()).unwrap(),
                serde_json::to_vec(&s.timeline("evt-1", ScenarioSet::default()).unwrap()).unwrap(),
            )
        };
        prop_assert_eq!(bytes(&replayed), bytes(&live));
    }
}
