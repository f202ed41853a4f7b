use proptest::prelude::*;

use roboplan_core::executor::load_floorplan;
use roboplan_core::metrics::{gcr, ru, sr, tcr, Frac, GroundTruth, MetricsRecord, RunOutcome};
use roboplan_core::model::{GoalAttribute, GoalCondition, GoalValue};

fn gt(g: u32, k: u32) -> GroundTruth {
    let goal = GoalCondition {
        object_id: "Lamp".into(),
        attribute: GoalAttribute::IsOn,
        expected: GoalValue::Bool(true),
    };
    GroundTruth::new(vec![goal], g, k).unwrap()
}

/// Piecewise-linear utilization computed in floating point.
fn ru_reference(t: u32, g: u32, k: u32) -> f64 {
    if t <= g {
        1.0
    } else if t >= k {
        0.0
    } else {
        f64::from(k - t) / f64::from(k - g)
    }
}

fn to_f64(r: Frac) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn world_with_lamps(states: &[bool]) -> roboplan_core::executor::WorldState {
    let objects: Vec<serde_json::Value> = states
        .iter()
        .enumerate()
        .map(|(i, on)| serde_json::json!({"id": format!("Lamp{i}"), "togglable": true, "attributes": {"is_on": on}}))
        .collect();
    load_floorplan(&serde_json::json!({"name": "lamps", "objects": objects}).to_string()).unwrap()
}

#[test]
fn ru_anchor_cases() {
    assert_eq!(ru(3, &gt(3, 5)).unwrap(), Frac::from_integer(1));
    assert_eq!(ru(5, &gt(3, 5)).unwrap(), Frac::from_integer(0));
    assert_eq!(ru(4, &gt(3, 5)).unwrap(), Frac::new(1, 2));
}

proptest! {
    #[test]
    fn ru_matches_reference_and_is_monotone((g, k) in (1u32..8).prop_flat_map(|g| (Just(g), g..12)), t in 0u32..15) {
        let gt = gt(g, k);
        let value = ru(t, &gt).unwrap();
        prop_assert!((to_f64(value) - ru_reference(t, g, k)).abs() < 1e-12);
        prop_assert!(value <= Frac::from_integer(1));
        let next = ru(t + 1, &gt).unwrap();
        prop_assert!(next <= value);
    }

    #[test]
    fn gcr_counts_satisfied_goals(states in prop::collection::vec(any::<bool>(), 1..10), wanted in prop::collection::vec(any::<bool>(), 10)) {
        let world = world_with_lamps(&states);
        let goals: Vec<GoalCondition> = states
            .iter()
            .enumerate()
            .map(|(i, _)| GoalCondition {
                object_id: format!("Lamp{i}"),
                attribute: GoalAttribute::IsOn,
                expected: GoalValue::Bool(wanted[i]),
            })
            .collect();
        let met = states.iter().zip(&wanted).filter(|(s, w)| s == w).count() as u64;
        let value = gcr(&world, &goals).unwrap();
        prop_assert_eq!(value, Frac::new(met, states.len() as u64));
        prop_assert_eq!(tcr(value), u8::from(met == states.len() as u64));
    }

    #[test]
    fn sr_never_exceeds_tcr_or_gcr(met in 0u64..6, extra in 0u64..6, (g, k) in (1u32..5).prop_flat_map(|g| (Just(g), g..8)), t in 0u32..10) {
        let total = met + extra;
        prop_assume!(total > 0);
        let gcr_value = Frac::new(met, total);
        let ru_value = ru(t, &gt(g, k)).unwrap();
        let s = sr(gcr_value, ru_value);
        let c = tcr(gcr_value);
        prop_assert!(s <= c);
        prop_assert!(f64::from(c) <= to_f64(gcr_value).ceil());
        prop_assert_eq!(s == 1, c == 1 && ru_value == Frac::from_integer(1));
    }

    #[test]
    fn records_round_trip_through_json(sr_v in 0u8..2, tcr_v in 0u8..2, gcr_v in 0.0f64..=1.0, ru_v in 0.0f64..=1.0, exe_v in 0.0f64..=1.0, total in 1usize..50, phases in 0u32..9) {
        let record = MetricsRecord {
            sr: sr_v,
            tcr: tcr_v,
            gcr: gcr_v,
            ru: ru_v,
            exe: exe_v,
            actions_total: total,
            actions_succeeded: total / 2,
            phases_observed: phases,
            goals_met: 1,
            goals_total: 2,
        };
        let outcome = RunOutcome::Completed { metrics: record };
        let text = serde_json::to_string(&outcome).unwrap();
        prop_assert_eq!(serde_json::from_str::<RunOutcome>(&text).unwrap(), outcome);
    }
}

#[test]
fn gcr_fractions() {
    let world = world_with_lamps(&[true, true, true, false]);
    let goal = |i: usize| GoalCondition {
        object_id: format!("Lamp{i}"),
        attribute: GoalAttribute::IsOn,
        expected: GoalValue::Bool(true),
    };
    let goals: Vec<GoalCondition> = (0..4).map(goal).collect();
    assert_eq!(gcr(&world, &goals[..3]).unwrap(), Frac::from_integer(1));
    assert_eq!(gcr(&world, &goals).unwrap(), Frac::new(3, 4));
    let off = world_with_lamps(&[false; 4]);
    assert_eq!(gcr(&off, &goals).unwrap(), Frac::from_integer(0));
}

#[test]
fn thresholds_are_strict() {
    assert_eq!(tcr(Frac::new(99, 100)), 0);
    assert_eq!(sr(Frac::from_integer(1), Frac::new(1, 2)), 0);
    assert_eq!(sr(Frac::from_integer(1), Frac::from_integer(1)), 1);
}
