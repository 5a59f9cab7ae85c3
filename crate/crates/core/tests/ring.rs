use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slotring::ring::{RingState, TrafficClass};
use slotring::topology::{RingTopology, RrhAttachment};

fn topology(arcs: Vec<u64>) -> RingTopology {
    RingTopology::new(arcs, Vec::<RrhAttachment>::new(), 0).unwrap()
}

/// Random reserve/fill traffic. Returns (reservations checked, violations
/// seen by an outside ledger of accepted reservations).
fn random_trace(arcs: Vec<u64>, ticks: u64, seed: u64, p_reserve: f64, p_fill: f64) -> (u64, u64) {
    let topo = topology(arcs);
    let rs = topo.ring_size();
    let mut ring = RingState::new(&topo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut due = HashSet::new();
    let (mut checked, mut violations) = (0, 0);
    for _ in 0..ticks {
        let t = ring.now();
        for node in 0..topo.node_count() {
            let mut visit = ring.visit(node);
            if due.remove(&(node, t)) {
                checked += 1;
                if !visit.holds_due_reservation() || !visit.is_fillable() {
                    violations += 1;
                }
            }
            if rng.gen_bool(p_reserve) && visit.reserve().is_ok() {
                due.insert((node, t + rs));
            }
            if rng.gen_bool(p_fill) && visit.is_fillable() {
                visit.fill(TrafficClass::BestEffort, node as u32).unwrap();
            }
            visit.finish();
        }
        ring.tick();
    }
    (checked, violations + ring.counters().guarantee_violations)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accepted_reservations_find_a_fillable_container(
        arcs in prop::collection::vec(1u64..15, 1..6),
        seed in any::<u64>(),
        p_reserve in 0.0f64..0.8,
        p_fill in 0.0f64..1.0,
    ) {
        let rs: u64 = arcs.iter().sum();
        let (_, violations) = random_trace(arcs, 20 * rs + 50, seed, p_reserve, p_fill);
        prop_assert_eq!(violations, 0);
    }

    #[test]
    fn fills_are_released_after_one_round(
        arcs in prop::collection::vec(1u64..15, 1..6),
        node in 0usize..6,
    ) {
        let topo = topology(arcs);
        let node = node % topo.node_count();
        let rs = topo.ring_size();
        let mut ring = RingState::new(&topo);
        let idx = ring.container_index(node);
        ring.visit(node).fill(TrafficClass::CranUp, 0).unwrap();
        for _ in 0..rs {
            prop_assert!(ring.containers()[idx].fill.is_some());
            ring.advance();
        }
        prop_assert_eq!(ring.container_index(node), idx);
        let visit = ring.visit(node);
        prop_assert!(visit.released().is_some());
        prop_assert!(visit.is_fillable());
    }
}

#[test]
fn container_seen_downstream_after_the_arc() {
    let topo = topology(vec![3, 4, 5]);
    let mut ring = RingState::new(&topo);
    ring.visit(0).fill(TrafficClass::BestEffort, 0).unwrap();
    let idx = ring.container_index(0);
    for _ in 0..3 {
        ring.advance();
    }
    assert_eq!(ring.container_index(1), idx);
    assert_eq!(ring.visit(1).seen().map(|f| f.filler), Some(0));
}

#[test]
fn others_cannot_use_a_reserved_container() {
    let topo = topology(vec![5, 5]);
    let mut ring = RingState::new(&topo);
    ring.visit(0).reserve().unwrap();
    for _ in 0..5 {
        ring.advance();
    }
    let mut visit = ring.visit(1);
    assert!(!visit.is_fillable());
    assert!(visit.fill(TrafficClass::BestEffort, 1).is_err());
    assert!(visit.reserve().is_err());
}

#[test]
fn long_random_trace_has_no_violations() {
    let (checked, violations) = random_trace(vec![7, 13, 20, 9, 11], 200_000, 3, 0.3, 0.5);
    assert!(checked > 100_000, "{checked}");
    assert_eq!(violations, 0);
}
