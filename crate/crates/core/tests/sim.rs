mod common;

use std::sync::Arc;

use proptest::prelude::*;
use slotring::policy::{InsertionBuffer, ReservationPlan, StochasticPolicy};
use slotring::ring::TrafficClass;
use slotring::scheduler::{naive_assign, prop1_assign, Assignment, CapacityParams};
use slotring::sim::{simulate, PolicyKind, SimOutcome, SimSetup};
use slotring::topology::RingTopology;
use slotring::traffic::{BeArrivalSpec, BufferedPacket};

use common::reference;

fn be(load: f64) -> Option<BeArrivalSpec> {
    Some(BeArrivalSpec::calibrated(load / 5.0, 0.05, 12_500, 100))
}

fn setup(params: &CapacityParams, topo: &RingTopology, policy: PolicyKind) -> SimSetup {
    SimSetup {
        topology: topo.clone(),
        period: params.period,
        emission_time: params.emission_time,
        acceleration: params.acceleration,
        offsets: Vec::new(),
        policy,
        best_effort: None,
        horizon: 50 * params.period,
        warmup: 2 * params.period,
        seed: 9,
    }
}

fn deterministic(a: &Assignment, params: &CapacityParams, topo: &RingTopology) -> PolicyKind {
    PolicyKind::Deterministic(Arc::new(ReservationPlan::new(a, topo, params).unwrap()))
}

fn stochastic(policy: StochasticPolicy, be_load: f64) -> SimOutcome {
    let (params, topo) = reference(5);
    let mut s = setup(&params, &topo, PolicyKind::Stochastic(policy));
    s.offsets = vec![(0, 13), (1, 411), (2, 412), (3, 770), (4, 999)];
    s.best_effort = be(be_load);
    simulate(s).unwrap()
}

#[test]
fn stochastic_policies_keep_their_invariants() {
    for policy in [StochasticPolicy::Fifo, StochasticPolicy::CranPriority] {
        let out = stochastic(policy, 0.4);
        assert_eq!(out.diagnostics.be_over_cran, 0, "{policy:?}");
        assert_eq!(out.diagnostics.idle_with_backlog, 0, "{policy:?}");
        assert_eq!(out.ring.guarantee_violations, 0);
        assert!(out.histogram.count(TrafficClass::BestEffort) > 0);
    }
}

#[test]
fn priority_lowers_cran_latency_on_a_fixed_trace() {
    let fifo = stochastic(StochasticPolicy::Fifo, 0.4);
    let prio = stochastic(StochasticPolicy::CranPriority, 0.4);
    let cran = |o: &SimOutcome| o.histogram.mean(TrafficClass::CranUp).unwrap();
    assert!(cran(&prio) <= cran(&fifo));
}

#[test]
fn cran_alone_loads_half_the_ring() {
    let (params, topo) = reference(5);
    let a = naive_assign(&params, &topo).unwrap();
    let out = simulate(setup(&params, &topo, deterministic(&a, &params, &topo))).unwrap();
    assert!(
        (out.load.load_fraction() - 0.5).abs() < 1e-9,
        "{}",
        out.load.load_fraction()
    );
    assert_eq!(out.histogram.max(TrafficClass::CranUp), Some(0));

    let mut quiet = setup(
        &params,
        &topo,
        PolicyKind::Stochastic(StochasticPolicy::Fifo),
    );
    quiet.topology = RingTopology::equidistant(5, 100, Vec::new(), 0).unwrap();
    assert_eq!(simulate(quiet).unwrap().load.load_fraction(), 0.0);
}

#[test]
fn deterministic_samples_per_period_are_constant() {
    let (params, topo) = reference(5);
    let a = naive_assign(&params, &topo).unwrap();
    let mut s = setup(&params, &topo, deterministic(&a, &params, &topo));
    s.best_effort = be(0.4);
    let out = simulate(s).unwrap();
    let per_stream = params.packets_per_stream();
    for row in &out.samples_per_period[3..48] {
        assert_eq!(row[TrafficClass::CranUp.index()], 5 * per_stream);
        assert_eq!(row[TrafficClass::CranDown.index()], 5 * per_stream);
    }
    assert_eq!(out.histogram.max(TrafficClass::CranDown), Some(0));
}

#[test]
fn best_effort_takes_free_containers_under_a_schedule() {
    let (params, topo) = reference(1);
    let a = prop1_assign(&params, &topo).unwrap();
    let mut s = setup(&params, &topo, deterministic(&a, &params, &topo));
    s.best_effort = be(0.4);
    let out = simulate(s).unwrap();
    let be_load = out.load.class_load(TrafficClass::BestEffort);
    assert!((be_load - 0.4).abs() < 0.03, "{be_load}");
    assert_eq!(out.ring.guarantee_violations, 0);
}

#[test]
fn single_stream_wastes_one_round_per_direction() {
    let (params, topo) = reference(1);
    let a = prop1_assign(&params, &topo).unwrap();
    let out = simulate(setup(&params, &topo, deterministic(&a, &params, &topo))).unwrap();
    let per_period = out.load.reserved_idle as f64 / out.load.periods();
    // Each direction reserves RS/F containers nobody filled the round before.
    let expected = 2.0 * (params.ring_size / params.acceleration) as f64;
    assert!((per_period - expected).abs() < 1e-9, "{per_period}");
    assert_eq!(out.load.reserved_unused, 0);
}

fn packet(class: TrafficClass, t: u64, source: u32) -> BufferedPacket {
    BufferedPacket {
        class,
        enqueue_time: t,
        source_id: source,
    }
}

fn arrivals() -> impl Strategy<Value = Vec<(bool, u64)>> {
    prop::collection::vec((any::<bool>(), 0u64..4), 0..60)
}

fn fill_buffer(items: &[(bool, u64)]) -> (InsertionBuffer, Vec<BufferedPacket>) {
    let mut buf = InsertionBuffer::new();
    let mut all = Vec::new();
    let mut t = 0;
    for (i, &(cran, dt)) in items.iter().enumerate() {
        t += dt;
        let class = if cran {
            TrafficClass::CranUp
        } else {
            TrafficClass::BestEffort
        };
        let p = packet(class, t, i as u32);
        buf.push(p);
        all.push(p);
    }
    (buf, all)
}

proptest! {
    #[test]
    fn fifo_serves_in_arrival_order(items in arrivals()) {
        let (mut buf, mut all) = fill_buffer(&items);
        all.sort_by_key(|p| p.fifo_key());
        let served: Vec<_> = std::iter::from_fn(|| StochasticPolicy::Fifo.select(&mut buf, true)).collect();
        prop_assert_eq!(served, all);
    }

    #[test]
    fn priority_serves_cran_first_then_arrival_order(items in arrivals()) {
        let (mut buf, mut all) = fill_buffer(&items);
        all.sort_by_key(|p| (!p.class.is_cran(), p.fifo_key()));
        prop_assert!(StochasticPolicy::CranPriority.select(&mut buf, false).is_none());
        let served: Vec<_> = std::iter::from_fn(|| StochasticPolicy::CranPriority.select(&mut buf, true)).collect();
        prop_assert_eq!(served, all);
    }
}
