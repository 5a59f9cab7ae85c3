//! Discrete-time simulation of the ring with C-RAN and best-effort traffic.
//!
//! Each UoT: sources enqueue their packets (uplink by RRH id, then downlink
//! answers, then best effort), then every node visits the container in
//! front of it and applies the insertion policy, then the clock advances.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::metrics::{LatencyHistogram, LatencySample, LoadCounters};
use crate::policy::{InsertionBuffer, ReservationPlan, ScheduleFault, StochasticPolicy};
use crate::ring::{RingCounters, RingState, Tick, TrafficClass};
use crate::topology::{RingTopology, RrhId};
use crate::traffic::{bbu_reply, BeArrivalSpec, BeGenerator, BufferedPacket, RrhSpec};

#[derive(Debug, Clone)]
pub enum PolicyKind {
    Stochastic(StochasticPolicy),
    Deterministic(Arc<ReservationPlan>),
}

#[derive(Debug, Clone)]
pub struct SimSetup {
    pub topology: RingTopology,
    pub period: u64,
    pub emission_time: u64,
    pub acceleration: u64,
    /// RRH offsets for stochastic policies; the deterministic policy takes
    /// them from its plan.
    pub offsets: Vec<(RrhId, u64)>,
    pub policy: PolicyKind,
    pub best_effort: Option<BeArrivalSpec>,
    pub horizon: Tick,
    /// Packets enqueued before this time are not measured.
    pub warmup: Tick,
    pub seed: u64,
}

/// Invariant checks evaluated while running; all stay zero on a correct run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PolicyDiagnostics {
    /// BE packet chosen while C-RAN packets waited (C-RAN priority only).
    pub be_over_cran: u64,
    /// Fillable container left empty while the buffer held packets.
    pub idle_with_backlog: u64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub histogram: LatencyHistogram,
    pub load: LoadCounters,
    pub ring: RingCounters,
    /// Containers leaving the BBU node empty while reserved, unless they
    /// just delivered an uplink packet there, by position.
    pub reserved_empty_by_position: BTreeMap<u64, u64>,
    /// Measured packets per class, indexed by the period of their enqueue time.
    pub samples_per_period: Vec<[u64; 3]>,
    pub diagnostics: PolicyDiagnostics,
    /// C-RAN packets still buffered at the horizon.
    pub pending_cran: usize,
}

pub struct Simulation {
    setup: SimSetup,
    ring: RingState,
    buffers: Vec<InsertionBuffer>,
    rrhs: Vec<RrhSpec>,
    generators: Vec<Option<BeGenerator>>,
    cran_start: Tick,
    downlinks: Vec<RrhId>,
    next_downlinks: Vec<RrhId>,
    out: SimOutcome,
}

impl Simulation {
    pub fn new(setup: SimSetup) -> Self {
        let topo = &setup.topology;
        let n = topo.node_count();
        let (offsets, cran_start): (Vec<(RrhId, u64)>, Tick) = match &setup.policy {
            PolicyKind::Deterministic(plan) => (plan.offsets().to_vec(), plan.activation()),
            PolicyKind::Stochastic(_) => (setup.offsets.clone(), 0),
        };
        let mut rrhs: Vec<RrhSpec> = topo
            .rrhs()
            .iter()
            .map(|r| RrhSpec {
                rrh_id: r.rrh_id,
                node: r.node,
                offset: offsets
                    .iter()
                    .find(|(id, _)| *id == r.rrh_id)
                    .map(|&(_, m)| m)
                    .unwrap_or(0),
                emission_time: setup.emission_time,
                acceleration: setup.acceleration,
                period: setup.period,
            })
            .collect();
        rrhs.sort_by_key(|r| r.rrh_id);
        let generators = (0..n)
            .map(|node| {
                setup.best_effort.map(|spec| {
                    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
                    rng.set_stream(node as u64 + 1);
                    BeGenerator::new(spec, rng)
                })
            })
            .collect();
        let periods = setup.horizon.div_ceil(setup.period) as usize;
        let out = SimOutcome {
            histogram: LatencyHistogram::new(),
            load: LoadCounters {
                period: setup.period,
                window: setup.horizon.saturating_sub(setup.warmup),
                ..Default::default()
            },
            ring: RingCounters::default(),
            reserved_empty_by_position: BTreeMap::new(),
            samples_per_period: vec![[0; 3]; periods],
            diagnostics: PolicyDiagnostics::default(),
            pending_cran: 0,
        };
        Self {
            ring: RingState::new(topo),
            buffers: vec![InsertionBuffer::new(); n],
            rrhs,
            generators,
            cran_start,
            downlinks: Vec::new(),
            next_downlinks: Vec::new(),
            setup,
            out,
        }
    }

    pub fn ring(&self) -> &RingState {
        &self.ring
    }

    pub fn buffers(&self) -> &[InsertionBuffer] {
        &self.buffers
    }

    pub fn run(mut self) -> Result<SimOutcome, ScheduleFault> {
        while self.ring.now() < self.setup.horizon {
            self.step()?;
        }
        self.finish()
    }

    fn enqueue(&mut self, t: Tick) {
        if t >= self.cran_start {
            for r in &self.rrhs {
                if let Some(p) = r.emission(t) {
                    self.buffers[r.node].push(p);
                }
            }
        }
        let bbu = self.setup.topology.bbu_node();
        std::mem::swap(&mut self.downlinks, &mut self.next_downlinks);
        self.next_downlinks.clear();
        self.downlinks.sort_unstable();
        for &rrh in &self.downlinks {
            self.buffers[bbu].push(bbu_reply(rrh, t - 1));
        }
        for (node, generator) in self.generators.iter_mut().enumerate() {
            if let Some(g) = generator {
                if g.step(t).is_some() {
                    self.buffers[node].push(BufferedPacket {
                        class: TrafficClass::BestEffort,
                        enqueue_time: t,
                        source_id: node as u32,
                    });
                }
            }
        }
    }

    fn measure(&mut self, packet: BufferedPacket, node: usize, t: Tick) {
        if packet.enqueue_time < self.setup.warmup {
            return;
        }
        let period_index = packet.enqueue_time / self.setup.period;
        self.out.histogram.record(LatencySample {
            class: packet.class,
            latency: packet.latency_at(t),
            node,
            period_index,
        });
        if let Some(row) = self.out.samples_per_period.get_mut(period_index as usize) {
            row[packet.class.index()] += 1;
        }
    }

    /// Advance the simulation by one UoT.
    pub fn step(&mut self) -> Result<(), ScheduleFault> {
        let t = self.ring.now();
        self.enqueue(t);
        let bbu = self.setup.topology.bbu_node();
        let in_window = t >= self.setup.warmup;
        for node in 0..self.setup.topology.node_count() {
            let mut visit = self.ring.visit(node);
            let delivered = visit
                .seen()
                .is_some_and(|f| f.class == TrafficClass::CranUp);
            if node == bbu {
                if let Some(f) = visit.seen() {
                    if f.class == TrafficClass::CranUp && f.fill_time < t {
                        self.next_downlinks.push(f.source);
                    }
                }
            }
            let buffer = &mut self.buffers[node];
            let mut chosen = None;
            match &self.setup.policy {
                PolicyKind::Stochastic(policy) => {
                    let fillable = visit.is_fillable();
                    let cran_waiting = buffer.cran_len() > 0;
                    chosen = policy.select(buffer, fillable);
                    if let Some(p) = chosen {
                        if *policy == StochasticPolicy::CranPriority
                            && !p.class.is_cran()
                            && cran_waiting
                        {
                            self.out.diagnostics.be_over_cran += 1;
                        }
                    } else if fillable && !buffer.is_empty() {
                        self.out.diagnostics.idle_with_backlog += 1;
                    }
                }
                PolicyKind::Deterministic(plan) => {
                    let actions = plan.drive(node, t);
                    if let Some(s) = actions.reserve {
                        visit
                            .reserve()
                            .map_err(|refusal| ScheduleFault::ReservationRefused {
                                node,
                                tick: t,
                                rrh: s.rrh,
                                class: s.class,
                                refusal,
                            })?;
                    }
                    if let Some(s) = actions.emit {
                        let p = buffer.take_stream(s.class, s.rrh).ok_or(
                            ScheduleFault::MissingPacket {
                                node,
                                tick: t,
                                rrh: s.rrh,
                                class: s.class,
                            },
                        )?;
                        let latency = p.latency_at(t);
                        if latency > plan.latency_bound() {
                            return Err(ScheduleFault::LatencyExceeded {
                                rrh: s.rrh,
                                class: s.class,
                                latency,
                                bound: plan.latency_bound(),
                            });
                        }
                        chosen = Some(p);
                    } else if visit.is_fillable() {
                        chosen = buffer.pop_be();
                    }
                }
            }
            if let Some(p) = chosen {
                visit
                    .fill(p.class, p.source_id)
                    .map_err(|refusal| ScheduleFault::FillRefused {
                        node,
                        tick: t,
                        rrh: p.source_id,
                        class: p.class,
                        refusal,
                    })?;
            }
            let report = visit.finish();
            if in_window {
                if let Some(class) = report.filled {
                    self.out.load.filled[class.index()] += 1;
                }
                if report.reserved_idle {
                    self.out.load.reserved_idle += 1;
                }
                if report.due_unused {
                    self.out.load.reserved_unused += 1;
                }
            }
            if in_window && node == bbu {
                let c = self.ring.container_at(bbu);
                if !delivered && c.reservation.is_some() && c.fill.is_none() {
                    let pos = t % self.setup.acceleration;
                    *self.out.reserved_empty_by_position.entry(pos).or_default() += 1;
                }
            }
            if let Some(p) = chosen {
                self.measure(p, node, t);
            }
        }
        self.ring.tick();
        Ok(())
    }

    fn finish(mut self) -> Result<SimOutcome, ScheduleFault> {
        let now = self.ring.now();
        self.out.pending_cran = self.buffers.iter().map(|b| b.cran_len()).sum();
        if let PolicyKind::Deterministic(plan) = &self.setup.policy {
            for b in &self.buffers {
                if let Some(p) = b
                    .cran_packets()
                    .find(|p| now - p.enqueue_time > plan.latency_bound())
                {
                    return Err(ScheduleFault::LatencyExceeded {
                        rrh: p.source_id,
                        class: p.class,
                        latency: now - p.enqueue_time,
                        bound: plan.latency_bound(),
                    });
                }
            }
        }
        self.out.ring = *self.ring.counters();
        Ok(self.out)
    }
}

/// Run a setup to its horizon.
pub fn simulate(setup: SimSetup) -> Result<SimOutcome, ScheduleFault> {
    Simulation::new(setup).run()
}
