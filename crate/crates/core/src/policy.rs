//! Insertion policies: which buffered packet fills the container passing a
//! node.
//!
//! The two opportunistic policies (FIFO and C-RAN priority) fill any
//! fillable container with a buffered packet. The deterministic policy
//! drives C-RAN traffic from an [`Assignment`]: it reserves the container
//! one round before each scheduled emission and fills it with the C-RAN
//! packet at exactly the scheduled tick, leaving every other container to
//! best-effort traffic.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ring::{Refusal, Tick, TrafficClass};
use crate::scheduler::{Assignment, CapacityParams};
use crate::topology::{NodeId, RingTopology, RrhId};
use crate::traffic::BufferedPacket;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticPolicy {
    Fifo,
    CranPriority,
}

/// Per-node insertion buffer. C-RAN and BE packets are kept in two queues,
/// each in arrival order; FIFO merges them by [`BufferedPacket::fifo_key`].
#[derive(Debug, Clone, Default)]
pub struct InsertionBuffer {
    cran: VecDeque<BufferedPacket>,
    be: VecDeque<BufferedPacket>,
}

impl InsertionBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Packets must be pushed in nondecreasing `fifo_key` order.
    pub fn push(&mut self, packet: BufferedPacket) {
        let queue = if packet.class.is_cran() {
            &mut self.cran
        } else {
            &mut self.be
        };
        debug_assert!(queue
            .back()
            .is_none_or(|b| b.fifo_key() <= packet.fifo_key()));
        queue.push_back(packet);
    }

    pub fn is_empty(&self) -> bool {
        self.cran.is_empty() && self.be.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cran.len() + self.be.len()
    }

    pub fn cran_len(&self) -> usize {
        self.cran.len()
    }

    pub fn be_len(&self) -> usize {
        self.be.len()
    }

    pub fn cran_packets(&self) -> impl Iterator<Item = &BufferedPacket> {
        self.cran.iter()
    }

    /// Globally oldest packet, without distinction of class.
    pub fn pop_oldest(&mut self) -> Option<BufferedPacket> {
        match (self.cran.front(), self.be.front()) {
            (Some(c), Some(b)) if b.fifo_key() < c.fifo_key() => self.be.pop_front(),
            (Some(_), _) => self.cran.pop_front(),
            (None, _) => self.be.pop_front(),
        }
    }

    /// Oldest C-RAN packet if any, else oldest BE packet.
    pub fn pop_cran_first(&mut self) -> Option<BufferedPacket> {
        self.cran.pop_front().or_else(|| self.be.pop_front())
    }

    pub fn pop_be(&mut self) -> Option<BufferedPacket> {
        self.be.pop_front()
    }

    /// Oldest C-RAN packet of one stream direction.
    pub fn take_stream(&mut self, class: TrafficClass, source: RrhId) -> Option<BufferedPacket> {
        let i = self
            .cran
            .iter()
            .position(|p| p.class == class && p.source_id == source)?;
        self.cran.remove(i)
    }
}

/// FIFO rule: the oldest packet fills the container if it is fillable.
pub fn fifo_select(buffer: &mut InsertionBuffer, fillable: bool) -> Option<BufferedPacket> {
    if fillable {
        buffer.pop_oldest()
    } else {
        None
    }
}

/// C-RAN priority rule: the C-RAN queue is drained before BE is considered.
pub fn cran_priority_select(
    buffer: &mut InsertionBuffer,
    fillable: bool,
) -> Option<BufferedPacket> {
    if fillable {
        buffer.pop_cran_first()
    } else {
        None
    }
}

impl StochasticPolicy {
    pub fn select(self, buffer: &mut InsertionBuffer, fillable: bool) -> Option<BufferedPacket> {
        match self {
            StochasticPolicy::Fifo => fifo_select(buffer, fillable),
            StochasticPolicy::CranPriority => cran_priority_select(buffer, fillable),
        }
    }
}

/// Reasons a deterministic schedule cannot be executed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleFault {
    #[error("node {node}: streams {first:?} and {second:?} both emit at phase {phase}")]
    SameTick {
        node: NodeId,
        phase: u64,
        first: (TrafficClass, RrhId),
        second: (TrafficClass, RrhId),
    },
    #[error("node {node} t={tick}: reservation for {class:?} of rrh {rrh} refused: {refusal}")]
    ReservationRefused {
        node: NodeId,
        tick: Tick,
        rrh: RrhId,
        class: TrafficClass,
        refusal: Refusal,
    },
    #[error("node {node} t={tick}: fill for {class:?} of rrh {rrh} refused: {refusal}")]
    FillRefused {
        node: NodeId,
        tick: Tick,
        rrh: RrhId,
        class: TrafficClass,
        refusal: Refusal,
    },
    #[error("node {node} t={tick}: no {class:?} packet of rrh {rrh} to emit")]
    MissingPacket {
        node: NodeId,
        tick: Tick,
        rrh: RrhId,
        class: TrafficClass,
    },
    #[error("{class:?} packet of rrh {rrh} waited {latency} UoT (declared bound {bound})")]
    LatencyExceeded {
        rrh: RrhId,
        class: TrafficClass,
        latency: u64,
        bound: u64,
    },
    #[error("malformed assignment: {0}")]
    Malformed(String),
}

/// One stream direction scheduled at a phase of the period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledEmission {
    pub class: TrafficClass,
    pub rrh: RrhId,
    /// Emission at absolute time `e` is live iff `e >= activation + lead`.
    pub lead: u64,
    /// Position of the containers used, at the BBU node.
    pub position: u64,
}

/// Per-node, per-phase reservation and emission tables derived from an
/// assignment.
#[derive(Debug, Clone)]
pub struct ReservationPlan {
    period: u64,
    ring_size: u64,
    activation: Tick,
    emit: Vec<Vec<Option<ScheduledEmission>>>,
    reserve: Vec<Vec<Option<ScheduledEmission>>>,
    offsets: Vec<(RrhId, u64)>,
    latency_bound: u64,
}

/// What the reservation drive asks a node to do at one tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DriveActions {
    pub reserve: Option<ScheduledEmission>,
    pub emit: Option<ScheduledEmission>,
}

impl ReservationPlan {
    /// Builds the tables. C-RAN data starts arriving at `activation`; the
    /// period before it is used to place the first reservations.
    pub fn new(
        assignment: &Assignment,
        topo: &RingTopology,
        params: &CapacityParams,
    ) -> Result<Self, ScheduleFault> {
        let period = params.period;
        let ring_size = topo.ring_size();
        if ring_size > period {
            return Err(ScheduleFault::Malformed(format!(
                "ring size {ring_size} exceeds period {period}"
            )));
        }
        let n = topo.node_count();
        let mut emit: Vec<Vec<Option<ScheduledEmission>>> = vec![vec![None; period as usize]; n];
        let mut reserve = emit.clone();
        let bbu = topo.bbu_node();
        let f = params.acceleration;

        let mut place = |node: NodeId, e: u64, s: ScheduledEmission| -> Result<(), ScheduleFault> {
            let phase = e % period;
            let slot = &mut emit[node][phase as usize];
            if let Some(prev) = slot {
                return Err(ScheduleFault::SameTick {
                    node,
                    phase,
                    first: (prev.class, prev.rrh),
                    second: (s.class, s.rrh),
                });
            }
            *slot = Some(s);
            reserve[node][((phase + period - ring_size) % period) as usize] = Some(s);
            Ok(())
        };

        for seg in assignment.timings(topo, params)? {
            let to_bbu = topo.to_bbu(seg.node);
            for j in 0..seg.count {
                let e = seg.start + j * f;
                place(
                    seg.node,
                    e,
                    ScheduledEmission {
                        class: TrafficClass::CranUp,
                        rrh: seg.rrh_id,
                        lead: seg.latency,
                        position: seg.position,
                    },
                )?;
                place(
                    bbu,
                    e + to_bbu + 1,
                    ScheduledEmission {
                        class: TrafficClass::CranDown,
                        rrh: seg.rrh_id,
                        lead: seg.latency + to_bbu + 1,
                        position: (seg.position + 1) % f,
                    },
                )?;
            }
        }
        Ok(Self {
            period,
            ring_size,
            activation: period,
            emit,
            reserve,
            offsets: assignment.offsets(),
            latency_bound: assignment.latency_bound(params),
        })
    }

    /// First tick at which C-RAN data is generated.
    pub fn activation(&self) -> Tick {
        self.activation
    }

    pub fn offsets(&self) -> &[(RrhId, u64)] {
        &self.offsets
    }

    pub fn latency_bound(&self) -> u64 {
        self.latency_bound
    }

    /// Reservation and emission due at `node` at time `t`.
    pub fn drive(&self, node: NodeId, t: Tick) -> DriveActions {
        let phase = (t % self.period) as usize;
        let live = |e: Tick, s: &ScheduledEmission| e >= self.activation + s.lead;
        let emit = self.emit[node][phase].filter(|s| live(t, s));
        let reserve = self.reserve[node][phase].filter(|s| live(t + self.ring_size, s));
        DriveActions { reserve, emit }
    }

    /// Number of scheduled emissions per period at `node`.
    pub fn emissions_per_period(&self, node: NodeId) -> usize {
        self.emit[node].iter().filter(|e| e.is_some()).count()
    }
}
