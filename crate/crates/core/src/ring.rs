//! Container-level state machine of the unidirectional slotted ring.
//!
//! The ring carries exactly `RS` containers. At time `t`, node `u` sees
//! container `(t - base_u) mod RS`, where `base_u` is the distance from
//! node 0 to `u`; a container seen by node 0 at `t` is therefore seen by
//! `u` at `t + base_u`.
//!
//! A node interacts with the container in front of it through a
//! [`NodeVisit`], which applies the intra-tick order:
//!
//! 1. the content is read (broadcast and select) and, if this node filled
//!    the container one round ago, it is released;
//! 2. a reservation owned by this node comes due and is taken off the
//!    container (one-shot: it is gone after this tick whether used or not);
//! 3. the caller may place a new reservation;
//! 4. the caller may fill the container.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{NodeId, RingTopology};

/// Simulation time in units of time (UoT).
pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficClass {
    CranUp,
    CranDown,
    BestEffort,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 3] = [
        TrafficClass::CranUp,
        TrafficClass::CranDown,
        TrafficClass::BestEffort,
    ];

    pub fn is_cran(self) -> bool {
        !matches!(self, TrafficClass::BestEffort)
    }

    pub fn name(self) -> &'static str {
        match self {
            TrafficClass::CranUp => "cran_up",
            TrafficClass::CranDown => "cran_down",
            TrafficClass::BestEffort => "best_effort",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fill {
    pub filler: NodeId,
    pub class: TrafficClass,
    pub fill_time: Tick,
    /// RRH id for C-RAN traffic, node id for best effort.
    pub source: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Reservation {
    pub owner: NodeId,
    pub placed_at: Tick,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Container {
    pub fill: Option<Fill>,
    pub reservation: Option<Reservation>,
}

impl Container {
    pub fn is_free(&self) -> bool {
        self.fill.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Refusal {
    #[error("container already filled by node {filler}")]
    Occupied { filler: NodeId },
    #[error("container reserved by node {owner}")]
    ReservedBy { owner: NodeId },
}

/// Running totals kept by the ring itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct RingCounters {
    pub reservations: u64,
    /// Reservations placed on a free container that stayed empty in that tick.
    pub reserved_idle: u64,
    /// Reservations that came due without being filled by their owner.
    pub reserved_unused: u64,
    /// Due reservations that found the container not free (must stay zero).
    pub guarantee_violations: u64,
    pub fills: [u64; 3],
    pub visits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingState {
    ring_size: u64,
    bases: Vec<u64>,
    containers: Vec<Container>,
    now: Tick,
    counters: RingCounters,
}

impl RingState {
    pub fn new(topo: &RingTopology) -> Self {
        let ring_size = topo.ring_size();
        Self {
            ring_size,
            bases: (0..topo.node_count()).map(|u| topo.base(u)).collect(),
            containers: vec![Container::default(); ring_size as usize],
            now: 0,
            counters: RingCounters::default(),
        }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn ring_size(&self) -> u64 {
        self.ring_size
    }

    pub fn node_count(&self) -> usize {
        self.bases.len()
    }

    pub fn counters(&self) -> &RingCounters {
        &self.counters
    }

    pub fn containers(&self) -> &[Container] {
        &self.containers
    }

    /// Index of the container in front of `node` at the current time.
    pub fn container_index(&self, node: NodeId) -> usize {
        let rs = self.ring_size;
        ((self.now % rs + rs - self.bases[node]) % rs) as usize
    }

    pub fn container_at(&self, node: NodeId) -> &Container {
        &self.containers[self.container_index(node)]
    }

    /// Start this tick's interaction of `node` with its container: reads,
    /// releases and collects a due reservation.
    pub fn visit(&mut self, node: NodeId) -> NodeVisit<'_> {
        let idx = self.container_index(node);
        let now = self.now;
        let ring_size = self.ring_size;
        let counters = &mut self.counters;
        let container = &mut self.containers[idx];
        counters.visits += 1;

        let seen = container.fill;
        let released = match container.fill {
            Some(f) if f.filler == node && f.fill_time < now => container.fill.take(),
            _ => None,
        };
        let due = match container.reservation {
            Some(r) if r.owner == node && r.placed_at < now => container.reservation.take(),
            _ => None,
        };
        if let Some(r) = due {
            if container.fill.is_some() || r.placed_at + ring_size != now {
                counters.guarantee_violations += 1;
            }
        }
        NodeVisit {
            node,
            now,
            container,
            counters,
            seen,
            released,
            due,
            placed: false,
            placed_on_free: false,
            filled: None,
        }
    }

    /// Move the clock forward by one UoT.
    pub fn tick(&mut self) {
        self.now += 1;
    }

    /// One full step with no traffic: every node visits (so releases and
    /// reservation expiry happen), then the clock advances.
    pub fn advance(&mut self) {
        for node in 0..self.node_count() {
            self.visit(node).finish();
        }
        self.tick();
    }
}

/// What happened during one node's visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VisitReport {
    pub released: Option<Fill>,
    pub reserved: bool,
    pub reserved_idle: bool,
    pub due: bool,
    pub due_unused: bool,
    pub filled: Option<TrafficClass>,
}

pub struct NodeVisit<'a> {
    node: NodeId,
    now: Tick,
    container: &'a mut Container,
    counters: &'a mut RingCounters,
    seen: Option<Fill>,
    released: Option<Fill>,
    due: Option<Reservation>,
    placed: bool,
    placed_on_free: bool,
    filled: Option<TrafficClass>,
}

impl NodeVisit<'_> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    /// Content of the container as it arrived at this node.
    pub fn seen(&self) -> Option<Fill> {
        self.seen
    }

    pub fn released(&self) -> Option<Fill> {
        self.released
    }

    pub fn holds_due_reservation(&self) -> bool {
        self.due.is_some()
    }

    pub fn container(&self) -> &Container {
        self.container
    }

    /// Free and not reserved by another node.
    pub fn is_fillable(&self) -> bool {
        self.container.fill.is_none()
            && self
                .container
                .reservation
                .is_none_or(|r| r.owner == self.node)
    }

    /// Reserve the container for this node's use one round from now.
    pub fn reserve(&mut self) -> Result<(), Refusal> {
        match self.container.reservation {
            Some(r) if r.owner != self.node => Err(Refusal::ReservedBy { owner: r.owner }),
            Some(_) => Ok(()),
            None => {
                self.container.reservation = Some(Reservation {
                    owner: self.node,
                    placed_at: self.now,
                });
                self.placed = true;
                self.placed_on_free = self.container.fill.is_none();
                self.counters.reservations += 1;
                Ok(())
            }
        }
    }

    pub fn fill(&mut self, class: TrafficClass, source: u32) -> Result<(), Refusal> {
        if let Some(f) = self.container.fill {
            return Err(Refusal::Occupied { filler: f.filler });
        }
        if let Some(r) = self.container.reservation {
            if r.owner != self.node {
                return Err(Refusal::ReservedBy { owner: r.owner });
            }
        }
        self.container.fill = Some(Fill {
            filler: self.node,
            class,
            fill_time: self.now,
            source,
        });
        self.filled = Some(class);
        self.counters.fills[class.index()] += 1;
        Ok(())
    }

    pub fn finish(self) -> VisitReport {
        let reserved_idle = self.placed && self.placed_on_free && self.filled.is_none();
        let due_unused = self.due.is_some() && self.filled.is_none();
        if reserved_idle {
            self.counters.reserved_idle += 1;
        }
        if due_unused {
            self.counters.reserved_unused += 1;
        }
        VisitReport {
            released: self.released,
            reserved: self.placed,
            reserved_idle,
            due: self.due.is_some(),
            due_unused,
            filled: self.filled,
        }
    }
}
