//! Packet sources feeding the insertion buffers.
//!
//! * RRHs emit one container-sized packet every `F` UoT during `ET` UoT of
//!   each period, starting at their offset.
//! * The BBU answers every uplink packet it reads with one downlink packet,
//!   enqueued one UoT later.
//! * Best-effort data arrives in per-node contention buffers from a bimodal
//!   batch process and is shipped as packets of at most `C` bytes.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ring::{Tick, TrafficClass};
use crate::topology::{NodeId, RrhId};

/// A packet waiting in an insertion buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BufferedPacket {
    pub class: TrafficClass,
    pub enqueue_time: Tick,
    /// RRH id for C-RAN packets, node id for best effort.
    pub source_id: u32,
}

impl BufferedPacket {
    /// FIFO order: oldest first, then C-RAN before BE, then lower source.
    pub fn fifo_key(&self) -> (Tick, TrafficClass, u32) {
        (self.enqueue_time, self.class, self.source_id)
    }

    pub fn latency_at(&self, fill_time: Tick) -> u64 {
        fill_time - self.enqueue_time
    }
}

/// Periodic uplink source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrhSpec {
    pub rrh_id: RrhId,
    pub node: NodeId,
    /// Time in the period at which the first packet of a burst arrives.
    pub offset: u64,
    pub emission_time: u64,
    pub acceleration: u64,
    pub period: u64,
}

impl RrhSpec {
    pub fn packets_per_period(&self) -> u64 {
        self.emission_time / self.acceleration
    }

    /// Whether a packet reaches the insertion buffer at `t`.
    pub fn emits_at(&self, t: Tick) -> bool {
        let phase = (t % self.period + self.period - self.offset % self.period) % self.period;
        phase < self.emission_time && phase.is_multiple_of(self.acceleration)
    }

    pub fn emission(&self, t: Tick) -> Option<BufferedPacket> {
        self.emits_at(t).then_some(BufferedPacket {
            class: TrafficClass::CranUp,
            enqueue_time: t,
            source_id: self.rrh_id,
        })
    }

    /// Position of the stream at the BBU node, given ω(node, bbu).
    pub fn position(&self, to_bbu: u64) -> u64 {
        (self.offset + to_bbu) % self.acceleration
    }
}

/// Downlink answer to an uplink packet read at the BBU node at `arrival`.
pub fn bbu_reply(rrh_id: RrhId, arrival: Tick) -> BufferedPacket {
    BufferedPacket {
        class: TrafficClass::CranDown,
        enqueue_time: arrival + 1,
        source_id: rrh_id,
    }
}

/// Parameters of the best-effort generator at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeArrivalSpec {
    /// Probability of a high batch in a UoT.
    pub p_high: f64,
    /// Bytes per UoT in a high batch.
    pub q_high: u64,
    /// Bytes per UoT otherwise.
    pub q_low: u64,
    /// Container capacity in bytes; a full packet holds this much.
    pub container_bytes: u64,
    /// Oldest buffered byte triggers a (possibly partial) packet at this age.
    pub max_wait: u64,
}

impl BeArrivalSpec {
    /// Generator calibrated to `load` packets per UoT at one node: high
    /// batches of one full container with probability `p_high` (capped at
    /// `load`) and a constant low rate making up the rest.
    pub fn calibrated(load: f64, p_high: f64, container_bytes: u64, max_wait: u64) -> Self {
        let p_high = p_high.min(load.max(0.0));
        let q_high = container_bytes;
        let low = ((load - p_high) / (1.0 - p_high)).max(0.0) * container_bytes as f64;
        Self {
            p_high,
            q_high,
            q_low: low.round() as u64,
            container_bytes,
            max_wait,
        }
    }

    /// Long-run packets per UoT when packets are full.
    pub fn expected_load(&self) -> f64 {
        (self.p_high * self.q_high as f64 + (1.0 - self.p_high) * self.q_low as f64)
            / self.container_bytes as f64
    }
}

/// Contention buffer plus batch process of one node.
#[derive(Debug, Clone)]
pub struct BeGenerator {
    spec: BeArrivalSpec,
    rng: ChaCha8Rng,
    /// Buffered chunks as (arrival time, bytes), oldest first.
    chunks: VecDeque<(Tick, u64)>,
    buffered: u64,
    drawn: u64,
    shipped: u64,
}

impl BeGenerator {
    pub fn new(spec: BeArrivalSpec, rng: ChaCha8Rng) -> Self {
        Self {
            spec,
            rng,
            chunks: VecDeque::new(),
            buffered: 0,
            drawn: 0,
            shipped: 0,
        }
    }

    pub fn spec(&self) -> &BeArrivalSpec {
        &self.spec
    }

    pub fn buffered_bytes(&self) -> u64 {
        self.buffered
    }

    pub fn drawn_bytes(&self) -> u64 {
        self.drawn
    }

    pub fn shipped_bytes(&self) -> u64 {
        self.shipped
    }

    /// Draw this UoT's batch and return the size of the packet moved to the
    /// insertion buffer, if any.
    pub fn step(&mut self, t: Tick) -> Option<u64> {
        let batch = if self.spec.p_high > 0.0 && self.rng.gen_bool(self.spec.p_high.min(1.0)) {
            self.spec.q_high
        } else {
            self.spec.q_low
        };
        if batch > 0 {
            self.chunks.push_back((t, batch));
            self.buffered += batch;
            self.drawn += batch;
        }
        let cap = self.spec.container_bytes;
        let expired = self
            .chunks
            .front()
            .is_some_and(|&(arrived, _)| t - arrived >= self.spec.max_wait);
        if self.buffered >= cap || (expired && self.buffered > 0) {
            Some(self.ship(cap))
        } else {
            None
        }
    }

    fn ship(&mut self, cap: u64) -> u64 {
        let mut need = cap.min(self.buffered);
        let size = need;
        while need > 0 {
            let front = self
                .chunks
                .front_mut()
                .expect("buffered bytes without chunks");
            if front.1 <= need {
                need -= front.1;
                self.chunks.pop_front();
            } else {
                front.1 -= need;
                need = 0;
            }
        }
        self.buffered -= size;
        self.shipped += size;
        size
    }
}
