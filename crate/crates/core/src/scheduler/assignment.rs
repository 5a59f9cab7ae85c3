use serde::{Deserialize, Serialize};

use super::CapacityParams;
use crate::policy::ScheduleFault;
use crate::topology::{NodeId, RingTopology, RrhId};

/// A run of `count` emissions at `start`, `start + F`, ... (mod P), all at
/// the same position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Emission time at the RRH node, in `[0, P)`.
    pub start: u64,
    pub count: u64,
    pub position: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrhPlan {
    pub rrh_id: RrhId,
    /// In data order: the first segment's first emission carries the first
    /// packet of the burst.
    pub segments: Vec<Segment>,
}

/// Emission plan of every RRH. Serializes as a plain JSON list of plans.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pub plans: Vec<RrhPlan>,
}

/// A segment resolved against the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentTiming {
    pub rrh_id: RrhId,
    pub node: NodeId,
    pub start: u64,
    pub count: u64,
    pub position: u64,
    /// Time the first packet of the segment waits in the insertion buffer.
    pub latency: u64,
}

impl Assignment {
    pub fn plan(&self, rrh: RrhId) -> Option<&RrhPlan> {
        self.plans.iter().find(|p| p.rrh_id == rrh)
    }

    /// `(rrh, m_i)`: the offset is the first emission of the first segment.
    pub fn offsets(&self) -> Vec<(RrhId, u64)> {
        self.plans
            .iter()
            .filter_map(|p| p.segments.first().map(|s| (p.rrh_id, s.start)))
            .collect()
    }

    pub fn offset(&self, rrh: RrhId) -> Option<u64> {
        self.plan(rrh)?.segments.first().map(|s| s.start)
    }

    /// Largest insertion-buffer wait any packet is scheduled to see.
    pub fn latency_bound(&self, params: &CapacityParams) -> u64 {
        self.plans
            .iter()
            .flat_map(|p| segment_latencies(p, params))
            .max()
            .unwrap_or(0)
    }

    pub fn max_segments(&self) -> usize {
        self.plans
            .iter()
            .map(|p| p.segments.len())
            .max()
            .unwrap_or(0)
    }

    /// Distinct positions used by RRH segments, ascending.
    pub fn rrh_positions(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .plans
            .iter()
            .flat_map(|p| p.segments.iter().map(|s| s.position))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Checks the plan against the topology and returns every segment with
    /// its node and scheduled latency.
    pub fn timings(
        &self,
        topo: &RingTopology,
        params: &CapacityParams,
    ) -> Result<Vec<SegmentTiming>, ScheduleFault> {
        let bad = |m: String| Err(ScheduleFault::Malformed(m));
        let (p, f) = (params.period, params.acceleration);
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for plan in &self.plans {
            let Some(att) = topo.rrh(plan.rrh_id) else {
                return bad(format!("rrh {} is not attached to the ring", plan.rrh_id));
            };
            if !seen.insert(plan.rrh_id) {
                return bad(format!("rrh {} planned twice", plan.rrh_id));
            }
            let total: u64 = plan.segments.iter().map(|s| s.count).sum();
            if total != params.packets_per_stream() {
                return bad(format!(
                    "rrh {} emits {total} packets per period instead of {}",
                    plan.rrh_id,
                    params.packets_per_stream()
                ));
            }
            let to_bbu = topo.to_bbu(att.node);
            for (s, latency) in plan.segments.iter().zip(segment_latencies(plan, params)) {
                if s.start >= p || s.position >= f || s.count == 0 {
                    return bad(format!("rrh {}: segment {s:?} out of range", plan.rrh_id));
                }
                if (s.start + to_bbu) % f != s.position {
                    return bad(format!(
                        "rrh {}: segment starting at {} is at position {}, not {}",
                        plan.rrh_id,
                        s.start,
                        (s.start + to_bbu) % f,
                        s.position
                    ));
                }
                out.push(SegmentTiming {
                    rrh_id: plan.rrh_id,
                    node: att.node,
                    start: s.start,
                    count: s.count,
                    position: s.position,
                    latency,
                });
            }
        }
        if out.is_empty() && !topo.rrhs().is_empty() {
            return bad("no RRH is planned".into());
        }
        if seen.len() != topo.rrhs().len() {
            return bad(format!(
                "{} of {} RRHs planned",
                seen.len(),
                topo.rrhs().len()
            ));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assignment serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn segment_latencies<'a>(
    plan: &'a RrhPlan,
    params: &'a CapacityParams,
) -> impl Iterator<Item = u64> + 'a {
    let p = params.period;
    let offset = plan.segments.first().map_or(0, |s| s.start);
    let mut before = 0;
    plan.segments.iter().map(move |s| {
        let data = (offset + before * params.acceleration) % p;
        before += s.count;
        (s.start % p + p - data) % p
    })
}
