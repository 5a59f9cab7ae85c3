//! Assignment constructions.
//!
//! Everything is laid out in *lane time*: the time at which a container
//! passes the BBU node. A stream of the RRH at `u` that emits at `e` uses
//! the container passing the BBU node at `e + ω(u, v)`; converting back
//! only subtracts that distance.

use std::collections::BTreeMap;

use super::{
    max_antennas_saturating, max_antennas_zero_latency, Assignment, CapacityParams, RrhPlan,
    ScheduleError, Segment,
};
use crate::topology::{RingTopology, RrhAttachment};

#[derive(Debug, Clone, Copy)]
struct Block {
    lane_start: u64,
    count: u64,
}

struct Layout<'a> {
    topo: &'a RingTopology,
    params: &'a CapacityParams,
    plans: Vec<(RrhAttachment, Vec<Block>)>,
}

impl<'a> Layout<'a> {
    fn new(topo: &'a RingTopology, params: &'a CapacityParams) -> Self {
        Self {
            topo,
            params,
            plans: Vec::new(),
        }
    }

    fn push(&mut self, rrh: RrhAttachment, blocks: Vec<Block>) {
        self.plans.push((rrh, blocks));
    }

    fn finish(mut self) -> Assignment {
        let p = self.params.period;
        let f = self.params.acceleration;
        self.plans.sort_by_key(|(r, _)| r.rrh_id);
        let plans = self
            .plans
            .iter()
            .map(|(r, blocks)| {
                let d = self.topo.to_bbu(r.node);
                RrhPlan {
                    rrh_id: r.rrh_id,
                    segments: blocks
                        .iter()
                        .map(|b| Segment {
                            start: (b.lane_start % p + p - d) % p,
                            count: b.count,
                            position: b.lane_start % f,
                        })
                        .collect(),
                }
            })
            .collect();
        Assignment { plans }
    }
}

fn check_inputs(params: &CapacityParams, topo: &RingTopology) -> Result<(), ScheduleError> {
    params.validate()?;
    if params.ring_size != topo.ring_size() {
        return Err(ScheduleError::InvalidParams(format!(
            "ring size {} does not match the topology ({})",
            params.ring_size,
            topo.ring_size()
        )));
    }
    if params.antennas != topo.rrhs().len() as u64 {
        return Err(ScheduleError::InvalidParams(format!(
            "{} antennas declared, {} attached",
            params.antennas,
            topo.rrhs().len()
        )));
    }
    if !topo.ring_size().is_multiple_of(params.acceleration) {
        return Err(ScheduleError::InvalidParams(
            "ring size must be a multiple of F".into(),
        ));
    }
    Ok(())
}

/// Lane time of the first container at position 0 that the first RRH in
/// cycle order can use with offset in `[0, F)`.
fn lane_origin(topo: &RingTopology, f: u64) -> u64 {
    topo.rrhs_in_cycle_order()
        .first()
        .map_or(0, |r| topo.to_bbu(r.node).div_ceil(f) * f)
}

/// Places `streams` back to back on one lane from `start`.
fn pack(layout: &mut Layout<'_>, streams: &[RrhAttachment], start: u64) {
    let et = layout.params.emission_time;
    let count = layout.params.packets_per_stream();
    for (i, r) in streams.iter().enumerate() {
        layout.push(
            *r,
            vec![Block {
                lane_start: start + i as u64 * et,
                count,
            }],
        );
    }
}

/// All RRHs on position 0, in cycle order from the BBU node, blocks back
/// to back: `m_i = (i−1)·ET + ω(u_1, u_i)` up to a common shift that puts
/// the lane on position 0.
pub fn prop1_assign(
    params: &CapacityParams,
    topo: &RingTopology,
) -> Result<Assignment, ScheduleError> {
    check_inputs(params, topo)?;
    let k = params.antennas;
    if k * params.emission_time + params.ring_size > params.period {
        return Err(ScheduleError::CapacityExceeded {
            requested: k,
            limit: params.per_position_capacity(),
        });
    }
    let mut layout = Layout::new(topo, params);
    let order = topo.rrhs_in_cycle_order();
    pack(&mut layout, &order, lane_origin(topo, params.acceleration));
    Ok(layout.finish())
}

/// RRH `i` (cycle order) on position `2i mod F`, every lane starting at
/// the same slot.
pub fn naive_assign(
    params: &CapacityParams,
    topo: &RingTopology,
) -> Result<Assignment, ScheduleError> {
    check_inputs(params, topo)?;
    let limit = max_antennas_zero_latency(params);
    if params.antennas > limit {
        return Err(ScheduleError::CapacityExceeded {
            requested: params.antennas,
            limit,
        });
    }
    let f = params.acceleration;
    let lanes = (f / 2) as usize;
    let origin = lane_origin(topo, f);
    let mut groups = vec![Vec::new(); lanes];
    for (i, r) in topo.rrhs_in_cycle_order().into_iter().enumerate() {
        groups[i % lanes].push(r);
    }
    let mut layout = Layout::new(topo, params);
    for (lane, group) in groups.iter().enumerate() {
        pack(&mut layout, group, origin + 2 * lane as u64);
    }
    Ok(layout.finish())
}

/// As few positions as possible: `⌊(P−RS)/ET⌋` RRHs per position, filled
/// in cycle order on positions 0, 2, 4, ...
pub fn compact_positions(
    params: &CapacityParams,
    topo: &RingTopology,
) -> Result<Assignment, ScheduleError> {
    check_inputs(params, topo)?;
    let cap = params.per_position_capacity();
    let limit = max_antennas_zero_latency(params);
    if params.antennas > limit || cap == 0 {
        return Err(ScheduleError::CapacityExceeded {
            requested: params.antennas,
            limit,
        });
    }
    let origin = lane_origin(topo, params.acceleration);
    let mut layout = Layout::new(topo, params);
    let order = topo.rrhs_in_cycle_order();
    for (lane, group) in order.chunks(cap as usize).enumerate() {
        pack(&mut layout, group, origin + 2 * lane as u64);
    }
    Ok(layout.finish())
}

/// Single-segment RRHs grouped by position, each lane in cycle order.
fn lanes_of(
    assignment: &Assignment,
    params: &CapacityParams,
    topo: &RingTopology,
) -> Result<BTreeMap<u64, Vec<RrhAttachment>>, ScheduleError> {
    check_inputs(params, topo)?;
    assignment
        .timings(topo, params)
        .map_err(|e| ScheduleError::Infeasible(e.to_string()))?;
    let mut lanes: BTreeMap<u64, Vec<RrhAttachment>> = BTreeMap::new();
    for plan in &assignment.plans {
        let [seg] = plan.segments[..] else {
            return Err(ScheduleError::Infeasible(format!(
                "rrh {} uses {} segments; only zero-latency assignments can be rebalanced",
                plan.rrh_id,
                plan.segments.len()
            )));
        };
        let rrh = *topo.rrh(plan.rrh_id).expect("checked by timings");
        lanes.entry(seg.position).or_default().push(rrh);
    }
    let bbu = topo.bbu_node();
    for lane in lanes.values_mut() {
        lane.sort_by_key(|r| (topo.gap(bbu, r.node), r.rrh_id));
    }
    Ok(lanes)
}

/// Spreads the idle time of every used position evenly between its blocks
/// and staggers the positions against each other over the period.
///
/// Blocks keep cycle order inside a lane; the gap closing the lane (from
/// the last block to the first one of the next period) must stay at least
/// RS when it goes back to a node farther from the BBU. Gaps are multiples
/// of F so that blocks stay on their position.
pub fn balance_period(
    assignment: &Assignment,
    params: &CapacityParams,
    topo: &RingTopology,
) -> Result<Assignment, ScheduleError> {
    let lanes = lanes_of(assignment, params, topo)?;
    let (p, f, et) = (params.period, params.acceleration, params.emission_time);
    let origin = lane_origin(topo, f);
    let used = lanes.len() as u64;
    let mut layout = Layout::new(topo, params);
    for (n, (&position, streams)) in lanes.iter().enumerate() {
        let j = streams.len() as u64;
        let slack = p
            .checked_sub(j * et)
            .ok_or_else(|| ScheduleError::Infeasible(format!("position {position} overfull")))?;
        let required: Vec<u64> = (0..streams.len())
            .map(|i| {
                let (cur, next) = (&streams[i], &streams[(i + 1) % streams.len()]);
                if topo.to_bbu(next.node) > topo.to_bbu(cur.node) {
                    params.ring_size
                } else {
                    0
                }
            })
            .collect();
        let gaps = water_fill(&required, slack, f).ok_or_else(|| {
            ScheduleError::Infeasible(format!(
                "position {position}: idle time {slack} cannot absorb the ring distances"
            ))
        })?;
        let stagger = n as u64 * p / (used * j) / f * f;
        let mut start = origin + position + stagger;
        for (r, gap) in streams.iter().zip(gaps) {
            layout.push(
                *r,
                vec![Block {
                    lane_start: start,
                    count: params.packets_per_stream(),
                }],
            );
            start += et + gap;
        }
    }
    Ok(layout.finish())
}

/// Splits `total` into gaps `>= required`, as equal as possible, in units
/// of `unit`. Extra units go to the smallest gap, lowest index first.
fn water_fill(required: &[u64], total: u64, unit: u64) -> Option<Vec<u64>> {
    let mut gaps: Vec<u64> = required.iter().map(|r| r.div_ceil(unit) * unit).collect();
    let mut left = total.checked_sub(gaps.iter().sum())?;
    if gaps.is_empty() {
        return Some(gaps);
    }
    while left >= unit {
        let i = (0..gaps.len()).min_by_key(|&i| (gaps[i], i)).unwrap();
        gaps[i] += unit;
        left -= unit;
    }
    Some(gaps)
}

/// First positions of `x` RRH/BBU pairs spread over `F` positions: the
/// `F − 2x` free positions are shared between the gaps following each
/// pair, the remainder going one by one to evenly spaced gaps.
pub fn spread_positions(x: u64, f: u64) -> Result<Vec<u64>, ScheduleError> {
    if 2 * x > f {
        return Err(ScheduleError::Infeasible(format!(
            "{x} position pairs do not fit in F = {f}"
        )));
    }
    let free = f - 2 * x;
    Ok((0..x).map(|i| 2 * i + i * free / x).collect())
}

/// Moves the used positions apart from each other without touching what
/// happens inside each position.
pub fn balance_used_positions(
    assignment: &Assignment,
    params: &CapacityParams,
    topo: &RingTopology,
) -> Result<Assignment, ScheduleError> {
    let lanes = lanes_of(assignment, params, topo)?;
    let p = params.period;
    let targets = spread_positions(lanes.len() as u64, params.acceleration)?;
    let moves: BTreeMap<u64, u64> = lanes.keys().copied().zip(targets).collect();
    let mut out = assignment.clone();
    for plan in &mut out.plans {
        for s in &mut plan.segments {
            let to = moves[&s.position];
            s.start = (s.start + p + to - s.position) % p;
            s.position = to;
        }
    }
    Ok(out)
}

/// Fills every used position up to `P − RS` of lane time. The RRH that
/// does not fit entirely continues on the next even position, two units
/// of time later; its remaining packets wait 2 UoT in the buffer.
pub fn saturate_positions(
    params: &CapacityParams,
    topo: &RingTopology,
) -> Result<Assignment, ScheduleError> {
    check_inputs(params, topo)?;
    let limit = max_antennas_saturating(params);
    if params.antennas > limit {
        return Err(ScheduleError::CapacityExceeded {
            requested: params.antennas,
            limit,
        });
    }
    let (f, et) = (params.acceleration, params.emission_time);
    let capacity = params.period - params.ring_size;
    let mut lane = 0;
    let mut base = lane_origin(topo, f);
    let mut used = 0;
    let mut layout = Layout::new(topo, params);
    for r in topo.rrhs_in_cycle_order() {
        let remaining = capacity - used;
        if remaining >= et {
            layout.push(
                r,
                vec![Block {
                    lane_start: base + used,
                    count: et / f,
                }],
            );
            used += et;
            continue;
        }
        let mut blocks = Vec::new();
        if remaining > 0 {
            blocks.push(Block {
                lane_start: base + used,
                count: remaining / f,
            });
        }
        lane += 1;
        if 2 * lane >= f {
            return Err(ScheduleError::Infeasible(
                "ran out of positions while saturating".into(),
            ));
        }
        base += capacity + 2;
        used = et - remaining;
        blocks.push(Block {
            lane_start: base,
            count: used / f,
        });
        layout.push(r, blocks);
    }
    Ok(layout.finish())
}
