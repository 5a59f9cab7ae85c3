#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use slotring::scheduler::{Assignment, CapacityParams};
use slotring::topology::{RingTopology, RrhAttachment};

/// Five equidistant nodes (arc 20), one RRH per node, BBU on node 0.
pub fn reference(k: u64) -> (CapacityParams, RingTopology) {
    let params = CapacityParams::reference().with_antennas(k);
    let topo = RingTopology::equidistant(5, 100, RingTopology::round_robin_rrhs(5, k as usize), 0)
        .unwrap();
    (params, topo)
}

/// Like [`reference`] but with no RRH on the BBU node: RRH `i` sits on
/// node `1 + i mod 4`.
pub fn off_bbu(k: u64, et: u64) -> (CapacityParams, RingTopology) {
    let mut params = CapacityParams::reference().with_antennas(k);
    params.emission_time = et;
    let rrhs = (0..k)
        .map(|i| RrhAttachment {
            rrh_id: i as u32,
            node: 1 + i as usize % 4,
        })
        .collect();
    (params, RingTopology::equidistant(5, 100, rrhs, 0).unwrap())
}

pub fn with_emission_time(k: u64, et: u64) -> (CapacityParams, RingTopology) {
    let (mut params, topo) = reference(k);
    params.emission_time = et;
    (params, topo)
}

/// Random parameters with `F | RS, ET, P` and `k·ET + RS <= P` when
/// `single_position`, otherwise `k <= ⌊(P−RS)/ET⌋·F/2`. Arcs are uneven.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    single_position: bool,
) -> (CapacityParams, RingTopology) {
    let f = 2 * rng.gen_range(1..=5u64);
    let rs = f * rng.gen_range(2..=12u64);
    let nodes = rng.gen_range(1..=(rs / f).min(6)) as usize;
    let mut cuts: Vec<u64> = (0..nodes - 1).map(|_| rng.gen_range(1..rs)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut arcs = Vec::new();
    let mut last = 0;
    for c in cuts.into_iter().chain([rs]) {
        arcs.push(c - last);
        last = c;
    }
    let nodes = arcs.len();
    let et = f * rng.gen_range(1..=12u64);
    let (k, p) = if single_position {
        let k = rng.gen_range(1..=4u64);
        let min_p = (k * et + rs).div_ceil(f);
        (k, f * rng.gen_range(min_p..=min_p + 20))
    } else {
        let min_p = (et + rs).div_ceil(f);
        let p = f * rng.gen_range(min_p..=min_p + 40);
        let cap = (p - rs) / et * f / 2;
        (rng.gen_range(1..=cap.min(12)), p)
    };
    let rrhs = (0..k)
        .map(|i| RrhAttachment {
            rrh_id: i as u32,
            node: rng.gen_range(0..nodes),
        })
        .collect();
    let topo = RingTopology::new(arcs, rrhs, rng.gen_range(0..nodes)).unwrap();
    let params = CapacityParams {
        period: p,
        ring_size: rs,
        emission_time: et,
        acceleration: f,
        antennas: k,
    };
    (params, topo)
}

/// Every `(node, time)` at which a container is filled by C-RAN traffic
/// over `periods` periods, uplink and downlink.
pub fn emissions(
    a: &Assignment,
    topo: &RingTopology,
    params: &CapacityParams,
    periods: u64,
) -> Vec<(usize, u64)> {
    let (p, f) = (params.period, params.acceleration);
    let mut out = Vec::new();
    for plan in &a.plans {
        let node = topo.rrh(plan.rrh_id).unwrap().node;
        let d = topo.to_bbu(node);
        for s in &plan.segments {
            for j in 0..s.count {
                for q in 0..periods {
                    let e = (s.start + j * f) % p + q * p;
                    out.push((node, e));
                    out.push((topo.bbu_node(), e + d + 1));
                }
            }
        }
    }
    out
}

/// Independent collision oracle: the container filled at `(u, e)` is
/// claimed from its reservation at `e − RS` to its release at `e + RS`, so
/// two uses of the same container must be at least RS apart.
pub fn collides(a: &Assignment, topo: &RingTopology, params: &CapacityParams) -> bool {
    let rs = topo.ring_size();
    let mut by_container: HashMap<u64, Vec<u64>> = HashMap::new();
    for (node, e) in emissions(a, topo, params, 4) {
        let id = (e + 4 * rs - topo.base(node) % rs) % rs;
        by_container.entry(id).or_default().push(e);
    }
    by_container.values_mut().any(|times| {
        times.sort_unstable();
        times.windows(2).any(|w| w[1] - w[0] < rs)
    })
}

/// Scheduled buffer wait of every segment, from the plan structure alone.
pub fn segment_latencies(a: &Assignment, params: &CapacityParams) -> Vec<u64> {
    let (p, f) = (params.period, params.acceleration);
    let mut out = Vec::new();
    for plan in &a.plans {
        let mut data = plan.segments[0].start;
        for s in &plan.segments {
            out.push((s.start + p - data % p) % p);
            data += s.count * f;
        }
    }
    out
}
