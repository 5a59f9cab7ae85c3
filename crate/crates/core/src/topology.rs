//! Ring topology: a directed cycle of nodes with integer arc weights.
//!
//! Distances are measured in units of time (UoT). The ring size `RS` is the
//! length of the whole cycle, which is also the number of containers on the
//! ring (one container per UoT of circumference).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node on the ring, `0..node_count`.
pub type NodeId = usize;

/// Identifier of a remote radio head (and of its paired baseband unit).
pub type RrhId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("ring needs at least one node")]
    NoNodes,
    #[error("arc {0} has zero weight")]
    ZeroArc(usize),
    #[error("node {node} out of range (ring has {count} nodes)")]
    UnknownNode { node: NodeId, count: usize },
    #[error("ring size {ring_size} is not divisible by {nodes} nodes")]
    NotEquidistant { ring_size: u64, nodes: usize },
    #[error("duplicate rrh id {0}")]
    DuplicateRrh(RrhId),
}

/// Where an RRH is plugged into the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrhAttachment {
    pub rrh_id: RrhId,
    pub node: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingTopology {
    /// `arcs[i]` is the weight of the arc from node `i` to node `i + 1 (mod n)`.
    arcs: Vec<u64>,
    /// `bases[u]` is the directed distance from node 0 to node `u` (0 for node 0).
    bases: Vec<u64>,
    ring_size: u64,
    rrhs: Vec<RrhAttachment>,
    bbu_node: NodeId,
}

impl RingTopology {
    pub fn new(
        arcs: Vec<u64>,
        rrhs: Vec<RrhAttachment>,
        bbu_node: NodeId,
    ) -> Result<Self, TopologyError> {
        if arcs.is_empty() {
            return Err(TopologyError::NoNodes);
        }
        if let Some(i) = arcs.iter().position(|&w| w == 0) {
            return Err(TopologyError::ZeroArc(i));
        }
        let count = arcs.len();
        let check = |node: NodeId| {
            if node < count {
                Ok(())
            } else {
                Err(TopologyError::UnknownNode { node, count })
            }
        };
        check(bbu_node)?;
        let mut seen = std::collections::BTreeSet::new();
        for r in &rrhs {
            check(r.node)?;
            if !seen.insert(r.rrh_id) {
                return Err(TopologyError::DuplicateRrh(r.rrh_id));
            }
        }
        let mut bases = Vec::with_capacity(count);
        let mut acc = 0;
        for w in &arcs {
            bases.push(acc);
            acc += w;
        }
        Ok(Self {
            arcs,
            bases,
            ring_size: acc,
            rrhs,
            bbu_node,
        })
    }

    /// `nodes` nodes with equal arcs of `ring_size / nodes`.
    pub fn equidistant(
        nodes: usize,
        ring_size: u64,
        rrhs: Vec<RrhAttachment>,
        bbu_node: NodeId,
    ) -> Result<Self, TopologyError> {
        if nodes == 0 {
            return Err(TopologyError::NoNodes);
        }
        if !ring_size.is_multiple_of(nodes as u64) {
            return Err(TopologyError::NotEquidistant { ring_size, nodes });
        }
        Self::new(vec![ring_size / nodes as u64; nodes], rrhs, bbu_node)
    }

    /// `k` RRHs with ids `0..k`, placed round-robin on the nodes.
    pub fn round_robin_rrhs(nodes: usize, k: usize) -> Vec<RrhAttachment> {
        (0..k)
            .map(|i| RrhAttachment {
                rrh_id: i as RrhId,
                node: i % nodes.max(1),
            })
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn ring_size(&self) -> u64 {
        self.ring_size
    }

    pub fn arcs(&self) -> &[u64] {
        &self.arcs
    }

    pub fn rrhs(&self) -> &[RrhAttachment] {
        &self.rrhs
    }

    pub fn bbu_node(&self) -> NodeId {
        self.bbu_node
    }

    pub fn rrh(&self, id: RrhId) -> Option<&RrhAttachment> {
        self.rrhs.iter().find(|r| r.rrh_id == id)
    }

    /// Distance from node 0 to `u`.
    pub fn base(&self, u: NodeId) -> u64 {
        self.bases[u]
    }

    /// Directed distance ω(u, v). By convention ω(u, u) = RS.
    pub fn distance(&self, u: NodeId, v: NodeId) -> u64 {
        match self.gap(u, v) {
            0 => self.ring_size,
            d => d,
        }
    }

    /// Directed distance from `u` to `v` in `[0, RS)`; zero when `u == v`.
    pub fn gap(&self, u: NodeId, v: NodeId) -> u64 {
        let rs = self.ring_size;
        (self.bases[v] + rs - self.bases[u]) % rs
    }

    /// Time for a container filled at `u` to reach the BBU node.
    pub fn to_bbu(&self, u: NodeId) -> u64 {
        self.distance(u, self.bbu_node)
    }

    /// RRHs in cycle order starting from the BBU node (an RRH attached to
    /// the BBU node comes first). Ties are broken by RRH id.
    pub fn rrhs_in_cycle_order(&self) -> Vec<RrhAttachment> {
        let mut out = self.rrhs.clone();
        out.sort_by_key(|r| (self.gap(self.bbu_node, r.node), r.rrh_id));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_follow_the_cycle() {
        let topo = RingTopology::new(vec![10, 30, 60], vec![], 0).unwrap();
        assert_eq!(topo.ring_size(), 100);
        assert_eq!(topo.distance(0, 1), 10);
        assert_eq!(topo.distance(0, 2), 40);
        assert_eq!(topo.distance(2, 1), 70);
        assert_eq!(topo.distance(1, 0), 90);
        for u in 0..3 {
            assert_eq!(topo.distance(u, u), 100);
            assert_eq!(topo.gap(u, u), 0);
        }
        for u in 0..3 {
            for v in 0..3 {
                if u != v {
                    let d = topo.distance(u, v);
                    assert!(d > 0 && d < 100);
                    assert_eq!(d + topo.distance(v, u), 100);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_rings() {
        assert_eq!(
            RingTopology::new(vec![], vec![], 0),
            Err(TopologyError::NoNodes)
        );
        assert_eq!(
            RingTopology::new(vec![5, 0], vec![], 0),
            Err(TopologyError::ZeroArc(1))
        );
        assert!(matches!(
            RingTopology::new(vec![5, 5], vec![], 2),
            Err(TopologyError::UnknownNode { .. })
        ));
        assert!(matches!(
            RingTopology::equidistant(3, 100, vec![], 0),
            Err(TopologyError::NotEquidistant { .. })
        ));
    }

    #[test]
    fn cycle_order_starts_at_bbu() {
        let rrhs = vec![
            RrhAttachment { rrh_id: 0, node: 1 },
            RrhAttachment { rrh_id: 1, node: 3 },
            RrhAttachment { rrh_id: 2, node: 2 },
            RrhAttachment { rrh_id: 3, node: 0 },
        ];
        let topo = RingTopology::equidistant(4, 100, rrhs, 2).unwrap();
        let order: Vec<_> = topo
            .rrhs_in_cycle_order()
            .iter()
            .map(|r| r.rrh_id)
            .collect();
        assert_eq!(order, vec![2, 1, 3, 0]);
        // distance to the BBU decreases along that order
        let d: Vec<_> = topo
            .rrhs_in_cycle_order()
            .iter()
            .map(|r| topo.to_bbu(r.node))
            .collect();
        assert_eq!(d, vec![100, 75, 50, 25]);
    }
}
