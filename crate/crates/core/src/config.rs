//! Experiment configuration (one JSON document per run).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::StochasticPolicy;
use crate::scheduler::{
    balance_period, balance_used_positions, compact_positions, naive_assign, prop1_assign,
    saturate_positions, Assignment, CapacityParams, ScheduleError,
};
use crate::topology::{NodeId, RingTopology, RrhAttachment, TopologyError};
use crate::traffic::BeArrivalSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcLayout {
    Equidistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arcs {
    Layout(ArcLayout),
    Weights(Vec<u64>),
}

impl Default for Arcs {
    fn default() -> Self {
        Arcs::Layout(ArcLayout::Equidistant)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: usize,
    #[serde(default)]
    pub arcs: Arcs,
    /// Node of each RRH, by RRH id. Defaults to RRH `i` on node `i mod n`.
    #[serde(default)]
    pub rrh_nodes: Option<Vec<NodeId>>,
    #[serde(default)]
    pub bbu_node: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub period: u64,
    pub ring_size: u64,
    pub emission_time: u64,
    pub acceleration: u64,
    pub container_bytes: u64,
    pub antennas: u64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            period: 1000,
            ring_size: 100,
            emission_time: 500,
            acceleration: 10,
            container_bytes: 12_500,
            antennas: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerChoice {
    Prop1,
    Naive,
    /// Naive positions, blocks balanced over the period.
    NaiveBalanced,
    Compact,
    CompactBalanced,
    /// Compact positions spread over the F positions.
    CompactSpread,
    /// Compact, balanced over the period, then spread.
    Combined,
    Saturate,
}

impl SchedulerChoice {
    pub fn build(
        self,
        params: &CapacityParams,
        topo: &RingTopology,
    ) -> Result<Assignment, ScheduleError> {
        use SchedulerChoice::*;
        match self {
            Prop1 => prop1_assign(params, topo),
            Naive => naive_assign(params, topo),
            NaiveBalanced => balance_period(&naive_assign(params, topo)?, params, topo),
            Compact => compact_positions(params, topo),
            CompactBalanced => balance_period(&compact_positions(params, topo)?, params, topo),
            CompactSpread => {
                balance_used_positions(&compact_positions(params, topo)?, params, topo)
            }
            Combined => {
                let balanced = balance_period(&compact_positions(params, topo)?, params, topo)?;
                balance_used_positions(&balanced, params, topo)
            }
            Saturate => saturate_positions(params, topo),
        }
    }

    pub fn name(self) -> &'static str {
        use SchedulerChoice::*;
        match self {
            Prop1 => "prop1",
            Naive => "naive",
            NaiveBalanced => "naive_balanced",
            Compact => "compact",
            CompactBalanced => "compact_balanced",
            CompactSpread => "compact_spread",
            Combined => "combined",
            Saturate => "saturate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Fifo,
    CranPriority,
    Deterministic { scheduler: SchedulerChoice },
}

impl PolicyConfig {
    pub fn stochastic(self) -> Option<StochasticPolicy> {
        match self {
            PolicyConfig::Fifo => Some(StochasticPolicy::Fifo),
            PolicyConfig::CranPriority => Some(StochasticPolicy::CranPriority),
            PolicyConfig::Deterministic { .. } => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PolicyConfig::Fifo => "fifo",
            PolicyConfig::CranPriority => "cran_priority",
            PolicyConfig::Deterministic { scheduler } => scheduler.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestEffortConfig {
    /// Total BE load over the ring, as a fraction of its capacity.
    pub load: f64,
    #[serde(default = "default_p_high")]
    pub p_high: f64,
    /// Contention-buffer timeout in UoT.
    #[serde(default = "default_max_wait")]
    pub max_wait: u64,
}

fn default_p_high() -> f64 {
    0.05
}

fn default_max_wait() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub best_effort: Option<BestEffortConfig>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup_periods: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_name() -> String {
    "run".into()
}
fn default_horizon() -> u64 {
    1_000_000
}
fn default_replications() -> u64 {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_warmup() -> u64 {
    2
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    /// Five equidistant nodes, one RRH per node, 40% best effort.
    pub fn reference(name: &str, policy: PolicyConfig) -> Self {
        Self {
            name: name.into(),
            topology: TopologyConfig {
                nodes: 5,
                arcs: Arcs::default(),
                rrh_nodes: None,
                bbu_node: 0,
            },
            params: ParamsConfig::default(),
            policy,
            best_effort: Some(BestEffortConfig {
                load: 0.4,
                p_high: default_p_high(),
                max_wait: default_max_wait(),
            }),
            horizon: default_horizon(),
            replications: default_replications(),
            master_seed: default_seed(),
            warmup_periods: default_warmup(),
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let p = &self.params;
        for (name, v) in [
            ("period", p.period),
            ("ring_size", p.ring_size),
            ("emission_time", p.emission_time),
            ("acceleration", p.acceleration),
            ("container_bytes", p.container_bytes),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if !p.emission_time.is_multiple_of(p.acceleration) {
            return bad("emission_time must be a multiple of acceleration".into());
        }
        if p.emission_time > p.period {
            return bad("emission_time exceeds the period".into());
        }
        if self.warmup_periods < 1 && self.policy.stochastic().is_none() {
            return bad("deterministic runs need at least one warm-up period".into());
        }
        if self.horizon < (self.warmup_periods + 10) * p.period {
            return bad(format!(
                "horizon {} shorter than warm-up plus 10 periods",
                self.horizon
            ));
        }
        if self.replications == 0 {
            return bad("at least one replication is needed".into());
        }
        if let Some(be) = &self.best_effort {
            if !(0.0..1.0).contains(&be.load) || !(0.0..=1.0).contains(&be.p_high) {
                return bad("best-effort load and p_high must be fractions".into());
            }
        }
        let topo = self.topology()?;
        if topo.ring_size() != p.ring_size {
            return bad(format!(
                "arcs sum to {}, ring_size is {}",
                topo.ring_size(),
                p.ring_size
            ));
        }
        Ok(())
    }

    pub fn topology(&self) -> Result<RingTopology, ConfigError> {
        let t = &self.topology;
        let k = self.params.antennas as usize;
        let rrhs = match &t.rrh_nodes {
            Some(nodes) if nodes.len() != k => {
                return Err(ConfigError::Invalid(format!(
                    "{} RRH nodes given for {k} antennas",
                    nodes.len()
                )))
            }
            Some(nodes) => nodes
                .iter()
                .enumerate()
                .map(|(i, &node)| RrhAttachment {
                    rrh_id: i as u32,
                    node,
                })
                .collect(),
            None => RingTopology::round_robin_rrhs(t.nodes, k),
        };
        let topo = match &t.arcs {
            Arcs::Layout(ArcLayout::Equidistant) => {
                RingTopology::equidistant(t.nodes, self.params.ring_size, rrhs, t.bbu_node)?
            }
            Arcs::Weights(w) => {
                if w.len() != t.nodes {
                    return Err(ConfigError::Invalid(format!(
                        "{} arc weights for {} nodes",
                        w.len(),
                        t.nodes
                    )));
                }
                RingTopology::new(w.clone(), rrhs, t.bbu_node)?
            }
        };
        Ok(topo)
    }

    pub fn capacity(&self) -> CapacityParams {
        let p = &self.params;
        CapacityParams {
            period: p.period,
            ring_size: p.ring_size,
            emission_time: p.emission_time,
            acceleration: p.acceleration,
            antennas: p.antennas,
        }
    }

    /// Generator of one node: the total load is shared evenly by the nodes.
    pub fn best_effort_spec(&self) -> Option<BeArrivalSpec> {
        self.best_effort.map(|be| {
            BeArrivalSpec::calibrated(
                be.load / self.topology.nodes as f64,
                be.p_high,
                self.params.container_bytes,
                be.max_wait,
            )
        })
    }

    pub fn warmup(&self) -> u64 {
        self.warmup_periods * self.params.period
    }
}
