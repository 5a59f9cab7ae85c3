//! Seeded replications of a configured experiment, merged outputs and the
//! reference scenario suite.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, PolicyConfig, SchedulerChoice};
use crate::metrics::{LatencyHistogram, LoadCounters, SpreadStats};
use crate::policy::{ReservationPlan, ScheduleFault};
use crate::ring::{RingCounters, TrafficClass};
use crate::scheduler::{check_validity, Assignment, ScheduleError, Validity};
use crate::sim::{simulate, PolicyDiagnostics, PolicyKind, SimSetup};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("invalid schedule: {0}")]
    Fault(#[from] ScheduleFault),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Process exit status: 1 for configuration problems, 2 for schedules.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Fault(_) => 2,
            _ => 1,
        }
    }
}

/// Seed of replication `index`, a pure function of the master seed.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Offsets drawn uniformly in the period, one per RRH in id order.
pub fn random_offsets(seed: u64, rrh_ids: &[u32], period: u64) -> Vec<(u32, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rrh_ids
        .iter()
        .map(|&id| (id, rng.gen_range(0..period)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassStats {
    pub count: u64,
    pub mean: Option<f64>,
    pub max: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub index: u64,
    pub seed: u64,
    pub classes: BTreeMap<String, ClassStats>,
    /// Mean over both C-RAN directions.
    pub cran_mean: Option<f64>,
    pub load: LoadCounters,
    pub ring: RingCounters,
    pub diagnostics: PolicyDiagnostics,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub assignment: Option<Assignment>,
    pub histogram: LatencyHistogram,
    pub load: LoadCounters,
    pub replications: Vec<ReplicationRecord>,
}

fn cran_mean(h: &LatencyHistogram) -> Option<f64> {
    let n = h.count(TrafficClass::CranUp) + h.count(TrafficClass::CranDown);
    if n == 0 {
        return None;
    }
    let sum: f64 = [TrafficClass::CranUp, TrafficClass::CranDown]
        .iter()
        .filter_map(|&c| h.mean(c).map(|m| m * h.count(c) as f64))
        .sum();
    Some(sum / n as f64)
}

impl ExperimentResult {
    pub fn class_spread(&self, class: TrafficClass) -> Option<SpreadStats> {
        let means: Vec<f64> = self
            .replications
            .iter()
            .filter_map(|r| r.classes[class.name()].mean)
            .collect();
        SpreadStats::of(&means)
    }

    pub fn cran_spread(&self) -> Option<SpreadStats> {
        let means: Vec<f64> = self
            .replications
            .iter()
            .filter_map(|r| r.cran_mean)
            .collect();
        SpreadStats::of(&means)
    }

    pub fn cran_max(&self) -> Option<u64> {
        [TrafficClass::CranUp, TrafficClass::CranDown]
            .iter()
            .filter_map(|&c| self.histogram.max(c))
            .max()
    }

    /// Write the CDF, summary, replication and (when deterministic)
    /// assignment files into `dir`; returns their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ExperimentError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let name = &self.config.name;
        let mut files = vec![
            (format!("{name}_cdf.csv"), self.histogram.to_csv()),
            (
                format!("{name}_summary.json"),
                to_json(&self.histogram.summary_map()),
            ),
            (
                format!("{name}_replications.json"),
                to_json(&self.replication_report()),
            ),
        ];
        if let Some(a) = &self.assignment {
            files.push((format!("{name}_assignment.json"), a.to_json()));
        }
        let mut written = Vec::new();
        for (file, body) in files {
            let path = dir.join(file);
            std::fs::write(&path, body).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }

    fn replication_report(&self) -> ReplicationReport<'_> {
        let across = TrafficClass::ALL
            .iter()
            .filter_map(|&c| self.class_spread(c).map(|s| (c.name().to_string(), s)))
            .collect();
        ReplicationReport {
            name: &self.config.name,
            policy: self.config.policy.label(),
            load_fraction: self.load.load_fraction(),
            load: self.load,
            across,
            replications: &self.replications,
        }
    }
}

#[derive(Serialize)]
struct ReplicationReport<'a> {
    name: &'a str,
    policy: &'a str,
    load_fraction: f64,
    load: LoadCounters,
    across: BTreeMap<String, SpreadStats>,
    replications: &'a [ReplicationRecord],
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Build (and check) the assignment of a deterministic config.
pub fn build_assignment(
    cfg: &ExperimentConfig,
    scheduler: SchedulerChoice,
) -> Result<Assignment, ExperimentError> {
    let topo = cfg.topology()?;
    let params = cfg.capacity();
    let assignment = scheduler.build(&params, &topo)?;
    if let Validity::Conflict(fault) = check_validity(&assignment, &topo, &params) {
        return Err(fault.into());
    }
    Ok(assignment)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate()?;
    let topo = cfg.topology()?;
    let params = cfg.capacity();
    let (policy, assignment) = match cfg.policy {
        PolicyConfig::Deterministic { scheduler } => {
            let assignment = build_assignment(cfg, scheduler)?;
            let plan = ReservationPlan::new(&assignment, &topo, &params)?;
            (PolicyKind::Deterministic(Arc::new(plan)), Some(assignment))
        }
        other => (
            PolicyKind::Stochastic(other.stochastic().expect("stochastic policy")),
            None,
        ),
    };
    let rrh_ids: Vec<u32> = topo.rrhs().iter().map(|r| r.rrh_id).collect();
    let be = cfg.best_effort_spec();
    let runs: Vec<_> = (0..cfg.replications)
        .into_par_iter()
        .map(|index| {
            let seed = child_seed(cfg.master_seed, index);
            let offsets = match policy {
                PolicyKind::Stochastic(_) => random_offsets(seed, &rrh_ids, params.period),
                PolicyKind::Deterministic(_) => Vec::new(),
            };
            let out = simulate(SimSetup {
                topology: topo.clone(),
                period: params.period,
                emission_time: params.emission_time,
                acceleration: params.acceleration,
                offsets,
                policy: policy.clone(),
                best_effort: be,
                horizon: cfg.horizon,
                warmup: cfg.warmup(),
                seed,
            })?;
            Ok((index, seed, out))
        })
        .collect::<Result<_, ScheduleFault>>()?;

    let mut histogram = LatencyHistogram::new();
    let mut load = LoadCounters::default();
    let mut replications = Vec::with_capacity(runs.len());
    for (index, seed, out) in runs {
        histogram.merge(&out.histogram);
        load.merge(&out.load);
        let classes = TrafficClass::ALL
            .iter()
            .map(|&c| {
                let stats = ClassStats {
                    count: out.histogram.count(c),
                    mean: out.histogram.mean(c),
                    max: out.histogram.max(c),
                };
                (c.name().to_string(), stats)
            })
            .collect();
        replications.push(ReplicationRecord {
            index,
            seed,
            classes,
            cran_mean: cran_mean(&out.histogram),
            load: out.load,
            ring: out.ring,
            diagnostics: out.diagnostics,
        });
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        assignment,
        histogram,
        load,
        replications,
    })
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub replications: u64,
    pub horizon: u64,
    pub master_seed: u64,
    /// Scenario ids to run; empty runs all of them.
    pub scenarios: Vec<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            replications: 30,
            horizon: 1_000_000,
            master_seed: 1,
            scenarios: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: &'static str,
    pub title: &'static str,
    pub variants: Vec<ExperimentConfig>,
}

/// The four reference scenarios, all at 40% best-effort load.
pub fn scenarios(opts: &SuiteOptions) -> Vec<Scenario> {
    use SchedulerChoice::*;
    let det = |scheduler| PolicyConfig::Deterministic { scheduler };
    let make = |id: &str, policy: PolicyConfig, k: u64, et: u64| {
        let mut cfg = ExperimentConfig::reference(&format!("{id}_{}", policy.label()), policy);
        cfg.params.antennas = k;
        cfg.params.emission_time = et;
        cfg.horizon = opts.horizon;
        cfg.replications = opts.replications;
        cfg.master_seed = opts.master_seed;
        cfg
    };
    let all = vec![
        Scenario {
            id: "A",
            title: "stochastic insertion, FIFO against C-RAN priority",
            variants: vec![
                make("A", PolicyConfig::Fifo, 5, 500),
                make("A", PolicyConfig::CranPriority, 5, 500),
            ],
        },
        Scenario {
            id: "B",
            title: "naive positions, with and without period balancing",
            variants: vec![
                make("B", det(Naive), 5, 500),
                make("B", det(NaiveBalanced), 5, 500),
            ],
        },
        Scenario {
            id: "C",
            title: "12 antennas with ET = 200: compacting, balancing, spreading",
            variants: vec![
                make("C", det(Naive), 12, 200),
                make("C", det(Compact), 12, 200),
                make("C", det(CompactBalanced), 12, 200),
                make("C", det(CompactSpread), 12, 200),
            ],
        },
        Scenario {
            id: "D",
            title: "saturating positions against FIFO and period balancing",
            variants: vec![
                make("D", PolicyConfig::Fifo, 5, 500),
                make("D", det(Saturate), 5, 500),
                make("D", det(NaiveBalanced), 5, 500),
            ],
        },
    ];
    all.into_iter()
        .filter(|s| opts.scenarios.is_empty() || opts.scenarios.iter().any(|id| id == s.id))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantReport {
    pub name: String,
    pub policy: &'static str,
    pub be: Option<SpreadStats>,
    pub cran: Option<SpreadStats>,
    pub cran_max: Option<u64>,
    pub load_fraction: f64,
}

/// `lower` is expected to have the smaller mean of `metric`.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub scenario: &'static str,
    pub metric: &'static str,
    pub lower: &'static str,
    pub higher: &'static str,
    pub lower_mean: f64,
    pub higher_mean: f64,
    /// Standard error of the difference of the two across-replication means.
    pub standard_error: f64,
    pub holds: bool,
}

impl Comparison {
    pub fn difference(&self) -> f64 {
        self.higher_mean - self.lower_mean
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub id: &'static str,
    pub title: &'static str,
    pub variants: Vec<VariantReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub scenarios: Vec<ScenarioReport>,
    pub comparisons: Vec<Comparison>,
}

pub struct SuiteRun {
    pub report: SuiteReport,
    /// Results keyed by scenario id and policy label.
    pub results: BTreeMap<(&'static str, &'static str), ExperimentResult>,
}

impl SuiteRun {
    pub fn result(
        &self,
        scenario: &'static str,
        policy: &'static str,
    ) -> Option<&ExperimentResult> {
        self.results.get(&(scenario, policy))
    }
}

fn compare(
    results: &BTreeMap<(&'static str, &'static str), ExperimentResult>,
    scenario: &'static str,
    metric: &'static str,
    lower: &'static str,
    higher: &'static str,
) -> Option<Comparison> {
    let spread = |policy| {
        let r = results.get(&(scenario, policy))?;
        match metric {
            "cran_mean" => r.cran_spread(),
            _ => r.class_spread(TrafficClass::BestEffort),
        }
    };
    let (lo, hi) = (spread(lower)?, spread(higher)?);
    let standard_error = (lo.sem.powi(2) + hi.sem.powi(2)).sqrt();
    Some(Comparison {
        scenario,
        metric,
        lower,
        higher,
        lower_mean: lo.mean,
        higher_mean: hi.mean,
        standard_error,
        holds: hi.mean - lo.mean > standard_error,
    })
}

pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteRun, ExperimentError> {
    let mut results = BTreeMap::new();
    let mut scenario_reports = Vec::new();
    for scenario in scenarios(opts) {
        let mut variants = Vec::new();
        for cfg in &scenario.variants {
            let r = run_experiment(cfg)?;
            variants.push(VariantReport {
                name: cfg.name.clone(),
                policy: cfg.policy.label(),
                be: r.class_spread(TrafficClass::BestEffort),
                cran: r.cran_spread(),
                cran_max: r.cran_max(),
                load_fraction: r.load.load_fraction(),
            });
            results.insert((scenario.id, cfg.policy.label()), r);
        }
        scenario_reports.push(ScenarioReport {
            id: scenario.id,
            title: scenario.title,
            variants,
        });
    }
    let expected = [
        ("A", "cran_mean", "cran_priority", "fifo"),
        ("A", "be_mean", "fifo", "cran_priority"),
        ("B", "be_mean", "naive_balanced", "naive"),
        ("C", "be_mean", "compact", "naive"),
        ("C", "be_mean", "compact_balanced", "compact"),
        ("C", "be_mean", "compact_spread", "compact"),
        ("D", "be_mean", "saturate", "naive_balanced"),
    ];
    let comparisons = expected
        .iter()
        .filter_map(|&(s, m, lo, hi)| compare(&results, s, m, lo, hi))
        .collect();
    Ok(SuiteRun {
        report: SuiteReport {
            scenarios: scenario_reports,
            comparisons,
        },
        results,
    })
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, ExperimentError> {
        let path = dir.join("report.json");
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(&path, self.to_json()))
            .map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_seeds_are_stable_and_distinct() {
        assert_eq!(child_seed(7, 3), child_seed(7, 3));
        let seeds: std::collections::BTreeSet<u64> = (0..100).map(|i| child_seed(7, i)).collect();
        assert_eq!(seeds.len(), 100);
        assert_ne!(child_seed(7, 0), child_seed(8, 0));
    }

    #[test]
    fn offsets_stay_in_the_period() {
        let offsets = random_offsets(5, &[0, 1, 2], 1000);
        assert_eq!(offsets.len(), 3);
        assert!(offsets.iter().all(|&(_, o)| o < 1000));
    }
}
