//! Brute-force validation of assignments by running the reservation drive
//! on an otherwise empty ring.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::{Assignment, CapacityParams};
use crate::policy::{ReservationPlan, ScheduleFault};
use crate::sim::{simulate, PolicyKind, SimOutcome, SimSetup};
use crate::topology::RingTopology;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Conflict(ScheduleFault),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Reservation loss of an assignment over one steady-state period.
///
/// A reserved container leaving the BBU node empty is lost for that round,
/// unless it has just delivered an uplink packet there. Amounts are given in units of the position's timeline (one
/// container every F UoT), so a position that loses `RS/F` containers
/// reports `RS`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WasteReport {
    pub per_position: BTreeMap<u64, u64>,
    pub total: u64,
}

fn run_plan(
    assignment: &Assignment,
    topo: &RingTopology,
    params: &CapacityParams,
    horizon_periods: u64,
    warmup_periods: u64,
) -> Result<SimOutcome, ScheduleFault> {
    let plan = ReservationPlan::new(assignment, topo, params)?;
    let p = params.period;
    simulate(SimSetup {
        topology: topo.clone(),
        period: p,
        emission_time: params.emission_time,
        acceleration: params.acceleration,
        offsets: Vec::new(),
        policy: PolicyKind::Deterministic(Arc::new(plan)),
        best_effort: None,
        horizon: horizon_periods * p,
        warmup: warmup_periods * p,
        seed: 0,
    })
}

/// One activation period, one warm-up period and three checked periods of
/// C-RAN traffic alone. Valid iff no reservation or fill is refused and no
/// packet waits longer than the assignment declares.
pub fn check_validity(
    assignment: &Assignment,
    topo: &RingTopology,
    params: &CapacityParams,
) -> Validity {
    match run_plan(assignment, topo, params, 5, 0) {
        Ok(_) => Validity::Valid,
        Err(fault) => Validity::Conflict(fault),
    }
}

pub fn waste(
    assignment: &Assignment,
    topo: &RingTopology,
    params: &CapacityParams,
) -> Result<WasteReport, ScheduleFault> {
    let out = run_plan(assignment, topo, params, 3, 2)?;
    let per_position: BTreeMap<u64, u64> = out
        .reserved_empty_by_position
        .iter()
        .map(|(&pos, &n)| (pos, n * params.acceleration))
        .collect();
    let total = per_position.values().sum();
    Ok(WasteReport {
        per_position,
        total,
    })
}
