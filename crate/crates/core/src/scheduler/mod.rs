//! Offset assignment for periodic C-RAN streams.
//!
//! A stream's *position* is the residue mod `F` of the times its containers
//! pass the BBU node. With `F | RS`, streams on different positions never
//! share a container, so each position is an independent *lane* of length
//! `P`. RRHs use even positions and their BBU answers the next odd one.
//!
//! Inside a lane, blocks of consecutive emissions are placed in cycle order
//! from the BBU node (decreasing distance to the BBU). Two blocks can then
//! be back to back, and only the wrap-around from the last block to the
//! first one of the next period needs `RS` UoT of spacing, which is what
//! makes `k·ET + RS <= P` streams fit on one lane.

mod assignment;
mod build;
mod check;

pub use assignment::{Assignment, RrhPlan, Segment, SegmentTiming};
pub use build::{
    balance_period, balance_used_positions, compact_positions, naive_assign, prop1_assign,
    saturate_positions, spread_positions,
};
pub use check::{check_validity, waste, Validity, WasteReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{requested} antennas requested, at most {limit} supported")]
    CapacityExceeded { requested: u64, limit: u64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
}

/// Timing parameters of the ring and the C-RAN streams, all in UoT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityParams {
    pub period: u64,
    pub ring_size: u64,
    pub emission_time: u64,
    pub acceleration: u64,
    /// Number of antennas `k`.
    pub antennas: u64,
}

impl CapacityParams {
    /// Reference parameters: P = 1000, RS = 100, ET = 500, F = 10, k = 5.
    pub fn reference() -> Self {
        Self {
            period: 1000,
            ring_size: 100,
            emission_time: 500,
            acceleration: 10,
            antennas: 5,
        }
    }

    pub fn with_antennas(self, antennas: u64) -> Self {
        Self { antennas, ..self }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let bad = |m: String| Err(ScheduleError::InvalidParams(m));
        let &Self {
            period: p,
            ring_size: rs,
            emission_time: et,
            acceleration: f,
            ..
        } = self;
        if p == 0 || rs == 0 || et == 0 || f == 0 {
            return bad("timing parameters must be positive".into());
        }
        if f % 2 != 0 {
            return bad(format!("acceleration {f} must be even"));
        }
        for (name, v) in [("period", p), ("ring size", rs), ("emission time", et)] {
            if v % f != 0 {
                return bad(format!("{name} {v} is not a multiple of F = {f}"));
            }
        }
        if et + rs > p {
            return bad(format!("ET + RS = {} exceeds the period {p}", et + rs));
        }
        Ok(())
    }

    pub fn packets_per_stream(&self) -> u64 {
        self.emission_time / self.acceleration
    }

    /// Whole RRHs that fit on one position with zero latency.
    pub fn per_position_capacity(&self) -> u64 {
        (self.period - self.ring_size) / self.emission_time
    }

    /// RRH positions needed when packing whole blocks.
    pub fn positions_needed(&self) -> u64 {
        self.antennas.div_ceil(self.per_position_capacity().max(1))
    }

    /// `⌈k·ET/(P−RS)⌉`, the position count when blocks may be split.
    pub fn positions_needed_split(&self) -> u64 {
        (self.antennas * self.emission_time).div_ceil(self.period - self.ring_size)
    }
}

/// Antennas supported with zero latency: `⌊(P−RS)/ET⌋ · F/2`.
pub fn max_antennas_zero_latency(params: &CapacityParams) -> u64 {
    params.per_position_capacity() * (params.acceleration / 2)
}

/// Antennas supported when streams may straddle two positions:
/// `⌊(P−RS)/ET · F/2⌋`, with the product taken before the floor.
pub fn max_antennas_saturating(params: &CapacityParams) -> u64 {
    (params.period - params.ring_size) * params.acceleration / (2 * params.emission_time)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_capacities() {
        let p = CapacityParams::reference();
        p.validate().unwrap();
        assert_eq!(max_antennas_zero_latency(&p), 5);
        assert_eq!(max_antennas_saturating(&p), 9);
    }

    #[test]
    fn single_block_per_position_when_et_fills_the_lane() {
        let p = CapacityParams {
            emission_time: 900,
            ..CapacityParams::reference()
        };
        assert_eq!(max_antennas_zero_latency(&p), 5);
    }

    #[test]
    fn shorter_bursts_pack_more_antennas() {
        let p = CapacityParams {
            emission_time: 200,
            ..CapacityParams::reference()
        };
        assert_eq!(max_antennas_zero_latency(&p), 20);
        let p = p.with_antennas(12);
        assert_eq!(p.positions_needed(), 3);
        assert_eq!(p.positions_needed_split(), 3);
    }

    #[test]
    fn validation() {
        let base = CapacityParams::reference();
        assert!(CapacityParams {
            acceleration: 5,
            ..base
        }
        .validate()
        .is_err());
        assert!(CapacityParams {
            ring_size: 105,
            ..base
        }
        .validate()
        .is_err());
        assert!(CapacityParams {
            emission_time: 950,
            ..base
        }
        .validate()
        .is_err());
        assert!(CapacityParams { period: 0, ..base }.validate().is_err());
    }
}
