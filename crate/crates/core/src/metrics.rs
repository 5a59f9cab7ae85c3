//! Latency histograms and load counters.
//!
//! Latencies are integer UoT (insertion-buffer waiting time); statistics
//! are computed exactly from the counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ring::{Tick, TrafficClass};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("histogram for {0:?} is empty")]
pub struct EmptyHistogram(pub TrafficClass);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencySample {
    pub class: TrafficClass,
    pub latency: u64,
    pub node: NodeId,
    pub period_index: u64,
}

/// Per-class counts indexed by latency.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LatencyHistogram {
    counts: [Vec<u64>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: u64,
    pub mean: f64,
    pub max: u64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    /// `cdf[l]` is the fraction of packets with latency `<= l`.
    pub cdf: Vec<f64>,
}

impl LatencyHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, sample: LatencySample) {
        self.add(sample.class, sample.latency, 1);
    }

    pub fn add(&mut self, class: TrafficClass, latency: u64, n: u64) {
        let bins = &mut self.counts[class.index()];
        let l = latency as usize;
        if bins.len() <= l {
            bins.resize(l + 1, 0);
        }
        bins[l] += n;
    }

    pub fn merge(&mut self, other: &LatencyHistogram) {
        for class in TrafficClass::ALL {
            for (l, &n) in other.counts[class.index()].iter().enumerate() {
                if n > 0 {
                    self.add(class, l as u64, n);
                }
            }
        }
    }

    pub fn counts(&self, class: TrafficClass) -> &[u64] {
        &self.counts[class.index()]
    }

    pub fn count(&self, class: TrafficClass) -> u64 {
        self.counts[class.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        TrafficClass::ALL.iter().map(|&c| self.count(c)).sum()
    }

    pub fn is_empty(&self, class: TrafficClass) -> bool {
        self.count(class) == 0
    }

    pub fn max(&self, class: TrafficClass) -> Option<u64> {
        self.counts[class.index()]
            .iter()
            .rposition(|&n| n > 0)
            .map(|l| l as u64)
    }

    pub fn mean(&self, class: TrafficClass) -> Option<f64> {
        let n = self.count(class);
        if n == 0 {
            return None;
        }
        let sum: u128 = self.counts[class.index()]
            .iter()
            .enumerate()
            .map(|(l, &c)| l as u128 * c as u128)
            .sum();
        Some(sum as f64 / n as f64)
    }

    /// Fraction of packets with latency `<= latency`.
    pub fn cdf_at(&self, class: TrafficClass, latency: u64) -> Option<f64> {
        let n = self.count(class);
        if n == 0 {
            return None;
        }
        let below: u64 = self.counts[class.index()]
            .iter()
            .take(latency as usize + 1)
            .sum();
        Some(below as f64 / n as f64)
    }

    pub fn cdf(&self, class: TrafficClass) -> Vec<f64> {
        let n = self.count(class);
        let mut acc = 0;
        self.counts[class.index()]
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / n as f64
            })
            .collect()
    }

    /// Smallest latency `l` with `cdf(l) >= q`.
    pub fn quantile(&self, class: TrafficClass, q: f64) -> Option<u64> {
        let n = self.count(class);
        if n == 0 {
            return None;
        }
        let target = (q * n as f64).ceil().max(1.0) as u64;
        let mut acc = 0;
        for (l, &c) in self.counts[class.index()].iter().enumerate() {
            acc += c;
            if acc >= target {
                return Some(l as u64);
            }
        }
        self.max(class)
    }

    pub fn summarize(&self, class: TrafficClass) -> Result<Summary, EmptyHistogram> {
        let count = self.count(class);
        if count == 0 {
            return Err(EmptyHistogram(class));
        }
        let q = |p| self.quantile(class, p).unwrap_or(0);
        Ok(Summary {
            count,
            mean: self.mean(class).unwrap_or(0.0),
            max: self.max(class).unwrap_or(0),
            p50: q(0.5),
            p90: q(0.9),
            p99: q(0.99),
            cdf: self.cdf(class),
        })
    }

    /// Summary of every non-empty class, keyed by class name.
    pub fn summary_map(&self) -> BTreeMap<String, Summary> {
        TrafficClass::ALL
            .iter()
            .filter_map(|&c| self.summarize(c).ok().map(|s| (c.name().to_string(), s)))
            .collect()
    }

    /// `class,latency_uot,count` rows for every non-zero bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,latency_uot,count\n");
        for class in TrafficClass::ALL {
            for (l, &n) in self.counts[class.index()].iter().enumerate() {
                if n > 0 {
                    let _ = writeln!(out, "{},{},{}", class.name(), l, n);
                }
            }
        }
        out
    }
}

/// Container usage over a measurement window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadCounters {
    pub filled: [u64; 3],
    /// Reservations placed on a free container that then travelled a round empty.
    pub reserved_idle: u64,
    /// Reservations that came due and were not used by their owner.
    pub reserved_unused: u64,
    pub window: Tick,
    pub period: u64,
}

impl LoadCounters {
    pub fn periods(&self) -> f64 {
        self.window as f64 / self.period as f64
    }

    pub fn filled_total(&self) -> u64 {
        self.filled.iter().sum()
    }

    /// Filled containers per period divided by the period.
    pub fn load_fraction(&self) -> f64 {
        if self.window == 0 {
            return 0.0;
        }
        self.filled_total() as f64 / self.window as f64
    }

    pub fn class_load(&self, class: TrafficClass) -> f64 {
        if self.window == 0 {
            return 0.0;
        }
        self.filled[class.index()] as f64 / self.window as f64
    }

    pub fn merge(&mut self, other: &LoadCounters) {
        for i in 0..3 {
            self.filled[i] += other.filled[i];
        }
        self.reserved_idle += other.reserved_idle;
        self.reserved_unused += other.reserved_unused;
        self.window += other.window;
        self.period = other.period.max(self.period);
    }
}

/// Mean, sample standard deviation and standard error of a set of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadStats {
    pub n: usize,
    pub mean: f64,
    pub stddev: f64,
    pub sem: f64,
}

impl SpreadStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            n,
            mean,
            stddev,
            sem: stddev / (n as f64).sqrt(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(latency: u64) -> LatencySample {
        LatencySample {
            class: TrafficClass::BestEffort,
            latency,
            node: 0,
            period_index: 0,
        }
    }

    #[test]
    fn zero_latencies() {
        let mut h = LatencyHistogram::new();
        for _ in 0..7 {
            h.record(sample(0));
        }
        let s = h.summarize(TrafficClass::BestEffort).unwrap();
        assert_eq!((s.mean, s.max), (0.0, 0));
        assert_eq!(h.cdf_at(TrafficClass::BestEffort, 0), Some(1.0));
    }

    #[test]
    fn small_sample_statistics() {
        let mut h = LatencyHistogram::new();
        for l in [0, 1, 1, 3] {
            h.record(sample(l));
        }
        let s = h.summarize(TrafficClass::BestEffort).unwrap();
        assert_eq!(s.mean, 1.25);
        assert_eq!(s.max, 3);
        assert_eq!(h.cdf_at(TrafficClass::BestEffort, 1), Some(0.75));
        assert_eq!(s.p50, 1);
        assert_eq!(s.cdf, vec![0.25, 0.75, 0.75, 1.0]);
    }

    #[test]
    fn empty_histogram_is_an_error() {
        let h = LatencyHistogram::new();
        assert_eq!(
            h.summarize(TrafficClass::CranUp),
            Err(EmptyHistogram(TrafficClass::CranUp))
        );
    }

    #[test]
    fn long_stream_is_conserved() {
        let mut h = LatencyHistogram::new();
        let mut x: u64 = 12345;
        for _ in 0..1_000_000 {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            h.record(sample((x >> 33) % 200));
        }
        assert_eq!(h.count(TrafficClass::BestEffort), 1_000_000);
        assert_eq!(h.total(), 1_000_000);
    }

    #[test]
    fn csv_lists_nonzero_bins() {
        let mut h = LatencyHistogram::new();
        h.add(TrafficClass::CranUp, 0, 3);
        h.add(TrafficClass::BestEffort, 2, 1);
        assert_eq!(
            h.to_csv(),
            "class,latency_uot,count\ncran_up,0,3\nbest_effort,2,1\n"
        );
    }

    #[test]
    fn spread_stats() {
        let s = SpreadStats::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.stddev - 1.290_994_448_7).abs() < 1e-9);
        assert!((s.sem - s.stddev / 2.0).abs() < 1e-12);
    }

    fn hist(values: &[(u8, u8)]) -> LatencyHistogram {
        let mut h = LatencyHistogram::new();
        for &(c, l) in values {
            h.add(TrafficClass::ALL[c as usize % 3], l as u64, 1);
        }
        h
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(
            a in prop::collection::vec((0u8..3, 0u8..50), 0..40),
            b in prop::collection::vec((0u8..3, 0u8..50), 0..40),
            c in prop::collection::vec((0u8..3, 0u8..50), 0..40),
        ) {
            let (ha, hb, hc) = (hist(&a), hist(&b), hist(&c));
            let mut ab = ha.clone(); ab.merge(&hb);
            let mut ba = hb.clone(); ba.merge(&ha);
            let norm = |h: &LatencyHistogram| h.to_csv();
            prop_assert_eq!(norm(&ab), norm(&ba));
            let mut ab_c = ab.clone(); ab_c.merge(&hc);
            let mut bc = hb.clone(); bc.merge(&hc);
            let mut a_bc = ha.clone(); a_bc.merge(&bc);
            prop_assert_eq!(norm(&ab_c), norm(&a_bc));
        }

        #[test]
        fn cdf_is_monotone_and_reaches_one(
            v in prop::collection::vec((0u8..3, 0u8..100), 1..80),
        ) {
            let h = hist(&v);
            for class in TrafficClass::ALL {
                if h.is_empty(class) { continue; }
                let cdf = h.cdf(class);
                prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!((cdf[h.max(class).unwrap() as usize] - 1.0).abs() < 1e-12);
            }
        }
    }
}
