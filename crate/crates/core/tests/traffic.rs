use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slotring::traffic::{bbu_reply, BeArrivalSpec, BeGenerator, RrhSpec};

fn generator(spec: BeArrivalSpec, seed: u64) -> BeGenerator {
    BeGenerator::new(spec, ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn offered_load_matches_the_target() {
    for (load, p_high) in [(0.08, 0.05), (0.2, 0.05), (0.03, 0.01), (0.4, 0.1)] {
        let spec = BeArrivalSpec::calibrated(load, p_high, 12_500, 100);
        let mut g = generator(spec, 11);
        let horizon = 1_000_000u64;
        let mut packets = 0u64;
        for t in 0..horizon {
            packets += g.step(t).is_some() as u64;
        }
        let offered = g.drawn_bytes() as f64 / (horizon as f64 * 12_500.0);
        assert!(
            (offered - load).abs() / load < 0.02,
            "{load}: offered {offered}"
        );
        // Timeouts ship partial packets, so there are at least as many packets as full ones.
        assert!(packets as f64 >= g.shipped_bytes() as f64 / 12_500.0);
    }
}

#[test]
fn no_load_no_packets() {
    let mut g = generator(BeArrivalSpec::calibrated(0.0, 0.05, 12_500, 100), 1);
    assert!((0..10_000).all(|t| g.step(t).is_none()));
}

#[test]
fn a_lone_low_rate_ships_on_timeout() {
    let spec = BeArrivalSpec {
        p_high: 0.0,
        q_high: 0,
        q_low: 10,
        container_bytes: 12_500,
        max_wait: 50,
    };
    let mut g = generator(spec, 1);
    let ships: Vec<(u64, u64)> = (0..200).filter_map(|t| g.step(t).map(|s| (t, s))).collect();
    assert_eq!(ships[0], (50, 510));
    assert_eq!(ships[1], (101, 510));
}

proptest! {
    #[test]
    fn bytes_are_conserved_and_packets_bounded(
        load in 0.0f64..0.9,
        p_high in 0.0f64..0.3,
        max_wait in 1u64..300,
        seed in any::<u64>(),
    ) {
        let spec = BeArrivalSpec::calibrated(load, p_high, 1000, max_wait);
        let mut g = generator(spec, seed);
        let mut shipped = 0;
        for t in 0..5_000 {
            if let Some(size) = g.step(t) {
                prop_assert!(size > 0 && size <= 1000);
                shipped += size;
            }
        }
        prop_assert_eq!(shipped, g.shipped_bytes());
        prop_assert_eq!(g.drawn_bytes(), shipped + g.buffered_bytes());
    }

    #[test]
    fn rrh_emits_et_over_f_per_period(
        f in 1u64..12,
        slots in 1u64..20,
        extra in 0u64..500,
        offset in 0u64..2000,
    ) {
        let et = f * slots;
        let period = et + extra;
        let rrh = RrhSpec { rrh_id: 3, node: 0, offset: offset % period, emission_time: et, acceleration: f, period };
        for q in 0..3 {
            let n = (q * period..(q + 1) * period).filter(|&t| rrh.emits_at(t)).count() as u64;
            prop_assert_eq!(n, et / f);
        }
        prop_assert!(rrh.emits_at(period + offset % period));
    }
}

#[test]
fn downlink_answers_one_uot_after_the_read() {
    let p = bbu_reply(4, 17);
    assert_eq!((p.source_id, p.enqueue_time), (4, 18));
}
