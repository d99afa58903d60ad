use proptest::prelude::*;
use qmitigate_core::dist::{
    counts_to_probs, hellinger_fidelity, parity_expectation, probs_to_counts, total_variation,
};
use qmitigate_core::filter::{mitigate_counts, rescale_intensity, FilterError};
use qmitigate_core::m3::{mitigate_m3, M3Method, QubitCalibration};
use qmitigate_core::{BitString, Counts, IntensityRange, ProbDist};

/// Counts over a random subset of `2^width` outcomes, every tally ≥ 1.
fn counts_strategy() -> impl Strategy<Value = Counts> {
    (1usize..=6).prop_flat_map(|w| {
        prop::collection::btree_map(0..(1usize << w), 1u64..5000, 1..=(1usize << w).min(40)).prop_map(move |m| {
            Counts::from_tallies(m.into_iter().map(|(i, c)| (BitString::from_index(i, w), c))).unwrap()
        })
    })
}

fn probs_of_width(w: usize) -> impl Strategy<Value = ProbDist> {
    prop::collection::btree_map(0..(1usize << w), 1e-6f64..1.0, 1..=(1usize << w).min(40)).prop_map(move |m| {
        ProbDist::normalized(m.into_iter().map(|(i, v)| (BitString::from_index(i, w), v)).collect()).unwrap()
    })
}

fn probs_strategy() -> impl Strategy<Value = ProbDist> {
    (1usize..=6).prop_flat_map(probs_of_width)
}

fn probs_pair() -> impl Strategy<Value = (ProbDist, ProbDist)> {
    (1usize..=6).prop_flat_map(|w| (probs_of_width(w), probs_of_width(w)))
}

fn range_strategy() -> impl Strategy<Value = IntensityRange> {
    (0.0f64..0.2, 0.8f64..=1.0).prop_map(|(lo, hi)| IntensityRange::new(lo, hi).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn counts_round_trip(counts in counts_strategy()) {
        let back = probs_to_counts(&counts_to_probs(&counts).unwrap(), counts.shots()).unwrap();
        prop_assert_eq!(back.shots(), counts.shots());
        for (k, n) in counts.iter() {
            prop_assert_eq!(back.get(k), n);
        }
    }

    #[test]
    fn probs_to_counts_sums_to_shots(p in probs_strategy(), shots in 1u64..1_000_000) {
        let c = probs_to_counts(&p, shots).unwrap();
        prop_assert_eq!(c.iter().map(|(_, n)| n).sum::<u64>(), shots);
        prop_assert_eq!(c.shots(), shots);
    }

    #[test]
    fn hellinger_symmetric_and_identity((p, q) in probs_pair()) {
        let (pq, qp) = (hellinger_fidelity(&p, &q), hellinger_fidelity(&q, &p));
        prop_assert!((pq - qp).abs() < 1e-12);
        prop_assert!((hellinger_fidelity(&p, &p) - 1.0).abs() < 1e-12);
        if total_variation(&p, &q) > 1e-6 {
            prop_assert!(pq < 1.0 - 1e-12);
        }
    }

    #[test]
    fn bitstring_matches_its_label(a in "[01]{1,128}", b in "[01]{1,128}") {
        let (x, y): (BitString, BitString) = (a.parse().unwrap(), b.parse().unwrap());
        prop_assert_eq!(x.to_string(), a.clone());
        prop_assert_eq!(x.len(), a.len());
        prop_assert_eq!(x.cmp(&y), a.cmp(&b));
        prop_assert_eq!(x == y, a == b);
        prop_assert_eq!(x.count_ones(), a.matches('1').count());
    }

    #[test]
    fn zero_mask_parity_is_one(p in probs_strategy()) {
        let mask = BitString::zeros(p.width());
        prop_assert!((parity_expectation(&p, &mask).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filter_invariants(counts in counts_strategy(), range in range_strategy()) {
        let input = counts_to_probs(&counts).unwrap();
        let report = match mitigate_counts(&counts, range) {
            Ok(r) => r,
            Err(e) => {
                let annihilated = matches!(e, FilterError::Annihilated { .. });
                prop_assert!(annihilated);
                prop_assert!(input.iter().all(|(_, v)| v <= range.low()));
                return Ok(());
            }
        };
        let out = &report.output;
        // argmax and order preservation
        let top = input.argmax();
        let max_out = out.iter().map(|(_, v)| v).fold(0.0, f64::max);
        prop_assert_eq!(out.get(top), max_out);
        for (a, pa) in input.iter() {
            for (b, pb) in input.iter() {
                if pa <= pb {
                    prop_assert!(out.get(a) <= out.get(b));
                    prop_assert!(report.rescaled[a] <= report.rescaled[b]);
                }
            }
        }
        // counts are valid and the support never grows
        prop_assert_eq!(report.counts.iter().map(|(_, n)| n).sum::<u64>(), counts.shots());
        for (k, n) in report.counts.iter() {
            prop_assert!(n == 0 || counts.get(k) > 0);
        }
        // zeroed list is exactly the zero intensities
        let zeroed: Vec<_> = report.rescaled.iter().filter(|(_, v)| **v == 0.0).map(|(k, _)| *k).collect();
        prop_assert_eq!(&report.zeroed, &zeroed);
    }

    #[test]
    fn identity_range_keeps_counts(counts in counts_strategy()) {
        let report = mitigate_counts(&counts, IntensityRange::identity()).unwrap();
        for (k, n) in counts.iter() {
            prop_assert_eq!(report.counts.get(k), n);
        }
        let rescaled = rescale_intensity(&report.input, IntensityRange::identity());
        prop_assert_eq!(rescaled, report.input.entries().clone());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn m3_direct_and_iterative_agree(
        counts in counts_strategy(),
        rates in prop::collection::vec((0.0f64..0.15, 0.0f64..0.15), 6),
    ) {
        let cal: Vec<QubitCalibration> =
            rates[..counts.width()].iter().map(|&(a, b)| QubitCalibration::new(a, b).unwrap()).collect();
        let direct = mitigate_m3(&counts, &cal, M3Method::Direct).unwrap();
        let iterative = mitigate_m3(&counts, &cal, M3Method::Iterative).unwrap();
        for (k, v) in direct.iter() {
            prop_assert!((v - iterative.get(k)).abs() < 1e-6, "{}: {} vs {}", k, v, iterative.get(k));
        }
    }
}

#[test]
fn ghz_filter_zeroed_set_is_stable_under_reapplication() {
    let counts = Counts::from_tallies([
        ("000", 898),
        ("111", 1032),
        ("100", 33),
        ("110", 12),
        ("010", 25),
        ("011", 31),
        ("001", 15),
        ("101", 2),
    ])
    .unwrap();
    let range = IntensityRange::percent(3.0).unwrap();
    let first = mitigate_counts(&counts, range).unwrap();
    let second = mitigate_counts(&first.counts, range).unwrap();
    let survivors = |r: &qmitigate_core::FilterReport| {
        r.rescaled.iter().filter(|(_, v)| **v > 0.0).map(|(k, _)| *k).collect::<Vec<_>>()
    };
    assert_eq!(survivors(&first), survivors(&second));
    // The first pass already dropped the zeroed outcomes, so nothing new is removed.
    assert_eq!(first.zeroed.len(), 6);
    assert!(second.zeroed.iter().all(|k| first.zeroed.contains(k)));
}
