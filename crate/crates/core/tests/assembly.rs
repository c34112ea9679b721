use proptest::prelude::*;

use roml::diagnostics::heavy_positions;
use roml::disjointness::Kind;
use roml::intervals::{cyclic_draw_stats, CyclicInterval, GapClass, SegmentKind};
use roml::moments::{exact_fk, frequency_vector};
use roml::protocol::{assemble_from_seed, count_messages, message_bound, Provenance};
use roml::Params;

fn small() -> Params {
    Params::derive(10_000, 3, 0.5, 0.1, 0.1, 2).unwrap()
}

fn brute_cyclic(starts: &[u64], w: u64, n: u64) -> (bool, u64) {
    let arcs: Vec<CyclicInterval> = starts.iter().map(|&a| CyclicInterval::new(a, w, n).unwrap()).collect();
    let triple = (1..=n).any(|j| arcs.iter().filter(|a| a.contains(j)).count() >= 3);
    let mut pairs = 0;
    for i in 0..arcs.len() {
        for k in i + 1..arcs.len() {
            if (1..=n).any(|j| arcs[i].contains(j) && arcs[k].contains(j)) {
                pairs += 1;
            }
        }
    }
    (triple, pairs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assemblies_respect_structure(seed in any::<u64>(), yes in any::<bool>()) {
        let params = small();
        let kind = if yes { Kind::Yes } else { Kind::No };
        let Ok(s) = assemble_from_seed(&params, kind, seed).unwrap() else { return Ok(()) };
        let a = &s.assembly;
        prop_assert_eq!(a.elements.len() as u64, params.n);
        prop_assert!(a.writer.iter().all(|&p| p >= 1 && p as u64 <= params.t));
        prop_assert!(count_messages(&a.writer) <= message_bound(&params, s.randomness.overlapping_pairs));

        let stream = a.stream().unwrap();
        let fk = exact_fk(&stream, params.k).unwrap();
        match kind {
            Kind::No => prop_assert_eq!(fk, u128::from(params.n)),
            Kind::Yes => {
                let witness = s.instance.witness.unwrap();
                let heavy = heavy_positions(a, witness, &s.randomness.sigma);
                let target = s.randomness.sigma.apply(u64::from(witness));
                prop_assert_eq!(heavy.len() as u64, frequency_vector(&stream).count(target));
                prop_assert!(heavy.windows(2).all(|p| p[0] < p[1]));
            }
        }
        // every set element sits in its own player's interval at its rank
        for (j, p) in a.provenance.iter().enumerate() {
            if let Provenance::SetElement { player, rank } = *p {
                let iv = s.randomness.intervals.player(player as usize);
                prop_assert_eq!(iv.rank(j as u64 + 1).unwrap(), u64::from(rank));
            }
        }
    }

    #[test]
    fn cyclic_stats_match_brute_force(
        n in 10u64..120,
        w in 1u64..10,
        starts in proptest::collection::vec(1u64..1000, 0..15),
    ) {
        prop_assume!(w <= n);
        let starts: Vec<u64> = starts.into_iter().map(|s| (s - 1) % n + 1).collect();
        let fast = cyclic_draw_stats(&starts, w, n);
        let (triple, pairs) = brute_cyclic(&starts, w, n);
        prop_assert_eq!(fast.triple_exists, triple);
        prop_assert_eq!(fast.overlapping_pairs, pairs);
    }
}

#[test]
fn doubled_gaps_match_overlaps() {
    let params = small();
    let mut seen = 0;
    for seed in 0..200 {
        let Ok(s) = assemble_from_seed(&params, Kind::Yes, seed).unwrap() else { continue };
        let d = roml::intervals::decompose(&s.randomness.intervals).unwrap();
        let doubled = d
            .segments
            .iter()
            .filter(|seg| matches!(seg.kind, SegmentKind::Gap { class: GapClass::Doubled, .. }))
            .count() as u64;
        assert_eq!(doubled, s.randomness.overlapping_pairs, "seed {seed}");
        seen += 1;
    }
    assert!(seen > 100);
}
