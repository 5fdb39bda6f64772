//! Property tests over generated instances: serialization identity,
//! matching validity on protocol outputs, and the compaction round trip.

use oblidist::compaction::{compact_small, sweep_back, MarkKind};
use oblidist::config::{test_family_matching, RunConfig};
use oblidist::graph::{build_base, family_cached, BaseId};
use oblidist::matching::{find_matching_active, verify_matching, MarkedVertexSet};
use oblidist::mem::{MarkedArray, SimMemory, Word, F_DUMMY, F_POS_MARK, F_WORD_MARK};
use oblidist::rng::SplitMix64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Graph files reproduce adjacency exactly.
    #[test]
    fn graph_serialization_round_trip(size_pow in 2u32..7, degree in 2usize..6, seed in any::<u64>()) {
        let n = 1usize << size_pow;
        prop_assume!(n >= 2 * degree);
        let g = build_base(n, &BaseId::SeededPermSum { degree: degree as u32, seed }).unwrap();
        let dir = std::env::temp_dir().join(format!("oblidist-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("g-{n}-{degree}-{seed}.obxg"));
        oblidist::io::write_graph(&path, &g).unwrap();
        let back = oblidist::io::read_graph(&path).unwrap();
        prop_assert_eq!(g, back);
        let _ = std::fs::remove_file(&path);
    }

    /// Array files reproduce payloads and sideband marks.
    #[test]
    fn array_serialization_round_trip(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = 32;
        let words: Vec<Word> = (0..n).map(|i| {
            let mut w = Word::real(rng.next_u64() >> 1);
            w.set(F_WORD_MARK, rng.next_u64() % 2 == 0);
            w.set(F_POS_MARK, rng.next_u64() % 3 == 0);
            if rng.next_u64() % 5 == 0 {
                w = Word::dummy();
                w.set(F_POS_MARK, true);
            }
            w.origin = i as u32;
            w
        }).collect();
        let mem = SimMemory::from_words(words.clone(), 64);
        let dir = std::env::temp_dir().join(format!("oblidist-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("a-{seed}.obxa"));
        oblidist::io::write_array(&path, &mem).unwrap();
        let back = oblidist::io::read_array(&path).unwrap();
        for i in 0..n {
            prop_assert_eq!(back.peek(i).payload, words[i].payload);
            prop_assert_eq!(back.peek(i).is(F_WORD_MARK), words[i].is(F_WORD_MARK));
            prop_assert_eq!(back.peek(i).is(F_POS_MARK), words[i].is(F_POS_MARK));
            prop_assert_eq!(back.peek(i).is(F_DUMMY), words[i].is(F_DUMMY));
        }
        let _ = std::fs::remove_file(&path);
    }

    /// The protocol's output always satisfies the (B, B/4) property.
    #[test]
    fn protocol_outputs_verify(n_pow in 6u32..10, seed in any::<u64>(), density in 1usize..32) {
        let n = 1usize << n_pow;
        let g = family_cached(&test_family_matching(), n).unwrap();
        let mut rng = SplitMix64::new(seed);
        let k = (n / 32 * density / 31).max(1).min(n / 32);
        let marked = MarkedVertexSet::from_indices(n, &rng.choose(n, k));
        let run = find_matching_active(&g, &marked, 16).unwrap();
        prop_assert!(verify_matching(&g, &marked, 16, &run.matching));
        prop_assert!(run.matching.right_load.iter().all(|&l| l <= 4));
    }

    /// Compaction preserves the payload multiset, confines marked words to
    /// the first half, and reverse replay restores the input exactly.
    #[test]
    fn compaction_round_trip(seed in any::<u64>()) {
        let cfg = RunConfig::test(1024).compaction;
        let n = 256;
        let mut rng = SplitMix64::new(seed);
        let budget = (n as f64 * cfg.word_density()) as usize;
        let k = rng.below(budget + 1);
        let mut words: Vec<Word> = (0..n).map(|i| Word::real(i as u64)).collect();
        for i in rng.choose(n, k) {
            words[i].set(F_WORD_MARK, true);
        }
        let mut mem = SimMemory::from_words(words.clone(), 1024);
        let out = compact_small(&mut mem, MarkedArray::new(0, n).unwrap(), &cfg, MarkKind::WordMark).unwrap();
        prop_assert!(out.ok);
        let mut now: Vec<u64> = (0..n).map(|i| mem.peek(i).payload).collect();
        now.sort_unstable();
        let want: Vec<u64> = (0..n as u64).collect();
        prop_assert_eq!(now, want);
        for i in n / 2..n {
            prop_assert!(!mem.peek(i).word_marked());
        }
        sweep_back(&mut mem, &out.script);
        prop_assert_eq!(&mem.words()[..n], &words[..]);
    }
}
