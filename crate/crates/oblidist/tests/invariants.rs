//! Cross-module invariants: obliviousness harness over adversarial inputs,
//! sideband neutrality, expansion properties of the families, recursion
//! structure, and the eigengap-implies-subset-property implication.

use oblidist::compaction::{loose_compact, twofold_compact, CopyScript, MarkKind};
use oblidist::config::{test_family, RunConfig};
use oblidist::distribution::{distribute, make_instance, recursion_depth};
use oblidist::graph::{
    family_cached, verify_disc_exhaustive, verify_disc_spectral, SpectralOptions,
};
use oblidist::mem::{MarkedArray, SimMemory, TraceSummary, Word, F_WORD_MARK};
use oblidist::rng::SplitMix64;

fn distribute_summary(n: usize, wm: &[bool], pm: &[bool]) -> TraceSummary {
    let payloads: Vec<u64> = (0..n as u64).collect();
    let mut mem = make_instance(&payloads, wm, pm, 1024);
    mem.record_digest();
    let arr = MarkedArray::new(0, n).unwrap();
    distribute(&mut mem, &arr, &RunConfig::test(1024).distribution).unwrap();
    mem.take_summary()
}

/// Adversarial + random obliviousness harness for distribution.
#[test]
fn distribution_trace_harness_adversarial_and_random() {
    let n = 512;
    let mut cases: Vec<(Vec<bool>, Vec<bool>)> = vec![
        (vec![false; n], vec![false; n]),
        (vec![true; n], vec![true; n]),
        (
            (0..n).map(|i| i % 2 == 0).collect(),
            (0..n).map(|i| i % 2 == 1).collect(),
        ),
        (
            (0..n).map(|i| i == 3).collect(),
            (0..n).map(|i| i == n - 2).collect(),
        ),
    ];
    let mut rng = SplitMix64::new(7);
    for _ in 0..6 {
        let m = rng.below(n + 1);
        let mut wm = vec![false; n];
        for i in rng.choose(n, m) {
            wm[i] = true;
        }
        let mut pm = vec![false; n];
        for i in rng.choose(n, m) {
            pm[i] = true;
        }
        cases.push((wm, pm));
    }
    let reference = distribute_summary(n, &cases[0].0, &cases[0].1);
    for (wm, pm) in &cases[1..] {
        assert_eq!(distribute_summary(n, wm, pm), reference);
    }
}

/// Marks feed predicates, never addresses: zeroing every sideband yields
/// the same trace as any marked instance.
#[test]
fn sideband_neutrality() {
    let n = 256;
    let mut rng = SplitMix64::new(13);
    let m = 40;
    let mut wm = vec![false; n];
    for i in rng.choose(n, m) {
        wm[i] = true;
    }
    let mut pm = vec![false; n];
    for i in rng.choose(n, m) {
        pm[i] = true;
    }
    let marked = distribute_summary(n, &wm, &pm);
    let zeroed = distribute_summary(n, &vec![false; n], &vec![false; n]);
    assert_eq!(marked, zeroed);
}

/// Obliviousness must also hold for inputs that violate the density
/// preconditions: failure shows in the end state, never in the addresses.
#[test]
fn compaction_trace_identical_even_when_preconditions_violated() {
    let cfg = RunConfig::test(1024).compaction;
    let n = 512;
    let run = |marked: &[usize]| {
        let mut words: Vec<Word> = (0..n).map(|i| Word::real(i as u64)).collect();
        for &i in marked {
            words[i].set(F_WORD_MARK, true);
        }
        let mut mem = SimMemory::from_words(words, 1024);
        mem.record_digest();
        let mut script = CopyScript::new();
        twofold_compact(&mut mem, MarkedArray::new(0, n).unwrap(), &cfg, MarkKind::WordMark, &mut script)
            .unwrap();
        mem.take_summary()
    };
    let ok_instance = run(&[1, 2, 3]);
    let over_density = run(&(0..n).collect::<Vec<_>>());
    assert_eq!(ok_instance, over_density);
}

/// Loose compaction trace is independent of m, including m = 0.
#[test]
fn loose_compaction_trace_independent_of_m() {
    let cfg = RunConfig::test(1024).compaction;
    let n = 1 << 11;
    let mut summaries = Vec::new();
    for m in [0usize, 1, 3, 8] {
        let mut words: Vec<Word> = (0..n).map(|i| Word::real(i as u64)).collect();
        let mut rng = SplitMix64::new(m as u64 + 1);
        for i in rng.choose(n, m) {
            words[i].set(F_WORD_MARK, true);
        }
        let mut mem = SimMemory::from_words(words, 1024);
        mem.record_digest();
        loose_compact(&mut mem, MarkedArray::new(0, n).unwrap(), &cfg, MarkKind::WordMark).unwrap();
        summaries.push(mem.take_summary());
    }
    assert!(summaries.windows(2).all(|w| w[0] == w[1]));
}

/// Expansion behind the survivor argument: sampled left subsets of size
/// s + 1 = n/(2*ell) + 1 have more than n/2 distinct neighbours.
#[test]
fn survivor_sets_have_large_neighbourhoods() {
    let cfg = RunConfig::test(1024).distribution;
    for n in [256usize, 1024] {
        let g = family_cached(&cfg.family, n).unwrap();
        let s = cfg.survivor_budget(n);
        let mut rng = SplitMix64::new(100 + n as u64);
        for _ in 0..50 {
            let subset = rng.choose(n, s + 1);
            let mut hit = vec![false; n];
            let mut count = 0usize;
            for &u in &subset {
                for &v in g.adj(u) {
                    if !hit[v as usize] {
                        hit[v as usize] = true;
                        count += 1;
                    }
                }
            }
            assert!(
                count > n / 2,
                "n={n}: subset of {} has only {count} neighbours",
                s + 1
            );
        }
    }
}

/// A spectral pass at epsilon implies the exhaustive subset-pair property at
/// the same epsilon (the implication direction only).
#[test]
fn spectral_pass_implies_exhaustive_pass() {
    let params = test_family();
    for n in [4usize, 8] {
        let g = family_cached(&params, n).unwrap();
        let cert = verify_disc_spectral(&g, &SpectralOptions::default()).unwrap();
        if cert.passes(params.epsilon) {
            let report = verify_disc_exhaustive(&g, params.epsilon, 10).unwrap();
            assert!(report.holds, "n={n}: spectral pass but exhaustive failure");
        }
    }
    // Also at a synthetic epsilon matching the measured quality.
    let g = family_cached(&params, 8).unwrap();
    let cert = verify_disc_spectral(&g, &SpectralOptions::default()).unwrap();
    let eps = (1.0 / cert.eigengap) * 1.0001;
    let report = verify_disc_exhaustive(&g, eps, 10).unwrap();
    assert!(report.holds);
}

/// The recursion depth is an exact function of (n, base case), independent
/// of the input.
#[test]
fn recursion_depth_is_input_independent() {
    let cfg = RunConfig::test(1024).distribution;
    for k in [7usize, 9, 11] {
        let n = 1 << k;
        let expect = k as u32 - cfg.base_case_n0.ilog2();
        let mut rng = SplitMix64::new(k as u64);
        for m in [0usize, n / 7, n / 2] {
            let payloads: Vec<u64> = (0..n as u64).collect();
            let mut wm = vec![false; n];
            for i in rng.choose(n, m) {
                wm[i] = true;
            }
            let mut pm = vec![false; n];
            for i in rng.choose(n, m) {
                pm[i] = true;
            }
            let mut mem = make_instance(&payloads, &wm, &pm, 1024);
            let arr = MarkedArray::new(0, n).unwrap();
            let depth = recursion_depth(&mut mem, &arr, &cfg).unwrap();
            assert_eq!(depth as u32, expect, "n=2^{k} m={m}");
        }
    }
}
