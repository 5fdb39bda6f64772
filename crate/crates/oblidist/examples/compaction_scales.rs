//! Two-fold compaction at its three scales: word atoms with the compressed
//! matching, subarray atoms at the medium scale, and the general driver
//! with full-scan matching.
//!
//!     cargo run --release --example compaction_scales

use oblidist::compaction::{compact_general, compact_medium, compact_small, MarkKind};
use oblidist::config::RunConfig;
use oblidist::mem::{MarkedArray, SimMemory, Word, F_WORD_MARK};
use oblidist::rng::SplitMix64;

fn instance(n: usize, marked: &[usize], bits: u32) -> SimMemory {
    let mut words: Vec<Word> = (0..n).map(|i| Word::real(i as u64)).collect();
    for &i in marked {
        words[i].set(F_WORD_MARK, true);
    }
    SimMemory::from_words(words, bits)
}

fn prefix_ok(mem: &SimMemory, n: usize) -> bool {
    (0..n).all(|i| !mem.peek(i).word_marked() || i < n / 2)
}

fn main() {
    let mut rng = SplitMix64::new(11);

    let cfg = RunConfig::test(1024).compaction;
    let n = 512;
    let m = (n as f64 * cfg.word_density()) as usize;
    let mut mem = instance(n, &rng.choose(n, m), 1024);
    let out = compact_small(&mut mem, MarkedArray::new(0, n).unwrap(), &cfg, MarkKind::WordMark)
        .unwrap();
    println!(
        "small   n={n:<6} m={m:<4} ok={} marked-in-first-half={} script records {}",
        out.ok,
        prefix_ok(&mem, n),
        out.script.record_count()
    );

    let n = 4096;
    let m = (n as f64 * cfg.medium_density()) as usize;
    let mut mem = instance(n, &rng.choose(n, m), 1024);
    let out = compact_medium(&mut mem, MarkedArray::new(0, n).unwrap(), &cfg, MarkKind::WordMark)
        .unwrap();
    println!(
        "medium  n={n:<6} m={m:<4} ok={} marked-in-first-half={}",
        out.ok,
        prefix_ok(&mem, n)
    );

    let cfg = RunConfig::test(256).compaction;
    let n = 1 << 14;
    let m = (n as f64 * cfg.general_density()) as usize;
    let mut mem = instance(n, &rng.choose(n, m), 256);
    let out = compact_general(&mut mem, MarkedArray::new(0, n).unwrap(), &cfg, MarkKind::WordMark)
        .unwrap();
    println!(
        "general n={n:<6} m={m:<4} ok={} marked-in-first-half={}",
        out.ok,
        prefix_ok(&mem, n)
    );
}
