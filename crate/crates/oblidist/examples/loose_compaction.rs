//! Loose compaction: two-fold passes down a prefix ladder, padded with
//! pretend passes so the trace length and addresses are independent of the
//! marked count m.
//!
//!     cargo run --release --example loose_compaction

use oblidist::compaction::{loose_compact, MarkKind};
use oblidist::config::RunConfig;
use oblidist::mem::{MarkedArray, SimMemory, Word, F_WORD_MARK};
use oblidist::rng::SplitMix64;

fn main() {
    let cfg = RunConfig::test(1024).compaction;
    let n = 1 << 12;
    let mut rng = SplitMix64::new(3);
    let mut summaries = Vec::new();
    for m in [0usize, 1, 4, 16] {
        let mut words: Vec<Word> = (0..n).map(|i| Word::real(i as u64)).collect();
        for i in rng.choose(n, m) {
            words[i].set(F_WORD_MARK, true);
        }
        let mut mem = SimMemory::from_words(words, 1024);
        mem.record_digest();
        loose_compact(&mut mem, MarkedArray::new(0, n).unwrap(), &cfg, MarkKind::WordMark).unwrap();
        let summary = mem.take_summary();
        let landing = (0..n).filter(|&i| mem.peek(i).word_marked()).max();
        println!(
            "m={m:<3} trace len {} digest {:016x} last marked position {:?} (budget 2*m*ell = {})",
            summary.len,
            summary.digest,
            landing,
            2 * m * cfg.ell as usize
        );
        summaries.push(summary);
    }
    assert!(summaries.windows(2).all(|w| w[0] == w[1]));
    println!("traces identical across all m");
}
