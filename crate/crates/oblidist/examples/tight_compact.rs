//! Tight compaction two ways: the linear-access distribution route and the
//! n lg^2 n sorting-network baseline, with their access counts side by side.
//!
//!     cargo run --release --example tight_compact

use oblidist::baseline::{butterfly_tight_compact, stable_partition_marked};
use oblidist::config::RunConfig;
use oblidist::distribution::tight_compact;
use oblidist::mem::{MarkedArray, SimMemory, Word, F_WORD_MARK};
use oblidist::rng::SplitMix64;

fn instance(n: usize, m: usize, seed: u64) -> SimMemory {
    let mut rng = SplitMix64::new(seed);
    let mut words: Vec<Word> = (0..n).map(|i| Word::real(7_000 + i as u64)).collect();
    for i in rng.choose(n, m) {
        words[i].set(F_WORD_MARK, true);
    }
    SimMemory::from_words(words, 1024)
}

fn main() {
    let cfg = RunConfig::test(1024).distribution;
    let n = 1 << 12;
    let m = n / 5;
    let arr = MarkedArray::new(0, n).unwrap();

    let mut a = instance(n, m, 5);
    let oracle = stable_partition_marked(a.words());
    a.record_counting();
    tight_compact(&mut a, &arr, &cfg).unwrap();
    let acc_dist = a.access_count();
    let mut got: Vec<u64> = (0..m).map(|i| a.peek(i).payload).collect();
    got.sort_unstable();
    let mut want = oracle[..m].to_vec();
    want.sort_unstable();
    assert_eq!(got, want);
    println!("distribution route: {acc_dist} accesses; first {m} positions hold the marked set");

    let mut b = instance(n, m, 5);
    b.record_counting();
    butterfly_tight_compact(&mut b, &arr);
    let acc_net = b.access_count();
    assert!((0..n).all(|i| b.peek(i).word_marked() == (i < m)));
    println!("sorting network:    {acc_net} accesses");
    println!(
        "constant-factor picture at n=2^12: network/distribution = {:.3}",
        acc_net as f64 / acc_dist as f64
    );
}
