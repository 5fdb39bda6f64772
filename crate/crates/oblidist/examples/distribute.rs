//! Full oblivious distribution: red/blue pair scans over an expander, loose
//! compaction of the survivors, recursion on the half-size sub-instance,
//! and failure-sweeping back to the original positions.
//!
//!     cargo run --release --example distribute

use oblidist::config::RunConfig;
use oblidist::distribution::{check_distributed, classify, distribute, make_instance, ColorTag};
use oblidist::mem::MarkedArray;
use oblidist::rng::SplitMix64;

fn main() {
    let cfg = RunConfig::test(1024).distribution;
    let n = 1 << 12;
    let m = n / 3;
    let mut rng = SplitMix64::new(99);

    let payloads: Vec<u64> = (0..n).map(|i| 10_000 + i as u64).collect();
    let mut word_marks = vec![false; n];
    for i in rng.choose(n, m) {
        word_marks[i] = true;
    }
    let mut pos_marks = vec![false; n];
    for i in rng.choose(n, m) {
        pos_marks[i] = true;
    }
    let mut mem = make_instance(&payloads, &word_marks, &pos_marks, 1024);
    let arr = MarkedArray::new(0, n).unwrap();

    let tags = classify(&mut mem, &arr);
    let reds = tags.iter().filter(|&&t| t == ColorTag::Red).count();
    println!("n={n}, m={m}: {reds} red / {reds} blue mismatches before distribution");

    let mut multiset: Vec<(u64, bool)> =
        payloads.iter().zip(&word_marks).map(|(&p, &w)| (p, w)).collect();
    distribute(&mut mem, &arr, &cfg).unwrap();

    let ok = check_distributed(&mem, &arr, &pos_marks, &mut multiset);
    println!("every marked word at a marked position, multiset preserved: {ok}");
    assert!(ok);
}
