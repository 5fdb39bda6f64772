//! Access-count scaling: the distribution route grows linearly, the sorting
//! network carries its lg^2 factor.
//!
//!     cargo run --release --example bench_scaling

use oblidist::baseline::{bench_scaling, fit_exponent, Algo};
use oblidist::config::RunConfig;

fn main() {
    let cfg = RunConfig::test(1024);
    let sizes: Vec<usize> = (10..=14).map(|k| 1usize << k).collect();
    for algo in [Algo::Distribute, Algo::Bitonic] {
        let records = bench_scaling(algo, &sizes, &cfg).unwrap();
        println!("{}:", algo.name());
        for r in &records {
            println!(
                "  n=2^{:<2} accesses {:>12}  ({:>9.1} per word, {:.3}s)",
                r.n.ilog2(),
                r.accesses,
                r.accesses as f64 / r.n as f64,
                r.seconds
            );
        }
        println!("  fitted exponent {:.4}", fit_exponent(&records));
    }
}
