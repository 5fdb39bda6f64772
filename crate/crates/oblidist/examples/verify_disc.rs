//! Verify the pseudorandomness predicate two ways: exhaustively over all
//! subset pairs (small graphs) and spectrally through the eigengap.
//!
//!     cargo run --release --example verify_disc

use oblidist::graph::{
    build_base, family_cached, verify_disc_exhaustive, verify_disc_spectral, BaseId,
    BipartiteMultigraph, ExpanderParams, SpectralOptions,
};

fn main() {
    // Complete bipartite graph: edge counts match expectation exactly,
    // so it satisfies the predicate at epsilon = 0.
    let k = build_base(8, &BaseId::Complete).unwrap();
    let report = verify_disc_exhaustive(&k, 0.0, 10).unwrap();
    println!(
        "K(8,8) at eps=0: holds={} over {} subset pairs",
        report.holds, report.pairs_checked
    );

    // A perfect matching is the opposite extreme: a matched singleton pair
    // deviates by 1 - 1/N, far above any small epsilon.
    let pm = BipartiteMultigraph::from_adjacency(4, 1, vec![0, 1, 2, 3]).unwrap();
    let report = verify_disc_exhaustive(&pm, 0.1, 10).unwrap();
    let w = report.worst_pair.unwrap();
    println!(
        "perfect matching at eps=0.1: holds={} worst deviation {:.3} (bound {:.3})",
        report.holds, w.deviation, w.bound
    );

    // Family members certify spectrally; small ones can be cross-checked
    // exhaustively (the eigengap route implies the subset-pair property).
    let params = ExpanderParams::new(0.55, BaseId::SeededPermSum { degree: 16, seed: 7 }, 1);
    let g = family_cached(&params, 8).unwrap();
    let cert = verify_disc_spectral(&g, &SpectralOptions::default()).unwrap();
    let exh = verify_disc_exhaustive(&g, 0.55, 10).unwrap();
    println!(
        "family n=8: eigengap {:.3} spectral-pass={} exhaustive-holds={}",
        cert.eigengap,
        cert.passes(0.55),
        exh.holds
    );
}
