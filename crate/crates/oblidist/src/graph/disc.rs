//! Exhaustive verification of the pseudorandomness predicate: for every pair
//! of subsets (U, V) of the two sides,
//!
//! ```text
//! | e(U,V) - (d/N) |U| |V| |  <=  epsilon * d * sqrt(|U| |V|)
//! ```
//!
//! Both subset loops walk in Gray-code order so each step updates the edge
//! count incrementally: O(d) per left flip, O(1) per right flip, for
//! 4^N total pair checks.

use super::BipartiteMultigraph;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The maximally violating (or, if none violate, tightest) subset pair.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WorstPair {
    pub u_mask: u64,
    pub v_mask: u64,
    pub e_count: u64,
    /// epsilon * d * sqrt(|U||V|) at the tested epsilon.
    pub bound: f64,
    /// |e(U,V) - (d/N)|U||V||.
    pub deviation: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiscReport {
    pub epsilon_tested: f64,
    pub holds: bool,
    pub worst_pair: Option<WorstPair>,
    pub pairs_checked: u64,
}

/// Check the predicate over all 2^N x 2^N subset pairs. `cap` bounds N
/// (default 10, ~1M pairs); larger graphs must use the spectral route.
pub fn verify_disc_exhaustive(
    g: &BipartiteMultigraph,
    epsilon: f64,
    cap: usize,
) -> Result<DiscReport> {
    let n = g.n_per_side();
    if n > cap {
        return Err(Error::ExhaustiveCap { n, cap });
    }
    assert!(n <= 20, "exhaustive check is 4^N; refusing N > 20");
    let d = g.degree() as f64;
    let nf = n as f64;

    // hits[v] = e(U, {v}) for the current U.
    let mut hits = vec![0i64; n];
    let mut u_mask: u64 = 0;
    let mut worst: Option<(f64, WorstPair)> = None;
    let mut pairs: u64 = 0;

    let total = 1u64 << n;
    for u_code in 0..total {
        let u_gray = u_code ^ (u_code >> 1);
        if u_code > 0 {
            // Which bit flipped between consecutive Gray codes.
            let prev = (u_code - 1) ^ ((u_code - 1) >> 1);
            let bit = (u_gray ^ prev).trailing_zeros() as usize;
            let went_in = u_gray >> bit & 1 == 1;
            for &v in g.adj(bit) {
                hits[v as usize] += if went_in { 1 } else { -1 };
            }
            u_mask = u_gray;
        }
        let u_size = u_mask.count_ones() as f64;

        let mut e: i64 = 0;
        let mut v_mask: u64 = 0;
        for v_code in 0..total {
            if v_code > 0 {
                let v_gray = v_code ^ (v_code >> 1);
                let prev = (v_code - 1) ^ ((v_code - 1) >> 1);
                let bit = (v_gray ^ prev).trailing_zeros() as usize;
                let went_in = v_gray >> bit & 1 == 1;
                e += if went_in { hits[bit] } else { -hits[bit] };
                v_mask = v_gray;
            }
            pairs += 1;
            let v_size = v_mask.count_ones() as f64;
            if u_size == 0.0 || v_size == 0.0 {
                continue;
            }
            let expected = d / nf * u_size * v_size;
            let deviation = (e as f64 - expected).abs();
            let scale = d * (u_size * v_size).sqrt();
            let ratio = deviation / scale;
            if worst.as_ref().map(|(r, _)| ratio > *r).unwrap_or(true) {
                worst = Some((
                    ratio,
                    WorstPair {
                        u_mask,
                        v_mask,
                        e_count: e as u64,
                        bound: epsilon * scale,
                        deviation,
                    },
                ));
            }
        }
    }

    let holds = worst.as_ref().map(|(r, _)| *r <= epsilon + 1e-12).unwrap_or(true);
    Ok(DiscReport {
        epsilon_tested: epsilon,
        holds,
        worst_pair: worst.map(|(_, w)| w),
        pairs_checked: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_base, e_count, BaseId, VertexSet};

    #[test]
    fn complete_graph_holds_for_epsilon_zero() {
        // e(U,V) = |U||V| = (d/N)|U||V| exactly: zero deviation everywhere.
        let g = build_base(4, &BaseId::Complete).unwrap();
        let report = verify_disc_exhaustive(&g, 0.0, 10).unwrap();
        assert!(report.holds);
        assert_eq!(report.pairs_checked, 256);
        assert!(report.worst_pair.unwrap().deviation < 1e-12);
    }

    #[test]
    fn perfect_matching_fails_at_epsilon_point_one() {
        // d=1, N=4 identity matching. A matched singleton pair has
        // e=1 vs expected 1/4: deviation 0.75 > 0.1 * 1 * 1.
        let adj = vec![0u32, 1, 2, 3];
        let g = BipartiteMultigraph::from_adjacency(4, 1, adj).unwrap();
        let report = verify_disc_exhaustive(&g, 0.1, 10).unwrap();
        assert!(!report.holds);
        let w = report.worst_pair.unwrap();
        assert!(w.deviation >= 0.75 - 1e-12);
    }

    #[test]
    fn worst_pair_agrees_with_naive_recount() {
        let g = build_base(8, &BaseId::SeededPermSum { degree: 2, seed: 31 }).unwrap();
        let report = verify_disc_exhaustive(&g, 0.5, 10).unwrap();
        let w = report.worst_pair.unwrap();
        let u_set = VertexSet::from_indices(
            8,
            &(0..8).filter(|i| w.u_mask >> i & 1 == 1).collect::<Vec<_>>(),
        );
        let v_set = VertexSet::from_indices(
            8,
            &(0..8).filter(|i| w.v_mask >> i & 1 == 1).collect::<Vec<_>>(),
        );
        assert_eq!(e_count(&g, &u_set, &v_set), w.e_count);
        let expected =
            g.degree() as f64 / 8.0 * u_set.count() as f64 * v_set.count() as f64;
        assert!((w.deviation - (w.e_count as f64 - expected).abs()).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let g = build_base(16, &BaseId::Complete).unwrap();
        assert!(matches!(
            verify_disc_exhaustive(&g, 0.5, 10),
            Err(Error::ExhaustiveCap { n: 16, cap: 10 })
        ));
    }
}
