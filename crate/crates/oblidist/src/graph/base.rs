//! Pluggable base constructions. The family machinery only needs a
//! deterministic, linear-time, d-regular bipartite multigraph per supported
//! size; which construction backs it is a configuration choice.

use super::BipartiteMultigraph;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Identifier of a base construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseId {
    /// Complete bipartite graph K_{N,N}; degree N, second singular value 0.
    Complete,
    /// Complete bipartite multigraph with uniform multiplicity `degree / N`.
    /// Supports sizes dividing `degree`; second singular value 0.
    CompleteMulti { degree: u32 },
    /// 8-regular affine construction on Z_m x Z_m (size m^2): biadjacency
    /// M + M^T where M sums four affine permutations. Second eigenvalue
    /// modulus at most 5*sqrt(2).
    Affine,
    /// Sum of `degree` seeded permutations, locally repaired so every left
    /// vertex has `degree` distinct targets (multiplicity 1). At sizes not
    /// exceeding the degree it degrades to the uniform complete multigraph.
    /// Quality is certified spectrally after building.
    SeededPermSum { degree: u32, seed: u64 },
}

impl BaseId {
    /// Degree of the base graph (before boosting/padding).
    pub fn degree(&self) -> usize {
        match self {
            BaseId::Complete => 0, // size-dependent; resolved at build time
            BaseId::CompleteMulti { degree } => *degree as usize,
            BaseId::Affine => 8,
            BaseId::SeededPermSum { degree, .. } => *degree as usize,
        }
    }

    pub fn supports(&self, size: usize) -> bool {
        match self {
            BaseId::Complete => size >= 2,
            BaseId::CompleteMulti { degree } => {
                size >= 2 && *degree as usize % size == 0
            }
            BaseId::Affine => {
                let m = (size as f64).sqrt().round() as usize;
                size >= 4 && m * m == size
            }
            BaseId::SeededPermSum { degree, .. } => {
                let d = *degree as usize;
                // Needs headroom for collision repair above d, exact division
                // for the complete-multigraph fallback below it.
                size >= 2 && d >= 2 && (size >= 2 * d || (size <= d && d % size == 0))
            }
        }
    }
}

impl fmt::Display for BaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseId::Complete => write!(f, "complete"),
            BaseId::CompleteMulti { degree } => write!(f, "complete-multi:{degree}"),
            BaseId::Affine => write!(f, "affine"),
            BaseId::SeededPermSum { degree, seed } => write!(f, "perm-sum:{degree}:{seed}"),
        }
    }
}

impl FromStr for BaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["complete"] => Ok(BaseId::Complete),
            ["complete-multi", d] => Ok(BaseId::CompleteMulti {
                degree: d.parse().map_err(|_| Error::UnknownBase(s.into()))?,
            }),
            ["affine"] => Ok(BaseId::Affine),
            ["perm-sum", d, seed] | ["seeded-permutation-sum", d, seed] => {
                Ok(BaseId::SeededPermSum {
                    degree: d.parse().map_err(|_| Error::UnknownBase(s.into()))?,
                    seed: seed.parse().map_err(|_| Error::UnknownBase(s.into()))?,
                })
            }
            _ => Err(Error::UnknownBase(s.into())),
        }
    }
}

/// Build `base_id` at `size`; returns the graph and an operation tally.
pub fn build(size: usize, base_id: &BaseId) -> Result<(BipartiteMultigraph, u64)> {
    if size < 2 {
        return Err(Error::UnsupportedSize {
            base: base_id.to_string(),
            size,
            reason: "size must be at least 2".into(),
        });
    }
    match base_id {
        BaseId::Complete => complete(size),
        BaseId::CompleteMulti { degree } => complete_multi(size, *degree as usize, base_id),
        BaseId::Affine => affine(size, base_id),
        BaseId::SeededPermSum { degree, seed } => {
            perm_sum(size, *degree as usize, *seed, base_id)
        }
    }
}

fn complete(n: usize) -> Result<(BipartiteMultigraph, u64)> {
    let mut adj = Vec::with_capacity(n * n);
    for _ in 0..n {
        adj.extend(0..n as u32);
    }
    Ok((
        BipartiteMultigraph { n_per_side: n, degree: n, adj },
        (n * n) as u64,
    ))
}

fn complete_multi(n: usize, degree: usize, id: &BaseId) -> Result<(BipartiteMultigraph, u64)> {
    if degree % n != 0 {
        return Err(Error::UnsupportedSize {
            base: id.to_string(),
            size: n,
            reason: format!("size must divide the configured degree {degree}"),
        });
    }
    let mult = degree / n;
    let mut adj = Vec::with_capacity(n * degree);
    for _ in 0..n {
        for v in 0..n as u32 {
            for _ in 0..mult {
                adj.push(v);
            }
        }
    }
    Ok((
        BipartiteMultigraph { n_per_side: n, degree, adj },
        (n * degree) as u64,
    ))
}

/// Affine 8-regular graph on Z_m x Z_m. Left vertex (x, y) connects to the
/// images of four affine maps and their inverses:
///   (x+y, y), (x+y+1, y), (x, y+x), (x, y+x+1)
///   (x-y, y), (x-y-1, y), (x, y-x), (x, y-x-1)
/// Each map is a permutation computable per vertex in O(1), so the edge set
/// is built in linear time.
fn affine(n: usize, id: &BaseId) -> Result<(BipartiteMultigraph, u64)> {
    let m = (n as f64).sqrt().round() as usize;
    if m * m != n {
        return Err(Error::UnsupportedSize {
            base: id.to_string(),
            size: n,
            reason: "affine base needs a perfect-square size".into(),
        });
    }
    let idx = |x: usize, y: usize| (x % m) * m + (y % m);
    let mut adj = Vec::with_capacity(n * 8);
    for x in 0..m {
        for y in 0..m {
            adj.push(idx(x + y, y) as u32);
            adj.push(idx(x + y + 1, y) as u32);
            adj.push(idx(x, y + x) as u32);
            adj.push(idx(x, y + x + 1) as u32);
            adj.push(idx(x + m - y % m, y) as u32);
            adj.push(idx(x + 2 * m - y % m - 1, y) as u32);
            adj.push(idx(x, y + m - x % m) as u32);
            adj.push(idx(x, y + 2 * m - x % m - 1) as u32);
        }
    }
    Ok((
        BipartiteMultigraph { n_per_side: n, degree: 8, adj },
        (n * 8) as u64,
    ))
}

/// Sum of `degree` pseudorandom permutations, seeded from
/// `(seed, size, index)` so the graph is a pure function of its arguments.
/// Colliding targets are repaired by swapping permutation entries between
/// vertices, keeping each permutation a bijection while making every left
/// vertex's target list distinct; the padding step later doubles every edge,
/// so base multiplicity 1 keeps padded multiplicity at the protocol quota.
fn perm_sum(n: usize, degree: usize, seed: u64, id: &BaseId) -> Result<(BipartiteMultigraph, u64)> {
    if degree < 2 {
        return Err(Error::UnsupportedSize {
            base: id.to_string(),
            size: n,
            reason: "perm-sum degree must be at least 2".into(),
        });
    }
    if n <= degree {
        // Too small for distinct targets; fall back to the uniform complete
        // multigraph, which is a perfect expander at these sizes.
        return complete_multi(n, degree, id);
    }
    let mut ops = 0u64;
    let mut perms: Vec<Vec<u32>> = Vec::with_capacity(degree);
    for p in 0..degree {
        let mut rng = SplitMix64::new(
            seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((p as u64) << 32),
        );
        let mut perm: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            perm.swap(i, j);
            ops += 1;
        }
        // Repair collisions against the earlier permutations.
        for u in 0..n {
            let collides =
                |target: u32, vertex: usize| perms.iter().any(|q| q[vertex] == target);
            if !collides(perm[u], u) {
                continue;
            }
            let mut fixed = false;
            for step in 1..n {
                let u2 = (u + step) % n;
                ops += 1;
                if !collides(perm[u2], u) && !collides(perm[u], u2) {
                    perm.swap(u, u2);
                    fixed = true;
                    break;
                }
            }
            if !fixed {
                return Err(Error::Internal(format!(
                    "perm-sum repair failed at size {n}, degree {degree}"
                )));
            }
        }
        perms.push(perm);
    }
    let mut adj = Vec::with_capacity(n * degree);
    for u in 0..n {
        for perm in &perms {
            adj.push(perm[u]);
        }
        ops += degree as u64;
    }
    Ok((BipartiteMultigraph { n_per_side: n, degree, adj }, ops))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_id_round_trips_through_strings() {
        for id in [
            BaseId::Complete,
            BaseId::CompleteMulti { degree: 64 },
            BaseId::Affine,
            BaseId::SeededPermSum { degree: 16, seed: 42 },
        ] {
            let s = id.to_string();
            assert_eq!(BaseId::from_str(&s).unwrap(), id);
        }
        assert!(BaseId::from_str("margulis").is_err());
    }

    #[test]
    fn affine_rejects_non_square() {
        assert!(matches!(
            build(8, &BaseId::Affine),
            Err(Error::UnsupportedSize { .. })
        ));
    }

    #[test]
    fn affine_is_symmetric_and_regular() {
        let (g, _) = build(16, &BaseId::Affine).unwrap();
        g.validate().unwrap();
        let a = g.dense_biadjacency();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(a[i][j], a[j][i], "asymmetric at ({i},{j})");
            }
        }
    }

    #[test]
    fn perm_sum_targets_are_distinct_per_vertex() {
        for n in [16usize, 32, 64, 256, 1024] {
            let (g, _) = build(n, &BaseId::SeededPermSum { degree: 8, seed: 5 }).unwrap();
            for u in 0..n {
                let mut targets: Vec<u32> = g.adj(u).to_vec();
                targets.sort_unstable();
                targets.dedup();
                assert_eq!(targets.len(), 8, "vertex {u} has a repeated target");
            }
        }
    }

    #[test]
    fn perm_sum_small_sizes_fall_back_to_complete_multi() {
        let (g, _) = build(4, &BaseId::SeededPermSum { degree: 8, seed: 5 }).unwrap();
        g.validate().unwrap();
        assert_eq!(g.degree(), 8);
        let a = g.dense_biadjacency();
        for row in &a {
            for &x in row {
                assert_eq!(x, 2.0);
            }
        }
    }
}
