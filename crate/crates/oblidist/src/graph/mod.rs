//! Balanced bipartite multigraph families with a pseudorandomness guarantee:
//! the edge count between any two vertex subsets stays close to its
//! density-expected value (the DISC property). Graphs are built from a
//! pluggable base construction, eigengap-boosted by matrix powering, and
//! padded so the family covers every power-of-2 size at uniform degree.

mod base;
pub mod disc;
pub mod spectral;

pub use base::BaseId;
pub use disc::{verify_disc_exhaustive, DiscReport, WorstPair};
pub use spectral::{dense_singular_values, verify_disc_spectral, SpectralCertificate, SpectralMethod, SpectralOptions};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// d-regular balanced bipartite multigraph with explicit per-slot adjacency.
/// Slot order is part of the value: `adj(u)[s]` is the right endpoint of left
/// vertex `u`'s `s`-th edge, and repeats denote multi-edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteMultigraph {
    n_per_side: usize,
    degree: usize,
    adj: Vec<u32>,
}

impl BipartiteMultigraph {
    pub fn from_adjacency(n_per_side: usize, degree: usize, adj: Vec<u32>) -> Result<Self> {
        if adj.len() != n_per_side * degree {
            return Err(Error::ShapeMismatch(format!(
                "adjacency has {} slots, expected {}",
                adj.len(),
                n_per_side * degree
            )));
        }
        let g = BipartiteMultigraph { n_per_side, degree, adj };
        g.validate()?;
        Ok(g)
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Right endpoints of `u`'s edges, in slot order.
    #[inline(always)]
    pub fn adj(&self, u: usize) -> &[u32] {
        &self.adj[u * self.degree..(u + 1) * self.degree]
    }

    #[inline(always)]
    pub fn slot(&self, u: usize, s: usize) -> usize {
        self.adj[u * self.degree + s] as usize
    }

    pub fn slots(&self) -> &[u32] {
        &self.adj
    }

    /// Both-side regularity and index-range check.
    pub fn validate(&self) -> Result<()> {
        let mut right_deg = vec![0usize; self.n_per_side];
        for &v in &self.adj {
            let v = v as usize;
            if v >= self.n_per_side {
                return Err(Error::Internal(format!("right index {v} out of range")));
            }
            right_deg[v] += 1;
        }
        if let Some(v) = right_deg.iter().position(|&d| d != self.degree) {
            return Err(Error::Internal(format!(
                "right vertex {v} has degree {}, expected {}",
                right_deg[v], self.degree
            )));
        }
        Ok(())
    }

    /// Per-right-vertex lists of `(left, slot)` pairs, sorted by `(left, slot)`.
    /// The fixed order makes right-major scans deterministic.
    pub fn reverse_adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut rev = vec![Vec::with_capacity(self.degree); self.n_per_side];
        for u in 0..self.n_per_side {
            for (s, &v) in self.adj(u).iter().enumerate() {
                rev[v as usize].push((u as u32, s as u32));
            }
        }
        rev
    }

    /// Dense biadjacency with `a[r][l]` = multiplicity of edge `(l, r)`.
    pub fn dense_biadjacency(&self) -> Vec<Vec<f64>> {
        let n = self.n_per_side;
        let mut a = vec![vec![0.0f64; n]; n];
        for u in 0..n {
            for &v in self.adj(u) {
                a[v as usize][u] += 1.0;
            }
        }
        a
    }
}

/// Subset of one side, as a bitmask over vertex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VertexSet {
    bits: Vec<u64>,
    len: usize,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet { bits: vec![0; n.div_ceil(64)], len: n }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(n: usize, idx: &[usize]) -> Self {
        let mut s = Self::empty(n);
        for &i in idx {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len);
        self.bits[i / 64] &= !(1 << (i % 64));
    }

    #[inline(always)]
    pub fn contains(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.contains(i))
    }
}

/// Exact multi-edge count between a left subset and a right subset.
pub fn e_count(g: &BipartiteMultigraph, u_set: &VertexSet, v_set: &VertexSet) -> u64 {
    let mut count = 0u64;
    for u in u_set.iter() {
        for &v in g.adj(u) {
            count += v_set.contains(v as usize) as u64;
        }
    }
    count
}

/// Parameters pinning one family: a base construction, the boost exponent,
/// and the epsilon the family is certified against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpanderParams {
    pub epsilon: f64,
    pub base: BaseId,
    pub boost_k: u32,
    pub degree_cap: u64,
}

impl ExpanderParams {
    pub fn new(epsilon: f64, base: BaseId, boost_k: u32) -> Self {
        ExpanderParams { epsilon, base, boost_k, degree_cap: 1 << 16 }
    }

    /// Family degree after boosting and padding: 2 * base_degree^k.
    pub fn d_eps(&self) -> Result<usize> {
        let d = self.base.degree() as u128;
        let mut boosted: u128 = 1;
        for _ in 0..self.boost_k {
            boosted = boosted.saturating_mul(d);
            if boosted > self.degree_cap as u128 {
                return Err(Error::DegreeOverflow { degree: 2 * boosted, cap: self.degree_cap });
            }
        }
        Ok(2 * boosted as usize)
    }

    fn cache_key(&self) -> (u64, String, u32) {
        (self.epsilon.to_bits(), self.base.to_string(), self.boost_k)
    }
}

/// Build a registered base construction. Deterministic: identical inputs
/// produce identical adjacency.
pub fn build_base(size: usize, base_id: &BaseId) -> Result<BipartiteMultigraph> {
    base::build(size, base_id).map(|(g, _)| g)
}

/// Raise the biadjacency to its `k`-th power by per-vertex path expansion;
/// slot order is lexicographic over the traversed slot tuples, keeping the
/// construction deterministic and linear per vertex.
pub fn boost_power(g: &BipartiteMultigraph, k: u32, degree_cap: u64) -> Result<BipartiteMultigraph> {
    assert!(k >= 1, "boost exponent must be at least 1");
    let mut boosted: u128 = 1;
    for _ in 0..k {
        boosted = boosted.saturating_mul(g.degree as u128);
        if boosted > degree_cap as u128 {
            return Err(Error::DegreeOverflow { degree: boosted, cap: degree_cap });
        }
    }
    if k == 1 {
        return Ok(g.clone());
    }
    let n = g.n_per_side;
    let mut frontier: Vec<u32> = Vec::new();
    let mut next: Vec<u32> = Vec::new();
    let mut adj = Vec::with_capacity(n * boosted as usize);
    for u in 0..n {
        frontier.clear();
        frontier.push(u as u32);
        for _ in 0..k {
            next.clear();
            next.reserve(frontier.len() * g.degree);
            for &w in &frontier {
                next.extend_from_slice(g.adj(w as usize));
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        adj.extend_from_slice(&frontier);
    }
    BipartiteMultigraph::from_adjacency(n, boosted as usize, adj)
}

/// Duplicate every edge: same vertex count, degree doubled, every slot
/// repeated twice consecutively. Doubles all biadjacency eigenvalues.
pub fn pad_same_size(h: &BipartiteMultigraph) -> BipartiteMultigraph {
    let mut adj = Vec::with_capacity(h.adj.len() * 2);
    for u in 0..h.n_per_side {
        for &v in h.adj(u) {
            adj.push(v);
            adj.push(v);
        }
    }
    BipartiteMultigraph { n_per_side: h.n_per_side, degree: h.degree * 2, adj }
}

/// Two copies of `h` plus, for every edge `(u, v)`, a cross edge to the other
/// copy's homologue of `v`. The biadjacency becomes four identical blocks;
/// degree and all eigenvalues double.
pub fn pad_double_size(h: &BipartiteMultigraph) -> BipartiteMultigraph {
    let n = h.n_per_side;
    let d = h.degree;
    let mut adj = Vec::with_capacity(4 * n * d);
    for u in 0..2 * n {
        let hu = u % n;
        let (own, cross) = if u < n { (0u32, n as u32) } else { (n as u32, 0u32) };
        for &v in h.adj(hu) {
            adj.push(v + own);
        }
        for &v in h.adj(hu) {
            adj.push(v + cross);
        }
    }
    BipartiteMultigraph { n_per_side: 2 * n, degree: 2 * d, adj }
}

/// Family member of size `n`: base at `n` (or `n/2` when the base skips `n`),
/// boosted `k` times, then padded. Deterministic and memoized per
/// `(params, n)` via [`family_cached`].
pub fn family(params: &ExpanderParams, n: usize) -> Result<BipartiteMultigraph> {
    family_with_op_count(params, n).map(|(g, _)| g)
}

/// Same as [`family`], also reporting the builder's operation tally (slot
/// writes and permutation steps), for linear-time scaling checks.
pub fn family_with_op_count(params: &ExpanderParams, n: usize) -> Result<(BipartiteMultigraph, u64)> {
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let min = family_min_size(&params.base);
    if n < min {
        return Err(Error::BelowFamilyMinimum { size: n, min });
    }
    let (h, base_ops) = if params.base.supports(n) {
        let (g, ops) = base::build(n, &params.base)?;
        (boost_power(&g, params.boost_k, params.degree_cap)?, ops)
    } else if n % 2 == 0 && params.base.supports(n / 2) {
        let (g, ops) = base::build(n / 2, &params.base)?;
        let boosted = boost_power(&g, params.boost_k, params.degree_cap)?;
        return Ok((pad_double_size(&boosted), ops + (2 * n * boosted.degree) as u64));
    } else {
        return Err(Error::UnsupportedSize {
            base: params.base.to_string(),
            size: n,
            reason: "neither n nor n/2 is a supported base size".into(),
        });
    };
    let padded = pad_same_size(&h);
    let ops = base_ops + (padded.n_per_side * padded.degree) as u64;
    Ok((padded, ops))
}

/// Smallest power of 2 the family starts at: the first power of 2 reachable
/// from a supported base size, directly or through size-doubling padding.
pub fn family_min_size(base: &BaseId) -> usize {
    let mut n = 2usize;
    loop {
        if base.supports(n) || (n % 2 == 0 && base.supports(n / 2)) {
            return n;
        }
        n *= 2;
        if n > 1 << 30 {
            return usize::MAX;
        }
    }
}

type FamilyKey = ((u64, String, u32), usize);

fn family_cache() -> &'static Mutex<HashMap<FamilyKey, Arc<BipartiteMultigraph>>> {
    static CACHE: OnceLock<Mutex<HashMap<FamilyKey, Arc<BipartiteMultigraph>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoized family lookup. Graph construction is a pure function of
/// `(params, n)`, so sharing the result across calls preserves determinism.
pub fn family_cached(params: &ExpanderParams, n: usize) -> Result<Arc<BipartiteMultigraph>> {
    let key = (params.cache_key(), n);
    if let Some(g) = family_cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(g));
    }
    let g = Arc::new(family(params, n)?);
    family_cache().lock().unwrap().insert(key, Arc::clone(&g));
    Ok(g)
}
