//! Connected-graph sums over polymer multisets.
//!
//! `φ` is symmetric, so a sum over ordered tuples of a discrete space can be
//! grouped by multiset: the tuple `(A_1, .., A_n)` is replaced by the vector of
//! multiplicities `k_t` of each polymer type `t`, and the number of orderings
//! becomes a multinomial factor. The connected sum `C(k) = n! φ` is computed by
//! splitting off the component of one pinned vertex:
//!
//! `F(k) = Σ_{j ∋ pinned} W(j, k) C(j) F(k - j)`,
//!
//! with `F` the product of `(1 + ζ)` over all vertex pairs and `W` the number
//! of ways to choose the labeled vertices of the pinned component.

use std::collections::{BTreeSet, HashMap};

use crate::number::{binomial, Scalar};

/// Sorted `(type, multiplicity)` pairs, multiplicities positive.
pub(crate) type Multiset = Vec<(usize, u32)>;

pub(crate) fn total(v: &[(usize, u32)]) -> usize {
    v.iter().map(|&(_, k)| k as usize).sum()
}

pub(crate) fn pow<S: Scalar>(x: &S, mut e: u64) -> S {
    let mut base = x.clone();
    let mut acc = S::one();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base.clone();
        }
        e >>= 1;
        if e > 0 {
            base = base.clone() * base;
        }
    }
    acc
}

pub(crate) struct ClusterSums<S> {
    n: usize,
    zeta: Vec<S>,
    interacts: Vec<bool>,
    memo: HashMap<Multiset, S>,
}

impl<S: Scalar> ClusterSums<S> {
    pub(crate) fn new(n: usize, zeta: Vec<S>) -> Self {
        let interacts = zeta.iter().map(|z| !z.is_zero()).collect();
        ClusterSums { n, zeta, interacts, memo: HashMap::new() }
    }

    fn z(&self, i: usize, j: usize) -> &S {
        &self.zeta[i * self.n + j]
    }

    /// Whether the multiset is a cluster: its interaction graph is connected.
    pub(crate) fn is_cluster(&self, v: &[(usize, u32)]) -> bool {
        match v {
            [] => false,
            [(t, k)] => *k == 1 || self.interacts[t * self.n + t],
            _ => {
                // copies of a type share its neighbours, so connectivity of the
                // support decides
                let s = v.len();
                let mut seen = vec![false; s];
                let mut stack = vec![0usize];
                seen[0] = true;
                let mut count = 1;
                while let Some(a) = stack.pop() {
                    for b in 0..s {
                        if !seen[b] && self.interacts[v[a].0 * self.n + v[b].0] {
                            seen[b] = true;
                            count += 1;
                            stack.push(b);
                        }
                    }
                }
                count == s
            }
        }
    }

    /// Product of `(1 + ζ)` over all unordered vertex pairs of the multiset.
    fn all_graphs(&self, v: &[(usize, u32)]) -> S {
        let mut acc = S::one();
        for (a, &(t, kt)) in v.iter().enumerate() {
            let kt = kt as u64;
            if kt >= 2 {
                acc = acc * pow(&(S::one() + self.z(t, t).clone()), kt * (kt - 1) / 2);
            }
            for &(u, ku) in &v[a + 1..] {
                acc = acc * pow(&(S::one() + self.z(t, u).clone()), kt * ku as u64);
            }
            if acc.is_zero() {
                break;
            }
        }
        acc
    }

    /// `Σ_{G connected} Π_{edges} ζ` on the labeled vertices of the multiset.
    pub(crate) fn connected_sum(&mut self, v: &[(usize, u32)]) -> S {
        if total(v) == 1 {
            return S::one();
        }
        if !self.is_cluster(v) {
            return S::zero();
        }
        if let Some(c) = self.memo.get(v) {
            return c.clone();
        }
        let mut acc = self.all_graphs(v);
        let mut j: Vec<u32> = vec![0; v.len()];
        j[0] = 1;
        loop {
            let is_full = j.iter().zip(v).all(|(a, &(_, k))| *a == k);
            if !is_full {
                let sub: Multiset =
                    v.iter().zip(&j).filter(|(_, &a)| a > 0).map(|(&(t, _), &a)| (t, a)).collect();
                let rest: Multiset =
                    v.iter().zip(&j).filter(|(&(_, k), &a)| k > a).map(|(&(t, k), &a)| (t, k - a)).collect();
                let c_sub = self.connected_sum(&sub);
                if !c_sub.is_zero() {
                    let f_rest = self.all_graphs(&rest);
                    if !f_rest.is_zero() {
                        let mut ways = binomial(v[0].1 as u64 - 1, j[0] as u64 - 1);
                        for (a, &(_, k)) in j.iter().zip(v).skip(1) {
                            ways *= binomial(k as u64, *a as u64);
                        }
                        acc = acc - S::from_i64(ways as i64) * c_sub * f_rest;
                    }
                }
            }
            // odometer over 1..=k_0 for the pinned type and 0..=k_t otherwise
            let mut pos = 0;
            loop {
                if pos == j.len() {
                    self.memo.insert(v.to_vec(), acc.clone());
                    return acc;
                }
                if j[pos] < v[pos].1 {
                    j[pos] += 1;
                    break;
                }
                j[pos] = if pos == 0 { 1 } else { 0 };
                pos += 1;
            }
        }
    }
}

/// All vertex sets `S ⊇ seed` with `|S| <= max_size` reachable by repeatedly
/// adding a neighbour of the current set, restricted to vertices `>= floor`.
/// Sorted output.
pub(crate) fn grow_supports(
    neighbours: &[Vec<usize>],
    seed: &[usize],
    max_size: usize,
    floor: usize,
) -> Vec<Vec<usize>> {
    let mut start = seed.to_vec();
    start.sort_unstable();
    start.dedup();
    let mut all: BTreeSet<Vec<usize>> = BTreeSet::new();
    if start.len() > max_size {
        return Vec::new();
    }
    let mut level: BTreeSet<Vec<usize>> = BTreeSet::from([start.clone()]);
    all.insert(start);
    while let Some(first) = level.iter().next() {
        if first.len() >= max_size {
            break;
        }
        let mut next = BTreeSet::new();
        for set in &level {
            for &v in set {
                for &u in &neighbours[v] {
                    if u >= floor && set.binary_search(&u).is_err() {
                        let mut grown = set.clone();
                        let pos = grown.binary_search(&u).unwrap_err();
                        grown.insert(pos, u);
                        if !all.contains(&grown) {
                            next.insert(grown);
                        }
                    }
                }
            }
        }
        for s in &next {
            all.insert(s.clone());
        }
        level = next;
    }
    all.into_iter().collect()
}

/// Calls `f` with every composition of `n` into `parts` positive integers.
pub(crate) fn compositions(n: usize, parts: usize, f: &mut impl FnMut(&[u32])) {
    fn go(rem: usize, left: usize, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if left == 0 {
            if rem == 0 {
                f(cur);
            }
            return;
        }
        let max = rem + 1 - left;
        for k in 1..=max {
            cur.push(k as u32);
            go(rem - k, left - 1, cur, f);
            cur.pop();
        }
    }
    if parts == 0 || n < parts {
        return;
    }
    go(n, parts, &mut Vec::with_capacity(parts), f);
}

/// Every cluster multiset of exactly `order` vertices, in a deterministic
/// order (support sets ascending, then compositions).
pub(crate) fn cluster_multisets_of_order<S: Scalar>(
    sums: &ClusterSums<S>,
    neighbours: &[Vec<usize>],
    order: usize,
) -> Vec<Multiset> {
    let n = neighbours.len();
    let mut out = Vec::new();
    for v in 0..n {
        for support in grow_supports(neighbours, &[v], order, v) {
            compositions(order, support.len(), &mut |ks| {
                let m: Multiset = support.iter().copied().zip(ks.iter().copied()).collect();
                if sums.is_cluster(&m) {
                    out.push(m);
                }
            });
        }
    }
    out
}

/// Every multiset `k` of free polymers with `|k| <= max_free` such that
/// `fixed + k` is a cluster, paired with the combined multiset. Types of the
/// fixed multiset may appear in `k` with multiplicity zero.
pub(crate) fn cluster_extensions<S: Scalar>(
    sums: &ClusterSums<S>,
    neighbours: &[Vec<usize>],
    fixed: &[(usize, u32)],
    max_free: usize,
) -> Vec<(Multiset, Multiset)> {
    let seed: Vec<usize> = fixed.iter().map(|&(t, _)| t).collect();
    let mut out = Vec::new();
    for support in grow_supports(neighbours, &seed, seed.len() + max_free, 0) {
        // free multiplicity: >= 1 on new types, >= 0 on fixed types
        let mins: Vec<u32> = support.iter().map(|t| u32::from(seed.binary_search(t).is_err())).collect();
        let min_total: usize = mins.iter().map(|&m| m as usize).sum();
        if min_total > max_free {
            continue;
        }
        let mut ks = mins.clone();
        bounded_vectors(&mins, max_free - min_total, 0, &mut ks, &mut |ks| {
            let free: Multiset =
                support.iter().zip(ks).filter(|(_, &k)| k > 0).map(|(&t, &k)| (t, k)).collect();
            let combined: Multiset = support
                .iter()
                .zip(ks)
                .map(|(&t, &k)| {
                    let base = fixed.iter().find(|(u, _)| *u == t).map_or(0, |&(_, m)| m);
                    (t, base + k)
                })
                .filter(|&(_, k)| k > 0)
                .collect();
            if sums.is_cluster(&combined) {
                out.push((free, combined));
            }
        });
    }
    out
}

/// Visits every `ks` with `ks[i] >= mins[i]` and `Σ (ks[i] - mins[i]) <= budget`.
fn bounded_vectors(
    mins: &[u32],
    budget: usize,
    pos: usize,
    ks: &mut Vec<u32>,
    f: &mut impl FnMut(&[u32]),
) {
    if pos == mins.len() {
        f(ks);
        return;
    }
    for extra in 0..=budget {
        ks[pos] = mins[pos] + extra as u32;
        bounded_vectors(mins, budget - extra, pos + 1, ks, f);
    }
    ks[pos] = mins[pos];
}


/// Multiset of a tuple of polymer indices.
pub(crate) fn multiset_of(tuple: &[usize]) -> Multiset {
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    let mut out: Multiset = Vec::new();
    for t in sorted {
        match out.last_mut() {
            Some((u, k)) if *u == t => *k += 1,
            _ => out.push((t, 1)),
        }
    }
    out
}

/// Expands a multiset to a sorted vertex list.
pub(crate) fn vertices_of(v: &[(usize, u32)]) -> Vec<usize> {
    v.iter().flat_map(|&(t, k)| std::iter::repeat_n(t, k as usize)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ursell::{connected_graph_sum, EdgeWeightMatrix};
    use num_complex::Complex64;

    fn random_zeta(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed | 1;
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                let v = if u < 0.3 { 0.0 } else { -u };
                z[i * n + j] = v;
                z[j * n + i] = v;
            }
        }
        z
    }

    #[test]
    fn multiset_dp_matches_subset_recursion() {
        for seed in 1..20u64 {
            let n = 4;
            let z = random_zeta(n, seed);
            let mut sums = ClusterSums::new(n, z.clone());
            for tuple in [vec![0, 0, 1], vec![0, 1, 2, 3], vec![2, 2, 2, 3], vec![0, 1, 1, 3, 3], vec![3, 3]] {
                let m = multiset_of(&tuple);
                let verts = vertices_of(&m);
                let w = EdgeWeightMatrix::from_fn(verts.len(), |a, b| z[verts[a] * n + verts[b]]);
                let dp = sums.connected_sum(&m);
                let direct = connected_graph_sum(&w);
                assert!((dp - direct).abs() < 1e-12, "seed {seed} tuple {tuple:?}: {dp} vs {direct}");
            }
        }
    }

    #[test]
    fn hard_core_single_type_closed_form() {
        // all pairs -1: C_n = (-1)^{n-1} (n-1)!
        let mut sums = ClusterSums::new(1, vec![Complex64::new(-1.0, 0.0)]);
        let mut fact = 1.0;
        for n in 1..=9u32 {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            let expected = if n % 2 == 1 { fact } else { -fact };
            let c = sums.connected_sum(&[(0, n)]);
            assert!((c.re - expected).abs() < 1e-9 * fact, "n = {n}");
        }
    }

    #[test]
    fn supports_and_compositions() {
        // path 0 - 1 - 2
        let nb = vec![vec![1], vec![0, 2], vec![1]];
        let s = grow_supports(&nb, &[0], 3, 0);
        assert_eq!(s, vec![vec![0], vec![0, 1], vec![0, 1, 2]]);
        let from1 = grow_supports(&nb, &[1], 2, 1);
        assert_eq!(from1, vec![vec![1], vec![1, 2]]);
        let disjoint = grow_supports(&nb, &[0, 2], 3, 0);
        assert_eq!(disjoint, vec![vec![0, 1, 2], vec![0, 2]]);
        let mut count = 0;
        compositions(5, 3, &mut |_| count += 1);
        assert_eq!(count, 6);
    }

    #[test]
    fn extensions_enumerate_free_parts() {
        let z = vec![-1.0, -1.0, -1.0, -1.0];
        let sums = ClusterSums::new(2, z);
        let nb = vec![vec![1], vec![0]];
        let ext = cluster_extensions(&sums, &nb, &[(0, 1)], 2);
        let free: Vec<Multiset> = ext.iter().map(|(f, _)| f.clone()).collect();
        for want in [vec![], vec![(0, 1)], vec![(0, 2)], vec![(1, 1)], vec![(1, 2)], vec![(0, 1), (1, 1)]] {
            assert!(free.contains(&want), "missing {want:?} in {free:?}");
        }
        assert_eq!(free.len(), 6);
    }
}
