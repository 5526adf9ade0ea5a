//! Graph combinatorics behind the Ursell function.
//!
//! Vertices are numbered `0..n`. An edge set on `n` vertices is stored as a
//! bitmask over the `n(n-1)/2` unordered pairs, with pair `(i, j)`, `i < j`,
//! at bit `j(j-1)/2 + i`.

use crate::error::{invalid, Error, Result};
use crate::number::{factorial_f64, Scalar};

/// Default cap on graph sizes handled by enumeration and Ursell evaluation.
pub const DEFAULT_N_MAX: usize = 9;

/// Largest size representable by the edge bitmask.
pub const HARD_N_MAX: usize = 11;

/// Cap on set-partition enumeration (Bell-number growth).
pub const SET_PARTITION_MAX: usize = 12;

#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    j * (j - 1) / 2 + i
}

#[inline]
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// An edge set on `n` labeled vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LabeledGraph {
    n: usize,
    mask: u64,
}

impl LabeledGraph {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 || n > HARD_N_MAX {
            return Err(invalid(format!("graph size {n} outside 1..={HARD_N_MAX}")));
        }
        Ok(LabeledGraph { n, mask: 0 })
    }

    /// Builds a graph from explicit edges; rejects self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = LabeledGraph::empty(n)?;
        for &(i, j) in edges {
            if i == j {
                return Err(invalid(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(invalid(format!("edge ({i}, {j}) outside 0..{n}")));
            }
            let bit = 1u64 << pair_index(i, j);
            if g.mask & bit != 0 {
                return Err(invalid(format!("duplicate edge ({i}, {j})")));
            }
            g.mask |= bit;
        }
        Ok(g)
    }

    pub(crate) fn from_mask(n: usize, mask: u64) -> Self {
        LabeledGraph { n, mask }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edge_mask(&self) -> u64 {
        self.mask
    }

    pub fn n_edges(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.mask & (1u64 << pair_index(i, j)) != 0
    }

    /// Edges as ordered pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.n).flat_map(move |j| (0..j).map(move |i| (i, j)))
            .filter(move |&(i, j)| self.has_edge(i, j))
    }

    fn adjacency(&self) -> Vec<u32> {
        let mut adj = vec![0u32; self.n];
        for (i, j) in self.edges() {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
        adj
    }
}

/// True iff all vertices lie in one component.
pub fn is_connected(g: &LabeledGraph) -> bool {
    connected_from_adjacency(&g.adjacency())
}

fn connected_from_adjacency(adj: &[u32]) -> bool {
    let n = adj.len();
    if n <= 1 {
        return true;
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[v] & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == full
}

/// Lazy stream over the connected labeled graphs on `n` vertices, backed by a
/// filter over the edge-mask range `[start, end)`.
#[derive(Clone, Debug)]
pub struct ConnectedGraphs {
    n: usize,
    next: u64,
    end: u64,
}

impl ConnectedGraphs {
    /// Restricts the stream to a slice of the mask range, so that workers
    /// owning disjoint ranges jointly cover every graph once.
    pub fn range(n: usize, start: u64, end: u64) -> Self {
        let total = 1u64 << pair_count(n);
        ConnectedGraphs { n, next: start.min(total), end: end.min(total) }
    }

    pub fn mask_space(n: usize) -> u64 {
        1u64 << pair_count(n)
    }
}

impl Iterator for ConnectedGraphs {
    type Item = LabeledGraph;

    fn next(&mut self) -> Option<LabeledGraph> {
        while self.next < self.end {
            let g = LabeledGraph::from_mask(self.n, self.next);
            self.next += 1;
            if is_connected(&g) {
                return Some(g);
            }
        }
        None
    }
}

/// Every connected labeled graph on `n` vertices, each exactly once.
pub fn enumerate_connected_graphs(n: usize) -> Result<ConnectedGraphs> {
    enumerate_connected_graphs_capped(n, DEFAULT_N_MAX)
}

pub fn enumerate_connected_graphs_capped(n: usize, n_max: usize) -> Result<ConnectedGraphs> {
    let cap = n_max.min(HARD_N_MAX);
    if n == 0 || n > cap {
        return Err(invalid(format!("graph size {n} outside 1..={cap}")));
    }
    Ok(ConnectedGraphs::range(n, 0, ConnectedGraphs::mask_space(n)))
}

/// Number of connected labeled graphs on `n` vertices, by complement counting
/// on the component of vertex 0.
pub fn count_connected_graphs(n: usize) -> u128 {
    let all = |k: usize| -> u128 { 1u128 << pair_count(k) };
    let mut counts = vec![0u128; n + 1];
    for m in 1..=n {
        let mut disconnected = 0u128;
        for k in 1..m {
            disconnected += crate::number::binomial((m - 1) as u64, (k - 1) as u64) as u128
                * counts[k]
                * all(m - k);
        }
        counts[m] = all(m) - disconnected;
    }
    counts[n]
}

/// Symmetric matrix of edge weights `w(i, j)`; the diagonal is not consulted
/// by graph sums.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeightMatrix<S> {
    n: usize,
    values: Vec<S>,
}

impl<S: Scalar> EdgeWeightMatrix<S> {
    /// Fills the upper triangle from `f(i, j)` (`i < j`) and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut values = vec![S::zero(); n * n];
        for j in 1..n {
            for i in 0..j {
                let w = f(i, j);
                values[i * n + j] = w.clone();
                values[j * n + i] = w;
            }
        }
        EdgeWeightMatrix { n, values }
    }

    pub fn constant(n: usize, w: S) -> Self {
        Self::from_fn(n, |_, _| w.clone())
    }

    /// Builds from full rows; off-diagonal entries must be symmetric.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("weight matrix must be square"));
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(invalid(format!("weight matrix not symmetric at ({j}, {i})")));
                }
            }
        }
        Ok(EdgeWeightMatrix { n, values: rows.into_iter().flatten().collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.values[i * self.n + j]
    }

    /// `|1 + w(i, j)| <= 1 + eps` for every off-diagonal pair.
    pub fn is_stable(&self, eps: f64) -> bool {
        (0..self.n).all(|j| {
            (0..j).all(|i| (S::one() + self.get(i, j).clone()).modulus() <= 1.0 + eps)
        })
    }

    /// Restriction to the given vertex list (with repetitions allowed).
    pub fn select(&self, vertices: &[usize]) -> Self {
        Self::from_fn(vertices.len(), |a, b| self.get(vertices[a], vertices[b]).clone())
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        self.select(perm)
    }
}

/// Whether the graph with an edge wherever `w(i, j) != 0` is connected.
pub fn is_cluster<S: Scalar>(w: &EdgeWeightMatrix<S>) -> bool {
    let n = w.n();
    if n > 32 {
        return false;
    }
    let mut adj = vec![0u32; n];
    for j in 1..n {
        for i in 0..j {
            if !w.get(i, j).is_zero() {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    connected_from_adjacency(&adj)
}

/// Sum over connected graphs of the product of edge weights (no `1/n!`).
///
/// Uses the decomposition of an arbitrary graph by the component holding the
/// lowest vertex: `F(S) = sum_{T ∋ min S} C(T) F(S \ T)` where `F(S)` is the
/// product of `(1 + w)` over pairs of `S`.
pub fn connected_graph_sum<S: Scalar>(w: &EdgeWeightMatrix<S>) -> S {
    let n = w.n();
    if n <= 1 {
        return S::one();
    }
    let size = 1usize << n;
    let mut all = vec![S::one(); size];
    for s in 1..size {
        let top = usize::BITS as usize - 1 - s.leading_zeros() as usize;
        let rest = s & !(1 << top);
        let mut prod = all[rest].clone();
        let mut bits = rest;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            prod = prod * (S::one() + w.get(u, top).clone());
        }
        all[s] = prod;
    }
    let mut connected = vec![S::zero(); size];
    for s in 1..size {
        let low = s & s.wrapping_neg();
        if s == low {
            connected[s] = S::one();
            continue;
        }
        let mut acc = all[s].clone();
        // proper subsets of s containing the lowest vertex
        let others = s & !low;
        let mut sub = (others.wrapping_sub(1)) & others;
        loop {
            let t = sub | low;
            if t != s && !connected[t].is_zero() {
                acc = acc - connected[t].clone() * all[s & !t].clone();
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        connected[s] = acc;
    }
    connected[size - 1].clone()
}

/// The Ursell function: `1` for a single vertex, otherwise
/// `(1/n!) * sum_{G connected} prod_{(i,j) in G} w(i, j)`.
pub fn ursell<S: Scalar>(w: &EdgeWeightMatrix<S>) -> Result<S> {
    ursell_capped(w, DEFAULT_N_MAX)
}

pub fn ursell_capped<S: Scalar>(w: &EdgeWeightMatrix<S>, n_max: usize) -> Result<S> {
    let n = w.n();
    let cap = n_max.min(HARD_N_MAX);
    if n == 0 {
        return Err(invalid("Ursell function needs at least one vertex"));
    }
    if n > cap {
        return Err(Error::Capacity { what: "ursell order", requested: n as u64, limit: cap as u64 });
    }
    if n == 1 {
        return Ok(S::one());
    }
    if !is_cluster(w) {
        return Ok(S::zero());
    }
    let mut sum = connected_graph_sum(w);
    for k in 2..=n as u64 {
        sum = sum.div_u64(k);
    }
    Ok(sum)
}

/// Float convenience: Ursell value of a real weight matrix.
pub fn ursell_f64(w: &EdgeWeightMatrix<f64>) -> Result<f64> {
    let n = w.n();
    if n > HARD_N_MAX {
        return Err(Error::Capacity { what: "ursell order", requested: n as u64, limit: HARD_N_MAX as u64 });
    }
    if n <= 1 {
        return Ok(1.0);
    }
    if !is_cluster(w) {
        return Ok(0.0);
    }
    Ok(connected_graph_sum(w) / factorial_f64(n))
}

/// Minimum over connected graphs of the summed edge costs, i.e. the weight of
/// a minimum spanning tree of the complete graph (costs are nonnegative).
pub fn min_connectivity_cost(c: &EdgeWeightMatrix<f64>) -> Result<f64> {
    let n = c.n();
    for j in 1..n {
        for i in 0..j {
            let v = *c.get(i, j);
            if v.is_nan() || v < 0.0 {
                return Err(invalid(format!("negative connectivity cost {v} at ({i}, {j})")));
            }
        }
    }
    if n <= 1 {
        return Ok(0.0);
    }
    // Prim on the dense graph
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .expect("vertex remains");
        in_tree[v] = true;
        total += best[v];
        for u in 0..n {
            if !in_tree[u] && *c.get(u, v) < best[u] {
                best[u] = *c.get(u, v);
            }
        }
    }
    Ok(total)
}

/// A partition of `{0, .., m-1}` into nonempty blocks, blocks ordered by
/// their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    m: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn new(m: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; m];
        for b in &mut blocks {
            if b.is_empty() {
                return Err(invalid("empty block in set partition"));
            }
            b.sort_unstable();
            for &x in b.iter() {
                if x >= m || seen[x] {
                    return Err(invalid(format!("element {x} repeated or out of range")));
                }
                seen[x] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("blocks do not cover the ground set"));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(SetPartition { m, blocks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// Stream of set partitions driven by restricted growth strings.
#[derive(Clone, Debug)]
pub struct SetPartitions {
    rgs: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl Iterator for SetPartitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let m = self.rgs.len();
        let k = self.rgs.iter().max().map_or(0, |&x| x + 1);
        let mut blocks = vec![Vec::new(); k];
        for (x, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(x);
        }
        let out = SetPartition { m, blocks };

        // advance: rightmost position that can grow
        let mut i = m;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.rgs[i] <= self.maxes[i - 1] {
                self.rgs[i] += 1;
                let top = self.maxes[i - 1].max(self.rgs[i]);
                self.maxes[i] = top;
                for j in i + 1..m {
                    self.rgs[j] = 0;
                    self.maxes[j] = top;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Every partition of `{0, .., m-1}` exactly once.
pub fn enumerate_set_partitions(m: usize) -> Result<SetPartitions> {
    if m == 0 || m > SET_PARTITION_MAX {
        return Err(invalid(format!("set size {m} outside 1..={SET_PARTITION_MAX}")));
    }
    Ok(SetPartitions { rgs: vec![0; m], maxes: vec![0; m], done: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn all_graphs_connected_count(n: usize) -> usize {
        (0..ConnectedGraphs::mask_space(n))
            .filter(|&m| is_connected(&LabeledGraph::from_mask(n, m)))
            .count()
    }

    #[test]
    fn connected_counts_small() {
        assert_eq!(enumerate_connected_graphs(1).unwrap().count(), 1);
        assert_eq!(enumerate_connected_graphs(3).unwrap().count(), 4);
        assert_eq!(enumerate_connected_graphs(4).unwrap().count(), 38);
        for n in 1..=6 {
            assert_eq!(
                enumerate_connected_graphs(n).unwrap().count(),
                all_graphs_connected_count(n)
            );
            assert_eq!(count_connected_graphs(n), all_graphs_connected_count(n) as u128);
        }
        // OEIS A001187
        assert_eq!(count_connected_graphs(9), 66_296_291_072);
    }

    #[test]
    fn enumeration_rejects_bad_sizes() {
        assert!(enumerate_connected_graphs(0).is_err());
        assert!(enumerate_connected_graphs(10).is_err());
        assert!(enumerate_connected_graphs_capped(10, 10).is_ok());
    }

    #[test]
    fn ranges_partition_the_stream() {
        let n = 5;
        let total = ConnectedGraphs::mask_space(n);
        let split: usize = (0..4)
            .map(|w| ConnectedGraphs::range(n, w * total / 4, (w + 1) * total / 4).count())
            .sum();
        assert_eq!(split, 728);
    }

    #[test]
    fn connectivity_examples() {
        assert!(!is_connected(&LabeledGraph::from_edges(2, &[]).unwrap()));
        assert!(is_connected(&LabeledGraph::from_edges(2, &[(0, 1)]).unwrap()));
        assert!(!is_connected(&LabeledGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap()));
        assert!(is_connected(&LabeledGraph::empty(1).unwrap()));
    }

    #[test]
    fn graph_construction_invariants() {
        assert!(LabeledGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(LabeledGraph::from_edges(3, &[(0, 3)]).is_err());
        assert!(LabeledGraph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        let g = LabeledGraph::from_edges(4, &[(2, 0), (3, 1)]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 3)]);
    }

    #[test]
    fn ursell_examples() {
        let one = EdgeWeightMatrix::constant(1, -1.0);
        assert_eq!(ursell(&one).unwrap(), 1.0);
        assert_eq!(ursell(&EdgeWeightMatrix::constant(2, -1.0)).unwrap(), -0.5);
        assert!((ursell(&EdgeWeightMatrix::constant(3, -1.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((ursell(&EdgeWeightMatrix::constant(4, -1.0)).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn ursell_all_minus_one_exact() {
        for n in 2..=DEFAULT_N_MAX {
            let w = EdgeWeightMatrix::constant(n, BigRational::from_i64(-1));
            let sign = if n % 2 == 0 { -1 } else { 1 };
            let expected = BigRational::new(sign.into(), (n as i64).into());
            assert_eq!(ursell(&w).unwrap(), expected, "n = {n}");
        }
    }

    #[test]
    fn ursell_capacity() {
        let w = EdgeWeightMatrix::constant(10, -1.0);
        assert!(matches!(ursell(&w), Err(Error::Capacity { .. })));
    }

    #[test]
    fn cluster_examples() {
        assert!(is_cluster(&EdgeWeightMatrix::constant(1, 0.0)));
        let w = EdgeWeightMatrix::from_fn(3, |i, j| if (i, j) == (0, 1) { -1.0 } else { 0.0 });
        assert!(!is_cluster(&w));
        assert_eq!(ursell(&w).unwrap(), 0.0);
        let path = EdgeWeightMatrix::from_fn(3, |i, j| if (i, j) == (0, 2) { 0.0 } else { -1.0 });
        assert!(is_cluster(&path));
    }

    #[test]
    fn min_cost_examples() {
        let c = EdgeWeightMatrix::constant(2, 0.7);
        assert_eq!(min_connectivity_cost(&c).unwrap(), 0.7);
        assert_eq!(min_connectivity_cost(&EdgeWeightMatrix::constant(3, 1.0)).unwrap(), 2.0);
        let c = EdgeWeightMatrix::from_fn(3, |i, j| if (i, j) == (1, 2) { 5.0 } else { 1.0 });
        assert_eq!(min_connectivity_cost(&c).unwrap(), 2.0);
        assert_eq!(min_connectivity_cost(&EdgeWeightMatrix::constant(1, 0.0)).unwrap(), 0.0);
        let neg = EdgeWeightMatrix::constant(3, -0.1);
        assert!(min_connectivity_cost(&neg).is_err());
    }

    fn bell(m: usize) -> usize {
        // Bell triangle
        let mut row = vec![1usize];
        for _ in 1..m {
            let mut next = vec![*row.last().unwrap()];
            for &x in &row {
                next.push(next.last().unwrap() + x);
            }
            row = next;
        }
        *row.last().unwrap()
    }

    #[test]
    fn set_partition_counts() {
        assert_eq!(enumerate_set_partitions(1).unwrap().count(), 1);
        assert_eq!(enumerate_set_partitions(3).unwrap().count(), 5);
        assert_eq!(enumerate_set_partitions(4).unwrap().count(), 15);
        for m in 1..=8 {
            assert_eq!(enumerate_set_partitions(m).unwrap().count(), bell(m));
        }
        assert!(enumerate_set_partitions(0).is_err());
        assert!(enumerate_set_partitions(13).is_err());
    }

    #[test]
    fn set_partitions_are_valid_and_distinct() {
        let parts: Vec<_> = enumerate_set_partitions(5).unwrap().collect();
        let unique: std::collections::HashSet<_> = parts.iter().cloned().collect();
        assert_eq!(unique.len(), parts.len());
        for p in parts {
            assert!(SetPartition::new(p.m(), p.blocks().to_vec()).is_ok());
        }
        let three: Vec<_> = enumerate_set_partitions(3).unwrap().map(|p| p.blocks().to_vec()).collect();
        assert!(three.contains(&vec![vec![0, 2], vec![1]]));
    }

    #[test]
    fn set_partition_validation() {
        assert!(SetPartition::new(3, vec![vec![0, 1], vec![]]).is_err());
        assert!(SetPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(SetPartition::new(3, vec![vec![0, 1]]).is_err());
    }

    fn brute_min_cost(c: &EdgeWeightMatrix<f64>) -> f64 {
        let n = c.n();
        (0..ConnectedGraphs::mask_space(n))
            .map(|m| LabeledGraph::from_mask(n, m))
            .filter(is_connected)
            .map(|g| g.edges().map(|(i, j)| *c.get(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    fn brute_ursell(w: &EdgeWeightMatrix<f64>) -> f64 {
        let n = w.n();
        let s: f64 = enumerate_connected_graphs(n)
            .unwrap()
            .map(|g| g.edges().map(|(i, j)| *w.get(i, j)).product::<f64>())
            .sum();
        s / factorial_f64(n)
    }

    proptest! {
        #[test]
        fn mst_matches_brute_force(n in 2usize..=6, seed in any::<u64>()) {
            let mut state = seed;
            let c = EdgeWeightMatrix::from_fn(n, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 * 3.0
            });
            let fast = min_connectivity_cost(&c).unwrap();
            prop_assert!((fast - brute_min_cost(&c)).abs() < 1e-12);
        }

        #[test]
        fn ursell_is_permutation_symmetric(
            vals in proptest::collection::vec(-1.0f64..0.0, 15),
            perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let w = EdgeWeightMatrix::from_fn(6, |i, j| vals[pair_index(i, j)]);
            let a = ursell(&w).unwrap();
            let b = ursell(&w.permuted(&perm)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn ursell_matches_graph_enumeration(
            n in 2usize..=5,
            vals in proptest::collection::vec(-1.0f64..1.0, 10),
            zero_mask in any::<u16>(),
        ) {
            let w = EdgeWeightMatrix::from_fn(n, |i, j| {
                let k = pair_index(i, j);
                if zero_mask >> k & 1 == 1 { 0.0 } else { vals[k] }
            });
            let a = ursell(&w).unwrap();
            prop_assert!((a - brute_ursell(&w)).abs() < 1e-12);
            if !is_cluster(&w) {
                prop_assert_eq!(a, 0.0);
            }
        }
    }
}
