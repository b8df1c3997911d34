//! Difference networks: the graph of individual and pairwise-difference
//! measurements.
//!
//! A set of `m` quantities is represented as vertices `1..=m` of a graph
//! whose extra vertex `0` is the *origin*. An edge `(0, i)` is the
//! individual measurement of quantity `i`; an edge `(i, j)` with
//! `0 < i < j` measures the difference `x_i - x_j`. Each available edge
//! carries the per-sample statistical fluctuation `s_e` (the standard
//! deviation of a single sample), and optionally a per-sample cost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Identifier of a measurement edge, stored with endpoints in canonical
/// order `i < j`. Vertex 0 is the origin, so `(0, i)` is the individual
/// measurement of quantity `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId {
    i: usize,
    j: usize,
}

impl EdgeId {
    /// Canonicalizes the endpoint order. Panics if `a == b`; self-loops are
    /// not measurements.
    pub fn new(a: usize, b: usize) -> Self {
        assert!(a != b, "measurement edge needs two distinct vertices");
        if a < b {
            EdgeId { i: a, j: b }
        } else {
            EdgeId { i: b, j: a }
        }
    }

    /// The individual measurement of quantity `q` (edge from the origin).
    pub fn individual(q: usize) -> Self {
        assert!(q > 0, "quantity indices start at 1");
        EdgeId { i: 0, j: q }
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn is_individual(&self) -> bool {
        self.i == 0
    }

    /// The endpoint that is not `v`. Panics if `v` is not an endpoint.
    pub fn other(&self, v: usize) -> usize {
        if v == self.i {
            self.j
        } else {
            assert_eq!(v, self.j, "vertex {v} is not an endpoint of {self}");
            self.i
        }
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EdgeData {
    s: f64,
    tau: Option<f64>,
}

/// The measurement network: `m` quantities plus the origin vertex, and the
/// available measurement edges with their per-sample fluctuations. Absent
/// edges mean the measurement is unavailable.
///
/// Values are immutable after construction; every operation in this crate
/// takes networks by shared reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceNetwork {
    m: usize,
    edges: BTreeMap<EdgeId, EdgeData>,
}

impl DifferenceNetwork {
    /// Number of quantities (the graph has `m + 1` vertices).
    pub fn quantity_count(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    /// Per-sample fluctuation of edge `e`, if the measurement is available.
    pub fn fluctuation(&self, e: EdgeId) -> Option<f64> {
        self.edges.get(&e).map(|d| d.s)
    }

    /// Per-sample cost of edge `e`, if one was declared.
    pub fn cost(&self, e: EdgeId) -> Option<f64> {
        self.edges.get(&e).and_then(|d| d.tau)
    }

    /// Edges in canonical (lexicographic) order.
    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    /// `(edge, fluctuation, cost)` triplets in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, f64, Option<f64>)> + '_ {
        self.edges.iter().map(|(&e, d)| (e, d.s, d.tau))
    }

    /// Same edge set with different fluctuations; used when re-optimizing
    /// under updated fluctuation estimates.
    pub fn with_fluctuations(&self, s: &BTreeMap<EdgeId, f64>) -> Result<DifferenceNetwork> {
        let mut edges = BTreeMap::new();
        for (&e, d) in &self.edges {
            let sv = *s.get(&e).ok_or(Error::MissingEstimate(e))?;
            if !(sv > 0.0) || !sv.is_finite() {
                return Err(Error::NonPositiveFluctuation(e));
            }
            edges.insert(e, EdgeData { s: sv, tau: d.tau });
        }
        Ok(DifferenceNetwork { m: self.m, edges })
    }

    /// True when every quantity is reachable from the origin through the
    /// given edge subset.
    pub fn connects_to_origin(&self, edges: &BTreeSet<EdgeId>) -> bool {
        reachable_from_origin(edges, self.m).iter().all(|&r| r)
    }
}

/// Builds a validated network over `m` quantities from
/// `(edge, fluctuation, cost)` entries.
pub fn build_network(
    m: usize,
    entries: impl IntoIterator<Item = (EdgeId, f64, Option<f64>)>,
) -> Result<DifferenceNetwork> {
    assert!(m >= 1, "need at least one quantity");
    let mut edges = BTreeMap::new();
    for (e, s, tau) in entries {
        if e.j() > m {
            return Err(Error::IndexOutOfRange { index: e.j(), m });
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NonPositiveFluctuation(e));
        }
        if let Some(t) = tau {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::MissingCost(e));
            }
        }
        if edges.insert(e, EdgeData { s, tau }).is_some() {
            return Err(Error::DuplicateEdge(e));
        }
    }
    Ok(DifferenceNetwork { m, edges })
}

/// Builds the complete network on `m` quantities with fluctuations supplied
/// per edge.
pub fn complete_network(m: usize, mut s: impl FnMut(EdgeId) -> f64) -> Result<DifferenceNetwork> {
    let mut entries = Vec::new();
    for i in 0..=m {
        for j in (i + 1)..=m {
            let e = EdgeId::new(i, j);
            entries.push((e, s(e), None));
        }
    }
    build_network(m, entries)
}

/// A sampling plan: nonnegative per-edge sample counts summing to the total
/// budget `N` (within relative tolerance 1e-9).
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    entries: BTreeMap<EdgeId, f64>,
    budget: f64,
}

impl Allocation {
    pub const BUDGET_RTOL: f64 = 1e-9;

    pub fn new(entries: BTreeMap<EdgeId, f64>, budget: f64) -> Result<Self> {
        assert!(budget > 0.0 && budget.is_finite(), "budget must be positive");
        for (&e, &n) in &entries {
            if n < 0.0 || !n.is_finite() {
                return Err(Error::NegativeAllocation { edge: e, value: n });
            }
        }
        let sum: f64 = entries.values().sum();
        if (sum - budget).abs() > Self::BUDGET_RTOL * budget.max(1.0) {
            return Err(Error::BudgetMismatch { sum, budget });
        }
        Ok(Allocation { entries, budget })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (EdgeId, f64)>, budget: f64) -> Result<Self> {
        Self::new(pairs.into_iter().collect(), budget)
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Sample count on edge `e`; 0 for edges the plan does not fund.
    pub fn samples(&self, e: EdgeId) -> f64 {
        self.entries.get(&e).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, f64)> + '_ {
        self.entries.iter().map(|(&e, &n)| (e, n))
    }

    /// Edges with strictly positive sample counts.
    pub fn support(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.entries
            .iter()
            .filter(|(_, &n)| n > 0.0)
            .map(|(&e, _)| e)
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    /// Per-edge fractions `n_e / N` (zero entries preserved).
    pub fn fractions(&self) -> BTreeMap<EdgeId, f64> {
        self.entries
            .iter()
            .map(|(&e, &n)| (e, n / self.budget))
            .collect()
    }

    /// True when every entry is an exact integer.
    pub fn is_integral(&self) -> bool {
        self.entries.values().all(|n| n.fract() == 0.0)
    }
}

/// Total cost `sum_e n_e * tau_e` of an allocation on a cost-annotated
/// network.
pub fn total_cost(net: &DifferenceNetwork, alloc: &Allocation) -> Result<f64> {
    let mut acc = 0.0;
    for (e, n) in alloc.iter() {
        if n == 0.0 {
            continue;
        }
        if !net.has_edge(e) {
            return Err(Error::UnknownEdge(e));
        }
        let tau = net.cost(e).ok_or(Error::MissingCost(e))?;
        acc += n * tau;
    }
    Ok(acc)
}

/// One observed measurement: the estimate, the number of samples that
/// produced it, and the empirical per-sample fluctuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub samples: f64,
    pub fluctuation: f64,
}

/// Observed values with their sample counts and empirical fluctuations. The
/// value on edge `(i, j)` with `i < j` estimates `x_i - x_j`; on `(0, i)` it
/// estimates `x_i` directly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementSet {
    entries: BTreeMap<EdgeId, Measurement>,
}

impl MeasurementSet {
    pub fn new(entries: BTreeMap<EdgeId, Measurement>) -> Result<Self> {
        for (&e, meas) in &entries {
            if !(meas.samples > 0.0) {
                return Err(Error::InvalidMeasurement {
                    edge: e,
                    reason: "sample count must be positive",
                });
            }
            if !(meas.fluctuation > 0.0) || !meas.fluctuation.is_finite() {
                return Err(Error::InvalidMeasurement {
                    edge: e,
                    reason: "fluctuation must be positive",
                });
            }
        }
        Ok(MeasurementSet { entries })
    }

    pub fn get(&self, e: EdgeId) -> Option<&Measurement> {
        self.entries.get(&e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, &Measurement)> + '_ {
        self.entries.iter().map(|(&e, m)| (e, m))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Result of [`cost_transform`]: the cost-scaled network together with the
/// original costs, so cost-unit allocations can be mapped back to raw
/// sample counts.
#[derive(Debug, Clone)]
pub struct CostTransform {
    scaled: DifferenceNetwork,
    costs: BTreeMap<EdgeId, f64>,
}

impl CostTransform {
    /// The network with `s' = s * sqrt(tau)` and unit costs. Budgets quoted
    /// against this network are in cost units.
    pub fn network(&self) -> &DifferenceNetwork {
        &self.scaled
    }

    /// Maps a cost-unit allocation `n'` back to raw sample counts
    /// `n = n' / tau`. The returned allocation's budget is the raw sample
    /// total; its total *cost* on the original network equals the cost-unit
    /// budget.
    pub fn to_raw_samples(&self, alloc: &Allocation) -> Result<Allocation> {
        let mut entries = BTreeMap::new();
        let mut total = 0.0;
        for (e, n) in alloc.iter() {
            let tau = *self.costs.get(&e).ok_or(Error::UnknownEdge(e))?;
            let raw = n / tau;
            total += raw;
            entries.insert(e, raw);
        }
        Allocation::new(entries, total)
    }
}

/// Rescales a fully cost-annotated network so that the budget constraint
/// `sum n_e tau_e = N` becomes the plain sum constraint on the transformed
/// variables: `n' = n * tau` against fluctuations `s' = s * sqrt(tau)`.
pub fn cost_transform(net: &DifferenceNetwork) -> Result<CostTransform> {
    let mut entries = Vec::new();
    let mut costs = BTreeMap::new();
    for (e, s, tau) in net.edges() {
        let tau = tau.ok_or(Error::MissingCost(e))?;
        entries.push((e, s * tau.sqrt(), Some(1.0)));
        costs.insert(e, tau);
    }
    let scaled = build_network(net.quantity_count(), entries)?;
    Ok(CostTransform { scaled, costs })
}

/// Outcome of [`contract_references`]: the reduced network plus the mapping
/// from new quantity indices back to the original ones.
#[derive(Debug, Clone)]
pub struct ReferenceContraction {
    pub network: DifferenceNetwork,
    /// `kept[q - 1]` is the original index of new quantity `q`.
    pub kept: Vec<usize>,
}

impl ReferenceContraction {
    pub fn original_index(&self, new_q: usize) -> usize {
        self.kept[new_q - 1]
    }
}

/// Merges quantities with externally known values into the origin vertex.
///
/// Difference edges to a known quantity become individual-measurement edges
/// of the other endpoint; edges between two known quantities disappear. When
/// several channels collapse onto the same individual edge, only the one
/// with the smallest fluctuation is kept (per-sample information along the
/// same direction scales as `1/s^2`, so an optimal design never splits
/// across the weaker channels).
pub fn contract_references(
    net: &DifferenceNetwork,
    known: &BTreeSet<usize>,
) -> Result<ReferenceContraction> {
    let m = net.quantity_count();
    for &k in known {
        if k == 0 || k > m {
            return Err(Error::IndexOutOfRange { index: k, m });
        }
    }
    let kept: Vec<usize> = (1..=m).filter(|q| !known.contains(q)).collect();
    if kept.is_empty() {
        return Err(Error::AllKnown);
    }
    let mut new_index = BTreeMap::new();
    for (new_pos, &old) in kept.iter().enumerate() {
        new_index.insert(old, new_pos + 1);
    }

    let mut edges: BTreeMap<EdgeId, EdgeData> = BTreeMap::new();
    for (e, s, tau) in net.edges() {
        let (a, b) = e.endpoints();
        let a_known = a == 0 || known.contains(&a);
        let b_known = known.contains(&b);
        let mapped = match (a_known, b_known) {
            (true, true) => continue,
            (true, false) => EdgeId::individual(new_index[&b]),
            (false, true) => EdgeId::individual(new_index[&a]),
            (false, false) => EdgeId::new(new_index[&a], new_index[&b]),
        };
        let data = EdgeData { s, tau };
        edges
            .entry(mapped)
            .and_modify(|cur| {
                if s < cur.s {
                    *cur = data;
                }
            })
            .or_insert(data);
    }
    Ok(ReferenceContraction {
        network: DifferenceNetwork {
            m: kept.len(),
            edges,
        },
        kept,
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Minimum spanning tree of the fluctuation-weighted graph, by Kruskal's
/// algorithm. Ties are broken by lexicographic edge id, so the result is
/// deterministic even for degenerate weights.
pub fn minimum_spanning_tree(net: &DifferenceNetwork) -> Result<BTreeSet<EdgeId>> {
    let m = net.quantity_count();
    let mut order: Vec<(f64, EdgeId)> = net.edges().map(|(e, s, _)| (s, e)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut uf = UnionFind::new(m + 1);
    let mut tree = BTreeSet::new();
    for (_, e) in order {
        if uf.union(e.i(), e.j()) {
            tree.insert(e);
            if tree.len() == m {
                return Ok(tree);
            }
        }
    }
    Err(Error::Disconnected)
}

fn adjacency(edges: &BTreeSet<EdgeId>, m: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m + 1];
    for e in edges {
        adj[e.i()].push(e.j());
        adj[e.j()].push(e.i());
    }
    adj
}

fn reachable_from_origin(edges: &BTreeSet<EdgeId>, m: usize) -> Vec<bool> {
    let adj = adjacency(edges, m);
    let mut seen = vec![false; m + 1];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn component_labels(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = count;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Bridges of the graph, by depth-first low-link search.
fn bridges(edges: &BTreeSet<EdgeId>, m: usize) -> Vec<EdgeId> {
    let n = m + 1;
    // Adjacency with edge indices so parallel traversal of the same edge is
    // distinguished from a back edge.
    let edge_list: Vec<EdgeId> = edges.iter().copied().collect();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (idx, e) in edge_list.iter().enumerate() {
        adj[e.i()].push((e.j(), idx));
        adj[e.j()].push((e.i(), idx));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut out = Vec::new();
    let mut timer = 0usize;
    // Iterative DFS: (vertex, incoming edge index, next neighbor position).
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, in_edge, ref mut pos)) = stack.last_mut() {
            if *pos < adj[u].len() {
                let (v, idx) = adj[u][*pos];
                *pos += 1;
                if idx == in_edge {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, idx, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&mut (p, _, _)) = stack.last_mut() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        out.push(EdgeId::new(p, u));
                    }
                }
            }
        }
    }
    out
}

/// Minimum number of edges (drawn from the complete graph on the `m + 1`
/// vertices) whose addition makes the given edge set `k`-edge-connected,
/// for `k` in {1, 2}.
///
/// For `k = 2` this is the classical bridge-connectivity augmentation
/// count over the bridge forest: `max(ceil(leaves / 2) + isolated,
/// components - 1)`. The two-vertex graph (`m = 1`) is reported with the
/// same formula even though the complete graph on two vertices has no
/// second edge to offer.
pub fn connectivity_deficit(edges: &BTreeSet<EdgeId>, m: usize, k: usize) -> usize {
    assert!(k == 1 || k == 2, "only k in {{1, 2}} is supported");
    let adj = adjacency(edges, m);
    let (labels, comps) = component_labels(&adj);
    if k == 1 {
        return comps - 1;
    }

    // Condense two-edge-connected components: remove bridges, label the
    // remainder, then the bridges become the edges of a forest.
    let bridge_edges = bridges(edges, m);
    let bridge_set: BTreeSet<EdgeId> = bridge_edges.iter().copied().collect();
    let keep: BTreeSet<EdgeId> = edges.difference(&bridge_set).copied().collect();
    let keep_adj = adjacency(&keep, m);
    let (tecc, tecc_count) = component_labels(&keep_adj);
    if tecc_count == 1 {
        return 0;
    }

    let mut degree = vec![0usize; tecc_count];
    for e in &bridge_edges {
        degree[tecc[e.i()]] += 1;
        degree[tecc[e.j()]] += 1;
    }
    // Components of the original graph partition the forest's vertices;
    // count isolated forest vertices and leaves.
    let mut comp_sizes = vec![0usize; comps];
    let mut seen_comp_of_tecc = vec![usize::MAX; tecc_count];
    for v in 0..=m {
        seen_comp_of_tecc[tecc[v]] = labels[v];
    }
    for &c in &seen_comp_of_tecc {
        comp_sizes[c] += 1;
    }
    let isolated = comp_sizes.iter().filter(|&&sz| sz == 1).count();
    let leaves = degree.iter().filter(|&&d| d == 1).count();
    (leaves.div_ceil(2) + isolated).max(comps - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(m: usize, entries: &[((usize, usize), f64)]) -> DifferenceNetwork {
        build_network(
            m,
            entries
                .iter()
                .map(|&((i, j), s)| (EdgeId::new(i, j), s, None)),
        )
        .unwrap()
    }

    #[test]
    fn edge_id_canonical_order() {
        let e = EdgeId::new(3, 1);
        assert_eq!(e.endpoints(), (1, 3));
        assert!(EdgeId::new(0, 2).is_individual());
        assert!(EdgeId::individual(2) < EdgeId::new(1, 2));
    }

    #[test]
    #[should_panic]
    fn edge_id_rejects_self_loop() {
        let _ = EdgeId::new(2, 2);
    }

    #[test]
    fn build_smallest_network() {
        let n = net(1, &[((0, 1), 1.0)]);
        assert_eq!(n.quantity_count(), 1);
        assert_eq!(n.edge_count(), 1);
        assert_eq!(n.fluctuation(EdgeId::individual(1)), Some(1.0));
    }

    #[test]
    fn build_complete_two_quantity_network() {
        let n = net(2, &[((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.0)]);
        assert_eq!(n.edge_count(), 3);
        assert!(n.has_edge(EdgeId::new(1, 2)));
    }

    #[test]
    fn build_network_from_heavy_atom_counts() {
        // s_i = zeta * sqrt(h_i), s_ij = zeta * sqrt(max(h_ij, h_ji)).
        let zeta = 0.5;
        let h: [f64; 8] = [22.0, 25.0, 24.0, 27.0, 23.0, 26.0, 25.0, 28.0];
        let m = h.len();
        let mut entries = Vec::new();
        for q in 1..=m {
            entries.push((EdgeId::individual(q), zeta * h[q - 1].sqrt(), None));
        }
        for i in 1..=m {
            for j in (i + 1)..=m {
                let hij = (h[i - 1] - h[j - 1]).abs() + 4.0;
                entries.push((EdgeId::new(i, j), zeta * hij.sqrt(), None));
            }
        }
        let n = build_network(m, entries).unwrap();
        assert_eq!(n.edge_count(), m * (m + 1) / 2);
        assert_eq!(
            n.fluctuation(EdgeId::individual(1)),
            Some(zeta * 22.0f64.sqrt())
        );
    }

    #[test]
    fn build_network_rejects_bad_input() {
        assert!(matches!(
            build_network(1, [(EdgeId::new(0, 1), 0.0, None)]),
            Err(Error::NonPositiveFluctuation(_))
        ));
        assert!(matches!(
            build_network(
                1,
                [
                    (EdgeId::new(0, 1), 1.0, None),
                    (EdgeId::new(0, 1), 2.0, None)
                ]
            ),
            Err(Error::DuplicateEdge(_))
        ));
        assert!(matches!(
            build_network(1, [(EdgeId::new(0, 2), 1.0, None)]),
            Err(Error::IndexOutOfRange { index: 2, m: 1 })
        ));
    }

    #[test]
    fn allocation_validates_sum_and_sign() {
        let e = EdgeId::new(0, 1);
        assert!(Allocation::from_pairs([(e, 2.0)], 2.0).is_ok());
        assert!(matches!(
            Allocation::from_pairs([(e, -0.5), (EdgeId::new(0, 2), 2.5)], 2.0),
            Err(Error::NegativeAllocation { .. })
        ));
        assert!(matches!(
            Allocation::from_pairs([(e, 1.0)], 2.0),
            Err(Error::BudgetMismatch { .. })
        ));
    }

    #[test]
    fn cost_transform_identity_when_unit_costs() {
        let n = build_network(
            2,
            [
                (EdgeId::new(0, 1), 1.5, Some(1.0)),
                (EdgeId::new(0, 2), 2.5, Some(1.0)),
            ],
        )
        .unwrap();
        let t = cost_transform(&n).unwrap();
        assert_eq!(t.network().fluctuation(EdgeId::new(0, 1)), Some(1.5));
        assert_eq!(t.network().fluctuation(EdgeId::new(0, 2)), Some(2.5));
    }

    #[test]
    fn cost_transform_scales_fluctuation() {
        let n = build_network(1, [(EdgeId::new(0, 1), 2.0, Some(4.0))]).unwrap();
        let t = cost_transform(&n).unwrap();
        assert_eq!(t.network().fluctuation(EdgeId::new(0, 1)), Some(4.0));
    }

    #[test]
    fn cost_transform_requires_costs() {
        let n = net(1, &[((0, 1), 1.0)]);
        assert!(matches!(cost_transform(&n), Err(Error::MissingCost(_))));
    }

    #[test]
    fn cost_transform_round_trip_preserves_total_cost() {
        let n = build_network(
            2,
            [
                (EdgeId::new(0, 1), 1.0, Some(1.0)),
                (EdgeId::new(0, 2), 1.0, Some(4.0)),
            ],
        )
        .unwrap();
        let t = cost_transform(&n).unwrap();
        // A-optimal on two independent individual channels is n' ~ s'.
        let budget = 12.0;
        let s1 = 1.0;
        let s2 = 2.0;
        let n1 = budget * s1 / (s1 + s2);
        let n2 = budget * s2 / (s1 + s2);
        let cost_units = Allocation::from_pairs(
            [(EdgeId::new(0, 1), n1), (EdgeId::new(0, 2), n2)],
            budget,
        )
        .unwrap();
        let raw = t.to_raw_samples(&cost_units).unwrap();
        assert!((raw.samples(EdgeId::new(0, 1)) - n1).abs() < 1e-12);
        assert!((raw.samples(EdgeId::new(0, 2)) - n2 / 4.0).abs() < 1e-12);
        let cost = total_cost(&n, &raw).unwrap();
        assert!((cost - budget).abs() <= 1e-9 * budget);
    }

    #[test]
    fn contract_with_empty_known_set_is_identity() {
        let n = net(2, &[((0, 1), 1.0), ((0, 2), 2.0), ((1, 2), 0.5)]);
        let c = contract_references(&n, &BTreeSet::new()).unwrap();
        assert_eq!(c.network, n);
        assert_eq!(c.kept, vec![1, 2]);
    }

    #[test]
    fn contract_keeps_min_fluctuation_channel() {
        let n = net(
            3,
            &[
                ((0, 1), 2.0),
                ((0, 2), 1.0),
                ((0, 3), 1.0),
                ((1, 2), 1.0),
                ((1, 3), 0.5),
                ((2, 3), 1.0),
            ],
        );
        let known: BTreeSet<usize> = [3].into();
        let c = contract_references(&n, &known).unwrap();
        assert_eq!(c.network.quantity_count(), 2);
        assert_eq!(c.kept, vec![1, 2]);
        // Quantity 1 had channels s_1 = 2.0 and s_13 = 0.5; the latter wins.
        assert_eq!(c.network.fluctuation(EdgeId::individual(1)), Some(0.5));
        // Quantity 2 had channels s_2 = 1.0 and s_23 = 1.0; min is 1.0.
        assert_eq!(c.network.fluctuation(EdgeId::individual(2)), Some(1.0));
        assert_eq!(c.network.fluctuation(EdgeId::new(1, 2)), Some(1.0));
    }

    #[test]
    fn contract_rejects_all_known() {
        let n = net(1, &[((0, 1), 1.0)]);
        let known: BTreeSet<usize> = [1].into();
        assert!(matches!(
            contract_references(&n, &known),
            Err(Error::AllKnown)
        ));
    }

    #[test]
    fn mst_on_chain_weights() {
        let n = net(2, &[((0, 1), 1.0), ((1, 2), 1.0), ((0, 2), 10.0)]);
        let tree = minimum_spanning_tree(&n).unwrap();
        let expect: BTreeSet<EdgeId> = [EdgeId::new(0, 1), EdgeId::new(1, 2)].into();
        assert_eq!(tree, expect);
    }

    #[test]
    fn mst_ties_break_lexicographically() {
        let n = net(2, &[((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.0)]);
        let tree = minimum_spanning_tree(&n).unwrap();
        let expect: BTreeSet<EdgeId> = [EdgeId::new(0, 1), EdgeId::new(0, 2)].into();
        assert_eq!(tree, expect);
    }

    #[test]
    fn mst_of_constant_relative_error_network_is_the_chain() {
        // s_ij = s_j - s_i for sorted s makes the chain the unique MST.
        let s = [0.3, 0.45, 0.8, 1.2, 1.3];
        let m = s.len();
        let mut entries = Vec::new();
        for i in 1..=m {
            entries.push((EdgeId::individual(i), s[i - 1], None));
            for j in (i + 1)..=m {
                entries.push((EdgeId::new(i, j), s[j - 1] - s[i - 1], None));
            }
        }
        let n = build_network(m, entries).unwrap();
        let tree = minimum_spanning_tree(&n).unwrap();
        let expect: BTreeSet<EdgeId> = (0..m).map(|i| EdgeId::new(i, i + 1)).collect();
        assert_eq!(tree, expect);
    }

    #[test]
    fn mst_disconnected_errors() {
        let n = net(2, &[((0, 1), 1.0)]);
        assert!(matches!(
            minimum_spanning_tree(&n),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn deficit_of_cycle_is_zero() {
        let m = 4;
        let mut edges: BTreeSet<EdgeId> = (0..m).map(|i| EdgeId::new(i, i + 1)).collect();
        edges.insert(EdgeId::new(0, m));
        assert_eq!(connectivity_deficit(&edges, m, 2), 0);
    }

    #[test]
    fn deficit_of_tree_is_half_the_leaves() {
        // Star on 5 vertices: 4 leaves.
        let edges: BTreeSet<EdgeId> = (1..=4).map(EdgeId::individual).collect();
        assert_eq!(connectivity_deficit(&edges, 4, 1), 0);
        assert_eq!(connectivity_deficit(&edges, 4, 2), 2);
        // Path on 4 vertices: 2 leaves.
        let path: BTreeSet<EdgeId> = (0..3).map(|i| EdgeId::new(i, i + 1)).collect();
        assert_eq!(connectivity_deficit(&path, 3, 2), 1);
    }

    #[test]
    fn deficit_counts_components_for_k1() {
        let edges: BTreeSet<EdgeId> = [EdgeId::new(0, 1), EdgeId::new(2, 3)].into();
        assert_eq!(connectivity_deficit(&edges, 3, 1), 1);
    }
}
