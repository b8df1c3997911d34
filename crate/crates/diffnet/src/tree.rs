//! Constructive E-optimal designs from shortest-path trees.
//!
//! The largest eigenvalue of the covariance equals `1 / lambda_min(F)`, and
//! for difference networks the allocation maximizing `lambda_min(F)` is
//! supported on the tree of shortest paths (by total fluctuation) from the
//! origin. With `a_i` the path length to quantity `i` and `T_i` the subtree
//! hanging from `i`, the optimal samples on the tree edge into `i` are
//!
//! ```text
//! n_{i,parent(i)} = N * s_{i,parent(i)} * (sum_{j in T_i} a_j) / (sum_k a_k^2)
//! ```
//!
//! which achieves `||C||_2 = (sum_k a_k^2) / N`, with `a` itself the extreme
//! eigenvector: `F a = (N / sum_k a_k^2) a`. The construction costs `O(m^2)`
//! time (the dense shortest-path scan) and `O(m)` extra space.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::{Allocation, DifferenceNetwork, EdgeId};

/// Tree of shortest paths from the origin, with per-vertex path lengths.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    parent: Vec<usize>,
    dist: Vec<f64>,
    /// Vertices in the order they were settled; parents always precede
    /// children because fluctuations are strictly positive.
    settle_order: Vec<usize>,
}

impl ShortestPathTree {
    /// Parent of vertex `v >= 1` on its shortest path from the origin.
    pub fn parent(&self, v: usize) -> usize {
        assert!(v >= 1 && v < self.parent.len());
        self.parent[v]
    }

    /// Shortest-path length `a_v` (total fluctuation from the origin);
    /// `a_0 = 0`.
    pub fn dist(&self, v: usize) -> f64 {
        self.dist[v]
    }

    pub fn quantity_count(&self) -> usize {
        self.parent.len() - 1
    }

    /// The m tree edges `(v, parent(v))`.
    pub fn edges(&self) -> BTreeSet<EdgeId> {
        (1..self.parent.len())
            .map(|v| EdgeId::new(v, self.parent[v]))
            .collect()
    }
}

/// Dense-graph Dijkstra from the origin. Ties — equal distance reachable
/// through different parents — resolve to the smallest parent index, so
/// degenerate networks still produce a deterministic tree.
pub fn shortest_path_tree(net: &DifferenceNetwork) -> Result<ShortestPathTree> {
    let m = net.quantity_count();
    let n = m + 1;
    let mut w = vec![f64::INFINITY; n * n];
    for (e, s, _) in net.edges() {
        let (a, b) = e.endpoints();
        w[a * n + b] = s;
        w[b * n + a] = s;
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut settle_order = Vec::with_capacity(n);
    dist[0] = 0.0;
    parent[0] = 0;
    for _ in 0..n {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..n {
            if !settled[v] && dist[v] < best {
                best = dist[v];
                u = v;
            }
        }
        if u == usize::MAX {
            return Err(Error::Disconnected);
        }
        settled[u] = true;
        settle_order.push(u);
        for v in 0..n {
            if settled[v] {
                continue;
            }
            let sw = w[u * n + v];
            if sw.is_infinite() {
                continue;
            }
            let cand = dist[u] + sw;
            if cand < dist[v] || (cand == dist[v] && u < parent[v]) {
                dist[v] = cand;
                parent[v] = u;
            }
        }
    }
    Ok(ShortestPathTree {
        parent,
        dist,
        settle_order,
    })
}

/// E-optimal allocation by construction, along with the resulting
/// `||C||_2 = (sum_i a_i^2) / N`.
pub fn e_optimal(net: &DifferenceNetwork, budget: f64) -> Result<(Allocation, f64)> {
    assert!(budget > 0.0, "budget must be positive");
    let tree = shortest_path_tree(net)?;
    let m = tree.quantity_count();

    // Post-order accumulation of the subtree sums of a.
    let mut subtree = tree.dist.clone();
    for &v in tree.settle_order.iter().rev() {
        if v == 0 {
            continue;
        }
        subtree[tree.parent[v]] += subtree[v];
    }
    let sum_sq: f64 = (1..=m).map(|v| tree.dist[v] * tree.dist[v]).sum();

    let mut entries = std::collections::BTreeMap::new();
    for v in 1..=m {
        let e = EdgeId::new(v, tree.parent[v]);
        let s = net.fluctuation(e).expect("tree edge exists in the network");
        entries.insert(e, budget * s * subtree[v] / sum_sq);
    }
    let total: f64 = entries.values().sum();
    let alloc = Allocation::new(entries, total)?;
    Ok((alloc, sum_sq / budget))
}

/// Covariance of a tree-supported allocation without matrix inversion:
/// `C_ij = sum over shared path edges of s_e^2 / n_e`.
pub fn tree_covariance(
    net: &DifferenceNetwork,
    tree: &ShortestPathTree,
    alloc: &Allocation,
) -> Result<DMatrix<f64>> {
    let m = tree.quantity_count();
    let tree_edges = tree.edges();
    for (e, n) in alloc.iter() {
        if n > 0.0 && !tree_edges.contains(&e) {
            return Err(Error::AllocationOffTree(e));
        }
    }
    // Cumulative variance along each root path.
    let mut acc = vec![0.0f64; m + 1];
    let mut depth = vec![0usize; m + 1];
    for &v in &tree.settle_order {
        if v == 0 {
            continue;
        }
        let p = tree.parent[v];
        let e = EdgeId::new(v, p);
        let n = alloc.samples(e);
        if n <= 0.0 {
            return Err(Error::ZeroAllocationOnTreeEdge { edge: e, value: n });
        }
        let s = net.fluctuation(e).expect("tree edge exists in the network");
        acc[v] = acc[p] + s * s / n;
        depth[v] = depth[p] + 1;
    }

    let mut c = DMatrix::zeros(m, m);
    for i in 1..=m {
        c[(i - 1, i - 1)] = acc[i];
        for j in (i + 1)..=m {
            // Lowest common ancestor by climbing.
            let (mut a, mut b) = (i, j);
            while depth[a] > depth[b] {
                a = tree.parent[a];
            }
            while depth[b] > depth[a] {
                b = tree.parent[b];
            }
            while a != b {
                a = tree.parent[a];
                b = tree.parent[b];
            }
            c[(i - 1, j - 1)] = acc[a];
            c[(j - 1, i - 1)] = acc[a];
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{covariance, fisher_matrix, objective, Objective};
    use crate::network::{build_network, complete_network};

    fn chain_net() -> DifferenceNetwork {
        build_network(
            2,
            [
                (EdgeId::new(0, 1), 1.0, None),
                (EdgeId::new(1, 2), 1.0, None),
                (EdgeId::new(0, 2), 10.0, None),
            ],
        )
        .unwrap()
    }

    #[test]
    fn tree_of_chain_network() {
        let tree = shortest_path_tree(&chain_net()).unwrap();
        assert_eq!(tree.parent(1), 0);
        assert_eq!(tree.parent(2), 1);
        assert_eq!(tree.dist(1), 1.0);
        assert_eq!(tree.dist(2), 2.0);
    }

    #[test]
    fn tree_of_star_network() {
        let net = build_network(
            2,
            [
                (EdgeId::new(0, 1), 1.0, None),
                (EdgeId::new(0, 2), 1.0, None),
                (EdgeId::new(1, 2), 10.0, None),
            ],
        )
        .unwrap();
        let tree = shortest_path_tree(&net).unwrap();
        assert_eq!(tree.parent(1), 0);
        assert_eq!(tree.parent(2), 0);
        assert_eq!(tree.dist(1), 1.0);
        assert_eq!(tree.dist(2), 1.0);
    }

    #[test]
    fn tree_of_single_quantity() {
        let net = build_network(1, [(EdgeId::new(0, 1), 0.7, None)]).unwrap();
        let tree = shortest_path_tree(&net).unwrap();
        assert_eq!(tree.parent(1), 0);
        assert_eq!(tree.dist(1), 0.7);
    }

    #[test]
    fn tree_requires_connectivity() {
        let net = build_network(2, [(EdgeId::new(0, 1), 1.0, None)]).unwrap();
        assert!(matches!(
            shortest_path_tree(&net),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn e_optimal_on_chain() {
        let budget = 10.0;
        let (alloc, norm) = e_optimal(&chain_net(), budget).unwrap();
        // a = (1, 2), sum a^2 = 5, subtree sums 3 and 2.
        assert!((alloc.samples(EdgeId::new(0, 1)) - 0.6 * budget).abs() < 1e-12);
        assert!((alloc.samples(EdgeId::new(1, 2)) - 0.4 * budget).abs() < 1e-12);
        assert!((norm - 5.0 / budget).abs() < 1e-12);
    }

    #[test]
    fn e_optimal_on_star() {
        let net = complete_network(2, |e| if e.is_individual() { 1.0 } else { 10.0 }).unwrap();
        let (alloc, norm) = e_optimal(&net, 1.0).unwrap();
        assert!((alloc.samples(EdgeId::individual(1)) - 0.5).abs() < 1e-12);
        assert!((alloc.samples(EdgeId::individual(2)) - 0.5).abs() < 1e-12);
        assert!((norm - 2.0).abs() < 1e-12);
    }

    #[test]
    fn e_optimal_single_quantity() {
        let net = build_network(1, [(EdgeId::new(0, 1), 2.0, None)]).unwrap();
        let (alloc, norm) = e_optimal(&net, 5.0).unwrap();
        assert!((alloc.samples(EdgeId::individual(1)) - 5.0).abs() < 1e-12);
        assert!((norm - 4.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn e_optimal_matches_grid_search_on_chain() {
        // Brute-force the simplex of allocations over the two tree edges
        // plus the slow direct edge.
        let net = chain_net();
        let budget = 1.0;
        let (_, predicted) = e_optimal(&net, budget).unwrap();
        let edges: Vec<EdgeId> = net.edge_ids().collect();
        let steps = 200;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let k = steps - i - j;
                let n = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    k as f64 / steps as f64,
                ];
                let alloc = Allocation::from_pairs(
                    edges.iter().copied().zip(n.iter().copied()),
                    budget,
                )
                .unwrap();
                let f = fisher_matrix(&net, &alloc).unwrap();
                if let Ok(c) = covariance(&f) {
                    if let Ok(v) = objective(&c, Objective::E) {
                        best = best.min(v);
                    }
                }
            }
        }
        assert!(
            predicted <= best + 1e-9,
            "constructive {predicted} vs grid {best}"
        );
        assert!((predicted - best).abs() < 0.05 * predicted);
    }

    #[test]
    fn eigenpair_identity_holds() {
        let (alloc, norm) = e_optimal(&chain_net(), 1.0).unwrap();
        let f = fisher_matrix(&chain_net(), &alloc).unwrap();
        let tree = shortest_path_tree(&chain_net()).unwrap();
        let a = nalgebra::DVector::from_vec(vec![tree.dist(1), tree.dist(2)]);
        let lambda = 1.0 / norm;
        let resid = (&f * &a - &a * lambda).norm() / (lambda * a.norm());
        assert!(resid < 1e-12);
    }

    #[test]
    fn tree_covariance_on_chain() {
        let net = chain_net();
        let budget = 1.0;
        let (alloc, norm) = e_optimal(&net, budget).unwrap();
        let tree = shortest_path_tree(&net).unwrap();
        let c = tree_covariance(&net, &tree, &alloc).unwrap();
        assert!((c[(0, 0)] - 5.0 / 3.0).abs() < 1e-12);
        assert!((c[(0, 1)] - 5.0 / 3.0).abs() < 1e-12);
        assert!((c[(1, 1)] - 25.0 / 6.0).abs() < 1e-12);
        assert!((objective(&c, Objective::E).unwrap() - norm).abs() < 1e-10);
    }

    #[test]
    fn tree_covariance_of_star_is_diagonal() {
        let net = complete_network(2, |e| if e.is_individual() { 1.0 } else { 10.0 }).unwrap();
        let tree = shortest_path_tree(&net).unwrap();
        let alloc = Allocation::from_pairs(
            [(EdgeId::individual(1), 0.25), (EdgeId::individual(2), 0.75)],
            1.0,
        )
        .unwrap();
        let c = tree_covariance(&net, &tree, &alloc).unwrap();
        assert_eq!(c[(0, 1)], 0.0);
        assert!((c[(0, 0)] - 4.0).abs() < 1e-12);
        assert!((c[(1, 1)] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tree_covariance_matches_inverse_fisher() {
        let net = chain_net();
        let (alloc, _) = e_optimal(&net, 3.0).unwrap();
        let tree = shortest_path_tree(&net).unwrap();
        let direct = tree_covariance(&net, &tree, &alloc).unwrap();
        let via_fisher = covariance(&fisher_matrix(&net, &alloc).unwrap()).unwrap();
        assert!((&direct - &via_fisher).norm() < 1e-8 * direct.norm());
    }

    #[test]
    fn tree_covariance_rejects_unfunded_tree_edge() {
        let net = chain_net();
        let tree = shortest_path_tree(&net).unwrap();
        let alloc = Allocation::from_pairs([(EdgeId::new(0, 1), 1.0)], 1.0).unwrap();
        assert!(matches!(
            tree_covariance(&net, &tree, &alloc),
            Err(Error::ZeroAllocationOnTreeEdge { .. })
        ));
    }

    #[test]
    fn tree_covariance_rejects_off_tree_support() {
        let net = chain_net();
        let tree = shortest_path_tree(&net).unwrap();
        let alloc = Allocation::from_pairs(
            [
                (EdgeId::new(0, 1), 0.4),
                (EdgeId::new(1, 2), 0.4),
                (EdgeId::new(0, 2), 0.2),
            ],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            tree_covariance(&net, &tree, &alloc),
            Err(Error::AllocationOffTree(_))
        ));
    }
}
