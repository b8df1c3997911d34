//! Baseline allocations, closed-form chain designs for the
//! constant-relative-error regime, and the sparse k-connected near-optimal
//! heuristic.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::inference::Objective;
use crate::network::{
    connectivity_deficit, minimum_spanning_tree, Allocation, DifferenceNetwork, EdgeId,
};
use crate::solver::{optimize_restricted, SolveReport};

/// Reference allocation schemes used for comparison against the optimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveScheme {
    /// `N / |edges|` on every available edge.
    Uniform,
    /// `n_e` proportional to the fluctuation `s_e`.
    ProportionalS,
    /// `N / m` on each edge of the minimum spanning tree.
    MstConstant,
}

pub fn naive_allocation(
    net: &DifferenceNetwork,
    budget: f64,
    scheme: NaiveScheme,
) -> Result<Allocation> {
    assert!(budget > 0.0, "budget must be positive");
    match scheme {
        NaiveScheme::Uniform => {
            let count = net.edge_count();
            let each = budget / count as f64;
            Allocation::from_pairs(net.edge_ids().map(|e| (e, each)), budget)
        }
        NaiveScheme::ProportionalS => {
            let total_s: f64 = net.edges().map(|(_, s, _)| s).sum();
            Allocation::from_pairs(
                net.edges().map(|(e, s, _)| (e, budget * s / total_s)),
                budget,
            )
        }
        NaiveScheme::MstConstant => {
            let tree = minimum_spanning_tree(net)?;
            let each = budget / tree.len() as f64;
            Allocation::from_pairs(tree.into_iter().map(|e| (e, each)), budget)
        }
    }
}

/// A chain allocation along `0-1-2-...-m` with its predicted objective
/// value.
#[derive(Debug, Clone)]
pub struct ChainDesign {
    pub allocation: Allocation,
    /// Closed-form minimum of the total variance for this construction.
    pub predicted_trace: f64,
}

fn check_sorted(s: &[f64]) -> Result<()> {
    assert!(!s.is_empty(), "need at least one quantity");
    if s[0] <= 0.0 {
        return Err(Error::NonPositiveFluctuation(EdgeId::individual(1)));
    }
    if s.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::NotSorted);
    }
    Ok(())
}

/// Trace-minimizing allocation when the relative error is constant
/// (`s_ij = s_j - s_i` for fluctuations sorted ascending). The design lives
/// on the chain: `n_1 = lambda sqrt(m) s_1` on the individual edge of the
/// smallest quantity and `n_{i,i+1} = lambda sqrt(m-i) (s_{i+1} - s_i)`,
/// with `lambda` fixed by the budget. The attained minimum is
/// `tr(C) = (sum_i (sqrt(m+1-i) - sqrt(m-i)) s_i)^2 / N`.
pub fn const_rel_error_a_optimal(s: &[f64], budget: f64) -> Result<ChainDesign> {
    check_sorted(s)?;
    let m = s.len();
    let coeff_sum: f64 = s
        .iter()
        .enumerate()
        .map(|(idx, &si)| {
            let i = (idx + 1) as f64;
            let mf = m as f64;
            ((mf + 1.0 - i).sqrt() - (mf - i).sqrt()) * si
        })
        .sum();
    let lambda = budget / coeff_sum;
    let mut entries = BTreeMap::new();
    entries.insert(EdgeId::individual(1), lambda * (m as f64).sqrt() * s[0]);
    for i in 1..m {
        let weight = ((m - i) as f64).sqrt();
        entries.insert(EdgeId::new(i, i + 1), lambda * weight * (s[i] - s[i - 1]));
    }
    let total: f64 = entries.values().sum();
    Ok(ChainDesign {
        allocation: Allocation::new(entries, total)?,
        predicted_trace: coeff_sum * coeff_sum / budget,
    })
}

/// Determinant-minimizing allocation in the constant-relative-error regime:
/// `N / m` on the individual edge of the smallest quantity and on every
/// consecutive-pair edge, independent of the fluctuation values.
pub fn const_rel_error_d_optimal(s: &[f64], budget: f64) -> Result<Allocation> {
    check_sorted(s)?;
    let m = s.len();
    let each = budget / m as f64;
    let mut entries = BTreeMap::new();
    entries.insert(EdgeId::individual(1), each);
    for i in 1..m {
        entries.insert(EdgeId::new(i, i + 1), each);
    }
    Allocation::new(entries, budget)
}

/// Parameters for the sparse near-optimal design: required edge
/// connectivity, measurement budget in edges, pruning threshold and the
/// objective to optimize.
#[derive(Debug, Clone, Copy)]
pub struct SparseDesignSpec {
    /// Required edge-connectivity of the measured graph (1 or 2).
    pub connectivity: usize,
    /// Maximum number of measured edges.
    pub max_edges: usize,
    /// Edges with `n_e / N < epsilon / max_edges` are pruned and their
    /// budget redistributed.
    pub epsilon: f64,
    pub objective: Objective,
}

/// Outcome of [`sparse_design`].
#[derive(Debug, Clone)]
pub struct SparseReport {
    /// The selected edge set before optimization (k-connected, at most
    /// `max_edges` edges).
    pub selected: BTreeSet<EdgeId>,
    /// Total fluctuation weight of the k-connected base subgraph.
    pub base_weight: f64,
    /// Solve over the full selected edge set.
    pub initial: SolveReport,
    /// Edges removed by pruning (empty when nothing fell below threshold).
    pub pruned: Vec<EdgeId>,
    /// Solve over the surviving edges; equals `initial` when nothing was
    /// pruned.
    pub report: SolveReport,
}

/// Minimum-weight k-edge-connected base subgraph. Exact for k = 1 (the
/// MST); for k = 2 the minimum-weight problem is NP-hard, so the MST is
/// greedily augmented with the cheapest edges that cover remaining bridges.
fn k_connected_base(
    net: &DifferenceNetwork,
    k: usize,
) -> Result<(BTreeSet<EdgeId>, f64)> {
    let m = net.quantity_count();
    let mut selected = minimum_spanning_tree(net)?;
    if k == 2 {
        while connectivity_deficit(&selected, m, 2) > 0 {
            let mut candidates: Vec<(f64, EdgeId)> = net
                .edges()
                .filter(|(e, _, _)| !selected.contains(e))
                .map(|(e, s, _)| (s, e))
                .collect();
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let before = connectivity_deficit(&selected, m, 2);
            let mut added = false;
            for (_, e) in candidates {
                let mut trial = selected.clone();
                trial.insert(e);
                if connectivity_deficit(&trial, m, 2) < before {
                    selected = trial;
                    added = true;
                    break;
                }
            }
            if !added {
                return Err(Error::InfeasibleSpec(
                    "the available edges cannot form a 2-edge-connected spanning subgraph".into(),
                ));
            }
        }
    }
    let weight = selected
        .iter()
        .map(|e| net.fluctuation(*e).expect("selected from the network"))
        .sum();
    Ok((selected, weight))
}

/// Near-optimal design on a sparse, k-edge-connected measurement graph:
/// build the cheapest k-connected base, pad it with the lowest-fluctuation
/// edges up to `max_edges`, optimize over that edge set, prune negligible
/// allocations and re-optimize over the survivors.
pub fn sparse_design(
    net: &DifferenceNetwork,
    budget: f64,
    spec: &SparseDesignSpec,
) -> Result<SparseReport> {
    assert!(
        spec.connectivity == 1 || spec.connectivity == 2,
        "connectivity must be 1 or 2"
    );
    assert!(
        (0.0..1.0).contains(&spec.epsilon),
        "epsilon must be in [0, 1)"
    );
    let (mut selected, base_weight) = k_connected_base(net, spec.connectivity)?;
    if spec.max_edges < selected.len() {
        return Err(Error::InfeasibleSpec(format!(
            "max_edges = {} but the {}-connected base already needs {} edges",
            spec.max_edges,
            spec.connectivity,
            selected.len()
        )));
    }
    let mut extras: Vec<(f64, EdgeId)> = net
        .edges()
        .filter(|(e, _, _)| !selected.contains(e))
        .map(|(e, s, _)| (s, e))
        .collect();
    extras.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, e) in extras
        .into_iter()
        .take(spec.max_edges.saturating_sub(selected.len()))
    {
        selected.insert(e);
    }

    let initial = optimize_restricted(net, budget, spec.objective, None, &selected)?;
    let threshold = spec.epsilon / spec.max_edges as f64;
    let pruned: Vec<EdgeId> = selected
        .iter()
        .copied()
        .filter(|&e| initial.allocation.samples(e) / budget < threshold)
        .collect();
    let report = if pruned.is_empty() {
        initial.clone()
    } else {
        let survivors: BTreeSet<EdgeId> = selected
            .iter()
            .copied()
            .filter(|e| !pruned.contains(e))
            .collect();
        optimize_restricted(net, budget, spec.objective, None, &survivors)?
    };
    Ok(SparseReport {
        selected,
        base_weight,
        initial,
        pruned,
        report,
    })
}
