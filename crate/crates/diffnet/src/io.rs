//! File formats: network and truth JSON, allocation CSV/JSON, report and
//! estimate JSON, history CSV. Numeric text is written with 17 significant
//! digits so values round-trip exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignState, Truth};
use crate::error::{Error, Result};
use crate::inference::Estimate;
use crate::network::{build_network, Allocation, DifferenceNetwork, EdgeId};
use crate::solver::SolveReport;
use crate::tree::ShortestPathTree;

#[derive(Debug, Serialize, Deserialize)]
struct EdgeEntry {
    i: usize,
    j: usize,
    s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    m: usize,
    edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

fn network_from_file(file: NetworkFile) -> Result<DifferenceNetwork> {
    build_network(
        file.m,
        file.edges
            .into_iter()
            .map(|e| (EdgeId::new(e.i, e.j), e.s, e.tau)),
    )
}

pub fn read_network(path: impl AsRef<Path>) -> Result<DifferenceNetwork> {
    let text = std::fs::read_to_string(path)?;
    network_from_file(serde_json::from_str(&text)?)
}

pub fn write_network(path: impl AsRef<Path>, net: &DifferenceNetwork) -> Result<()> {
    let file = NetworkFile {
        m: net.quantity_count(),
        edges: net
            .edges()
            .map(|(e, s, tau)| EdgeEntry {
                i: e.i(),
                j: e.j(),
                s,
                tau,
            })
            .collect(),
        values: None,
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Truth files are network files with a `values` array holding the true
/// quantity values.
pub fn read_truth(path: impl AsRef<Path>) -> Result<Truth> {
    let text = std::fs::read_to_string(path)?;
    let file: NetworkFile = serde_json::from_str(&text)?;
    let values = file.values.clone().ok_or(Error::TruthMissing)?;
    let net = network_from_file(file)?;
    if values.len() != net.quantity_count() {
        return Err(Error::Parse(format!(
            "truth file has {} values for {} quantities",
            values.len(),
            net.quantity_count()
        )));
    }
    Ok(Truth::new(values, net))
}

pub fn write_truth(path: impl AsRef<Path>, truth: &Truth) -> Result<()> {
    let file = NetworkFile {
        m: truth.network.quantity_count(),
        edges: truth
            .network
            .edges()
            .map(|(e, s, tau)| EdgeEntry {
                i: e.i(),
                j: e.j(),
                s,
                tau,
            })
            .collect(),
        values: Some(truth.values.clone()),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct AllocationEntry {
    i: usize,
    j: usize,
    n: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AllocationFile {
    budget: f64,
    edges: Vec<AllocationEntry>,
}

pub fn read_allocation_json(path: impl AsRef<Path>) -> Result<Allocation> {
    let text = std::fs::read_to_string(path)?;
    let file: AllocationFile = serde_json::from_str(&text)?;
    Allocation::from_pairs(
        file.edges
            .into_iter()
            .map(|e| (EdgeId::new(e.i, e.j), e.n)),
        file.budget,
    )
}

pub fn write_allocation_json(path: impl AsRef<Path>, alloc: &Allocation) -> Result<()> {
    let file = AllocationFile {
        budget: alloc.budget(),
        edges: alloc
            .iter()
            .map(|(e, n)| AllocationEntry {
                i: e.i(),
                j: e.j(),
                n,
            })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn allocation_to_csv(alloc: &Allocation) -> String {
    let mut out = String::from("i,j,n\n");
    for (e, n) in alloc.iter() {
        out.push_str(&format!("{},{},{:.16e}\n", e.i(), e.j(), n));
    }
    out
}

pub fn write_allocation_csv(path: impl AsRef<Path>, alloc: &Allocation) -> Result<()> {
    std::fs::write(path, allocation_to_csv(alloc))?;
    Ok(())
}

pub fn read_allocation_csv(path: impl AsRef<Path>) -> Result<Allocation> {
    let text = std::fs::read_to_string(path)?;
    let mut entries = BTreeMap::new();
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "i,j,n" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header 'i,j,n', found {other:?}"
            )))
        }
    }
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 fields", idx + 2)));
        }
        let i: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad vertex index", idx + 2)))?;
        let j: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad vertex index", idx + 2)))?;
        let n: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad sample count", idx + 2)))?;
        entries.insert(EdgeId::new(i, j), n);
    }
    let budget = entries.values().sum();
    Allocation::new(entries, budget)
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementEntry {
    i: usize,
    j: usize,
    /// Observed value: `x_i - x_j` for a pair edge, `x_i` for an
    /// individual edge.
    x: f64,
    /// Samples behind the observation.
    n: f64,
    /// Empirical per-sample fluctuation.
    s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementFile {
    edges: Vec<MeasurementEntry>,
}

pub fn read_measurements(path: impl AsRef<Path>) -> Result<crate::network::MeasurementSet> {
    let text = std::fs::read_to_string(path)?;
    let file: MeasurementFile = serde_json::from_str(&text)?;
    crate::network::MeasurementSet::new(
        file.edges
            .into_iter()
            .map(|e| {
                (
                    EdgeId::new(e.i, e.j),
                    crate::network::Measurement {
                        value: e.x,
                        samples: e.n,
                        fluctuation: e.s,
                    },
                )
            })
            .collect(),
    )
}

pub fn write_measurements(
    path: impl AsRef<Path>,
    meas: &crate::network::MeasurementSet,
) -> Result<()> {
    let file = MeasurementFile {
        edges: meas
            .iter()
            .map(|(e, m)| MeasurementEntry {
                i: e.i(),
                j: e.j(),
                x: m.value,
                n: m.samples,
                s: m.fluctuation,
            })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub objective: String,
    pub value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn write_report(
    path: impl AsRef<Path>,
    objective: crate::inference::Objective,
    report: &SolveReport,
) -> Result<()> {
    let file = ReportFile {
        objective: objective.to_string(),
        value: report.objective,
        kkt_residual: report.kkt_residual,
        iterations: report.iterations,
        converged: report.converged,
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateFile {
    values: Vec<f64>,
    /// Row-major covariance matrix.
    covariance: Vec<Vec<f64>>,
}

pub fn write_estimate(path: impl AsRef<Path>, est: &Estimate) -> Result<()> {
    let m = est.values.len();
    let file = EstimateFile {
        values: est.values.clone(),
        covariance: (0..m)
            .map(|r| (0..m).map(|c| est.covariance[(r, c)]).collect())
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeFile {
    /// `parent[q - 1]` is the tree parent of quantity `q`.
    parent: Vec<usize>,
    /// `dist[q - 1]` is the shortest-path fluctuation sum from the origin.
    dist: Vec<f64>,
}

pub fn write_tree(path: impl AsRef<Path>, tree: &ShortestPathTree) -> Result<()> {
    let m = tree.quantity_count();
    let file = TreeFile {
        parent: (1..=m).map(|v| tree.parent(v)).collect(),
        dist: (1..=m).map(|v| tree.dist(v)).collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// History CSV with one row per campaign round: the cumulative budget, KL
/// divergence to the target allocation, total variance under the true
/// fluctuations, and the per-quantity estimates.
pub fn campaign_history_csv(state: &CampaignState) -> String {
    let m = state
        .history
        .first()
        .map(|r| r.estimates.len())
        .unwrap_or(0);
    let mut header = String::from("iteration,N,D_KL,tr_C");
    for q in 1..=m {
        header.push_str(&format!(",x_{q}"));
    }
    header.push('\n');
    let mut out = header;
    for (it, rec) in state.history.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e}",
            it + 1,
            rec.total_budget,
            rec.kl_divergence,
            rec.trace
        ));
        for v in &rec.estimates {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::complete_network;

    #[test]
    fn network_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        let net = build_network(
            2,
            [
                (EdgeId::new(0, 1), 0.1234567890123456, Some(2.0)),
                (EdgeId::new(1, 2), 1.5, None),
            ],
        )
        .unwrap();
        write_network(&path, &net).unwrap();
        let back = read_network(&path).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn network_json_schema_is_stable() {
        let text = r#"{"m": 2, "edges": [{"i": 0, "j": 1, "s": 1.0}, {"i": 1, "j": 2, "s": 0.5, "tau": 3.0}]}"#;
        let file: NetworkFile = serde_json::from_str(text).unwrap();
        let net = network_from_file(file).unwrap();
        assert_eq!(net.quantity_count(), 2);
        assert_eq!(net.fluctuation(EdgeId::new(1, 2)), Some(0.5));
        assert_eq!(net.cost(EdgeId::new(1, 2)), Some(3.0));
        assert_eq!(net.cost(EdgeId::new(0, 1)), None);
    }

    #[test]
    fn allocation_csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("alloc.csv");
        let values = [
            (EdgeId::new(0, 1), 1.0 / 3.0),
            (EdgeId::new(0, 2), 2.0 / 7.0),
            (EdgeId::new(1, 2), 1.0 - 1.0 / 3.0 - 2.0 / 7.0),
        ];
        let alloc = Allocation::from_pairs(values, 1.0).unwrap();
        write_allocation_csv(&path, &alloc).unwrap();
        let back = read_allocation_csv(&path).unwrap();
        for (e, n) in alloc.iter() {
            assert_eq!(back.samples(e), n, "edge {e} not bit-exact");
        }
    }

    #[test]
    fn allocation_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("alloc.json");
        let alloc = Allocation::from_pairs(
            [(EdgeId::new(0, 1), 0.25), (EdgeId::new(1, 2), 0.75)],
            1.0,
        )
        .unwrap();
        write_allocation_json(&path, &alloc).unwrap();
        let back = read_allocation_json(&path).unwrap();
        assert_eq!(alloc, back);
    }

    #[test]
    fn truth_requires_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.json");
        let net = complete_network(2, |_| 1.0).unwrap();
        write_network(&path, &net).unwrap();
        assert!(matches!(read_truth(&path), Err(Error::TruthMissing)));
        write_truth(&path, &Truth::new(vec![0.5, -0.5], net)).unwrap();
        let truth = read_truth(&path).unwrap();
        assert_eq!(truth.values, vec![0.5, -0.5]);
    }
}
