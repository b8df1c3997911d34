//! Monte-Carlo benchmark harness: statistical comparison of optimal and
//! naive allocations over randomly drawn fluctuation sets, plus
//! connectivity statistics of pruned optimal networks. Fully seeded; a
//! fixed seed reproduces every number bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::designs::{naive_allocation, NaiveScheme};
use crate::error::Result;
use crate::inference::{InformationState, Objective};
use crate::network::{complete_network, connectivity_deficit, Allocation, DifferenceNetwork, EdgeId};
use crate::solver::optimize;

/// How the random fluctuations of a replicate are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SModel {
    /// Every edge fluctuation uniform in `(lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// The same fluctuation on every edge.
    Constant { value: f64 },
    /// Individual fluctuations uniform in `(lo, hi)` with
    /// `s_ij = |s_i - s_j|`: the constant-relative-error regime.
    ConstRelError { lo: f64, hi: f64 },
}

impl std::str::FromStr for SModel {
    type Err = crate::error::Error;

    /// Accepts `uniform:LO:HI`, `constant:VALUE` and `crel:LO:HI`.
    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| crate::error::Error::Parse(format!("bad number {s:?} in s-model")))
        };
        match parts.as_slice() {
            ["uniform", lo, hi] => Ok(SModel::Uniform {
                lo: parse(lo)?,
                hi: parse(hi)?,
            }),
            ["constant", v] => Ok(SModel::Constant { value: parse(v)? }),
            ["crel", lo, hi] => Ok(SModel::ConstRelError {
                lo: parse(lo)?,
                hi: parse(hi)?,
            }),
            _ => Err(crate::error::Error::Parse(format!(
                "unknown s-model {text:?}; expected uniform:LO:HI, constant:VALUE or crel:LO:HI"
            ))),
        }
    }
}

/// Specification of one benchmark run.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub m: usize,
    pub replicates: usize,
    pub s_model: SModel,
    pub seed: u64,
    /// Total budget per replicate. Ratios are budget-invariant, so any
    /// value works; the default is 1e6.
    pub budget: f64,
}

impl BenchmarkSpec {
    pub fn new(m: usize, replicates: usize, s_model: SModel, seed: u64) -> Self {
        BenchmarkSpec {
            m,
            replicates,
            s_model,
            seed,
            budget: 1e6,
        }
    }
}

/// Draws one replicate network from the fluctuation model.
pub fn draw_network(m: usize, model: SModel, rng: &mut impl Rng) -> DifferenceNetwork {
    match model {
        SModel::Uniform { lo, hi } => {
            complete_network(m, |_| rng.gen_range(lo..hi)).expect("positive fluctuations")
        }
        SModel::Constant { value } => {
            complete_network(m, |_| value).expect("positive fluctuations")
        }
        SModel::ConstRelError { lo, hi } => {
            let s: Vec<f64> = (0..m).map(|_| rng.gen_range(lo..hi)).collect();
            complete_network(m, |e| {
                let (a, b) = e.endpoints();
                if a == 0 {
                    s[b - 1]
                } else {
                    // Exact ties would make the edge a free measurement;
                    // clamp to keep the network valid.
                    (s[a - 1] - s[b - 1]).abs().max(1e-12)
                }
            })
            .expect("positive fluctuations")
        }
    }
}

const METRICS: [&str; 3] = ["trace", "spectral_norm", "determinant"];
const ALLOCATIONS: [&str; 5] = ["a_optimal", "d_optimal", "e_optimal", "prop_s", "uniform"];

/// One aggregated comparison: the distribution of the per-replicate metric
/// ratio `allocation / reference`, plus the ratio of per-replicate means.
#[derive(Debug, Clone)]
pub struct StatsRow {
    pub metric: String,
    pub allocation: String,
    pub reference: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Mean of per-replicate ratios, with its standard error.
    pub mean: f64,
    pub stderr: f64,
    /// Ratio of per-replicate means (geometric version for the
    /// determinant, which would under- or overflow otherwise).
    pub ratio_of_means: f64,
}

#[derive(Debug, Clone)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
}

impl StatsTable {
    pub fn get(&self, metric: &str, allocation: &str, reference: &str) -> Option<&StatsRow> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.allocation == allocation && r.reference == reference)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "metric,allocation,reference,median,q1,q3,mean,stderr,ratio_of_means\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                r.metric, r.allocation, r.reference, r.median, r.q1, r.q3, r.mean, r.stderr,
                r.ratio_of_means
            ));
        }
        out
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Values of (trace, log_det, spectral_norm) per allocation for one replicate.
struct ReplicateMetrics {
    trace: f64,
    log_det: f64,
    spectral: f64,
}

fn metrics_of(net: &DifferenceNetwork, alloc: &Allocation) -> Result<ReplicateMetrics> {
    let st = InformationState::evaluate(net, alloc)?;
    Ok(ReplicateMetrics {
        trace: st.trace,
        log_det: st.log_det,
        spectral: st.spectral_norm,
    })
}

fn metric_value(metrics: &ReplicateMetrics, metric: &str) -> f64 {
    match metric {
        "trace" => metrics.trace,
        "spectral_norm" => metrics.spectral,
        // Handled in log space by the aggregation.
        "determinant" => metrics.log_det,
        _ => unreachable!(),
    }
}

fn aggregate_rows(
    metric: &str,
    allocation: &str,
    reference: &str,
    values: &[f64],
    ref_values: &[f64],
) -> StatsRow {
    let log_space = metric == "determinant";
    let mut ratios: Vec<f64> = values
        .iter()
        .zip(ref_values)
        .map(|(&v, &r)| if log_space { (v - r).exp() } else { v / r })
        .collect();
    let (mean, stderr) = mean_stderr(&ratios);
    ratios.sort_by(f64::total_cmp);
    let ratio_of_means = if log_space {
        let t = values.len() as f64;
        ((values.iter().sum::<f64>() - ref_values.iter().sum::<f64>()) / t).exp()
    } else {
        values.iter().sum::<f64>() / ref_values.iter().sum::<f64>()
    };
    StatsRow {
        metric: metric.to_string(),
        allocation: allocation.to_string(),
        reference: reference.to_string(),
        median: quantile(&ratios, 0.5),
        q1: quantile(&ratios, 0.25),
        q3: quantile(&ratios, 0.75),
        mean,
        stderr,
        ratio_of_means,
    }
}

/// Runs the replicate loop: draws fluctuations, computes the optimal and
/// naive allocations, and aggregates the metric ratios of each allocation
/// against the constant-over-MST reference, plus the trace ratios of the
/// A-optimal against the two strongest competitors.
pub fn run_random_benchmark(spec: &BenchmarkSpec) -> Result<StatsTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..spec.replicates).map(|_| rng.gen()).collect();

    // per allocation name -> per metric -> replicate values
    let names: Vec<&str> = ALLOCATIONS.iter().copied().chain(["mst_constant"]).collect();
    let mut values: std::collections::BTreeMap<&str, Vec<ReplicateMetrics>> =
        names.iter().map(|&n| (n, Vec::new())).collect();

    for &rep_seed in &seeds {
        let mut rep_rng = ChaCha8Rng::seed_from_u64(rep_seed);
        let net = draw_network(spec.m, spec.s_model, &mut rep_rng);
        let a = optimize(&net, spec.budget, Objective::A, None)?;
        let d = optimize(&net, spec.budget, Objective::D, None)?;
        let e = optimize(&net, spec.budget, Objective::E, None)?;
        let prop = naive_allocation(&net, spec.budget, NaiveScheme::ProportionalS)?;
        let unif = naive_allocation(&net, spec.budget, NaiveScheme::Uniform)?;
        let mst = naive_allocation(&net, spec.budget, NaiveScheme::MstConstant)?;
        for (name, alloc) in [
            ("a_optimal", &a.allocation),
            ("d_optimal", &d.allocation),
            ("e_optimal", &e.allocation),
            ("prop_s", &prop),
            ("uniform", &unif),
            ("mst_constant", &mst),
        ] {
            values.get_mut(name).unwrap().push(metrics_of(&net, alloc)?);
        }
    }

    let series = |name: &str, metric: &str| -> Vec<f64> {
        values[name].iter().map(|m| metric_value(m, metric)).collect()
    };
    let mut rows = Vec::new();
    for metric in METRICS {
        let reference = series("mst_constant", metric);
        for allocation in ALLOCATIONS {
            rows.push(aggregate_rows(
                metric,
                allocation,
                "mst_constant",
                &series(allocation, metric),
                &reference,
            ));
        }
    }
    // Headline comparisons of the A-optimal against the strongest
    // alternatives, in total variance.
    for reference in ["d_optimal", "prop_s"] {
        rows.push(aggregate_rows(
            "trace",
            "a_optimal",
            reference,
            &series("a_optimal", "trace"),
            &series(reference, "trace"),
        ));
    }
    Ok(StatsTable { rows })
}

/// Connectivity profile of one pruned A-optimal replicate.
#[derive(Debug, Clone, Copy)]
pub struct ConnectivityRecord {
    /// Individual-measurement edges surviving the pruning threshold.
    pub individual_edges: usize,
    /// Pairwise-difference edges surviving the pruning threshold.
    pub pairwise_edges: usize,
    /// Edges needed to make the pruned network 2-edge-connected.
    pub deficit: usize,
}

#[derive(Debug, Clone)]
pub struct ConnectivityStats {
    pub records: Vec<ConnectivityRecord>,
}

impl ConnectivityStats {
    pub fn fraction_two_connected(&self) -> f64 {
        let hit = self.records.iter().filter(|r| r.deficit == 0).count();
        hit as f64 / self.records.len() as f64
    }

    pub fn fraction_within_one_edge(&self) -> f64 {
        let hit = self.records.iter().filter(|r| r.deficit <= 1).count();
        hit as f64 / self.records.len() as f64
    }

    pub fn mean_individual_edges(&self) -> f64 {
        self.records.iter().map(|r| r.individual_edges as f64).sum::<f64>()
            / self.records.len() as f64
    }

    pub fn mean_pairwise_edges(&self) -> f64 {
        self.records.iter().map(|r| r.pairwise_edges as f64).sum::<f64>()
            / self.records.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,individual_edges,pairwise_edges,deficit_k2\n");
        for (t, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t, r.individual_edges, r.pairwise_edges, r.deficit
            ));
        }
        out
    }
}

/// For each replicate, computes the A-optimal allocation, prunes edges with
/// negligible allocation (`(n_e / s_e) / (N / sum_e s_e) < 1e-2`) and
/// reports the surviving edge counts and how far the result is from
/// 2-edge-connectivity.
pub fn connectivity_stats(spec: &BenchmarkSpec) -> Result<ConnectivityStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..spec.replicates).map(|_| rng.gen()).collect();
    let mut records = Vec::with_capacity(spec.replicates);
    for &rep_seed in &seeds {
        let mut rep_rng = ChaCha8Rng::seed_from_u64(rep_seed);
        let net = draw_network(spec.m, spec.s_model, &mut rep_rng);
        let rep = optimize(&net, spec.budget, Objective::A, None)?;
        let total_s: f64 = net.edges().map(|(_, s, _)| s).sum();
        let scale = spec.budget / total_s;
        let kept: std::collections::BTreeSet<EdgeId> = net
            .edges()
            .filter(|&(e, s, _)| rep.allocation.samples(e) / s / scale >= 1e-2)
            .map(|(e, _, _)| e)
            .collect();
        records.push(ConnectivityRecord {
            individual_edges: kept.iter().filter(|e| e.is_individual()).count(),
            pairwise_edges: kept.iter().filter(|e| !e.is_individual()).count(),
            deficit: connectivity_deficit(&kept, spec.m, 2),
        });
    }
    Ok(ConnectivityStats { records })
}
