//! Command-line front end: design, estimate, sparse, iterate and benchmark
//! subcommands over the JSON/CSV formats of the `io` module.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diffnet::inference::Objective;
use diffnet::{bench, designs, io, solver, tree};

#[derive(Parser)]
#[command(name = "diffnet", version, about = "Optimal measurement allocation for difference networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an optimal allocation for a network.
    Design(DesignArgs),
    /// Maximum-likelihood estimates from observed measurements.
    Estimate(EstimateArgs),
    /// Sparse k-edge-connected near-optimal design.
    Sparse(SparseArgs),
    /// Simulated iterative measure-and-reallocate campaign.
    Iterate(IterateArgs),
    /// Monte-Carlo comparison of allocation schemes on random networks.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Network JSON: {"m": int, "edges": [{"i", "j", "s", "tau"?}]}.
    #[arg(long)]
    network: PathBuf,
    /// Objective: a (trace), d (log-determinant) or e (largest eigenvalue).
    #[arg(long, default_value = "a")]
    objective: Objective,
    /// Total sampling budget.
    #[arg(long)]
    budget: f64,
    /// Allocation already spent (CSV or JSON); the new budget is optimized
    /// on top of it.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Round the result to integers summing to the budget.
    #[arg(long)]
    round: bool,
    /// Write the allocation as CSV (header i,j,n).
    #[arg(long)]
    out_alloc: Option<PathBuf>,
    /// Write the allocation as JSON.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Write objective value, certificate residual and iteration count.
    #[arg(long)]
    report: Option<PathBuf>,
    /// With --objective e: write the shortest-path tree (parents and path
    /// fluctuation sums).
    #[arg(long)]
    emit_tree: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    network: PathBuf,
    /// Measurements JSON: {"edges": [{"i", "j", "x", "n", "s"}]}.
    #[arg(long)]
    measurements: PathBuf,
    /// Output JSON with the estimates and their covariance (row-major).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SparseArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value = "a")]
    objective: Objective,
    #[arg(long)]
    budget: f64,
    /// Required edge-connectivity of the measured graph (1 or 2).
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Maximum number of measured edges.
    #[arg(long)]
    max_edges: usize,
    /// Prune edges with n_e/N below epsilon/max_edges and re-optimize.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    out_alloc: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct IterateArgs {
    /// Truth JSON: a network file with a "values" array.
    #[arg(long)]
    truth: PathBuf,
    /// Comma-separated cumulative budgets, e.g. 100,300,1000,3000,10000.
    #[arg(long)]
    schedule: String,
    #[arg(long, default_value = "a")]
    objective: Objective,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial fluctuation guesses as a network JSON; when absent, guesses
    /// are drawn uniformly from (0, 1).
    #[arg(long)]
    s_init: Option<PathBuf>,
    /// Floor applied to the target fractions in the KL history so stray
    /// allocations stay finite.
    #[arg(long, default_value_t = 1e-12)]
    kl_floor: f64,
    /// History CSV output (iteration, N, D_KL, tr_C, estimates).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, default_value_t = 30)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    /// Fluctuation model: uniform:LO:HI, constant:VALUE or crel:LO:HI.
    #[arg(long, default_value = "uniform:1:5")]
    s_model: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e6)]
    budget: f64,
    /// Emit pruned-network connectivity statistics instead of metric ratios.
    #[arg(long)]
    connectivity: bool,
    /// Stats CSV output.
    #[arg(long)]
    out: PathBuf,
}

fn read_allocation(path: &PathBuf) -> diffnet::Result<diffnet::Allocation> {
    if path.extension().is_some_and(|e| e == "json") {
        io::read_allocation_json(path)
    } else {
        io::read_allocation_csv(path)
    }
}

fn run_design(args: DesignArgs) -> diffnet::Result<()> {
    let net = io::read_network(&args.network)?;
    let base = args.base.as_ref().map(read_allocation).transpose()?;
    let mut report = solver::optimize(&net, args.budget, args.objective, base.as_ref())?;
    if args.round {
        report.allocation = solver::round_to_integers(&report.allocation, args.budget as u64)?;
    }
    println!(
        "{} objective {:.6e}  kkt {:.3e}  iterations {}  converged {}",
        args.objective, report.objective, report.kkt_residual, report.iterations, report.converged
    );
    if let Some(path) = &args.out_alloc {
        io::write_allocation_csv(path, &report.allocation)?;
    }
    if let Some(path) = &args.out_json {
        io::write_allocation_json(path, &report.allocation)?;
    }
    if let Some(path) = &args.report {
        io::write_report(path, args.objective, &report)?;
    }
    if let Some(path) = &args.emit_tree {
        let spt = tree::shortest_path_tree(&net)?;
        io::write_tree(path, &spt)?;
    }
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> diffnet::Result<()> {
    let net = io::read_network(&args.network)?;
    let meas = io::read_measurements(&args.measurements)?;
    let est = diffnet::estimate(&net, &meas)?;
    io::write_estimate(&args.out, &est)?;
    println!(
        "estimated {} quantities from {} measurements",
        est.values.len(),
        meas.len()
    );
    Ok(())
}

fn run_sparse(args: SparseArgs) -> diffnet::Result<()> {
    let net = io::read_network(&args.network)?;
    let spec = designs::SparseDesignSpec {
        connectivity: args.k,
        max_edges: args.max_edges,
        epsilon: args.epsilon,
        objective: args.objective,
    };
    let sparse = designs::sparse_design(&net, args.budget, &spec)?;
    println!(
        "selected {} edges (base weight {:.6e}), pruned {}, objective {:.6e}",
        sparse.selected.len(),
        sparse.base_weight,
        sparse.pruned.len(),
        sparse.report.objective
    );
    if let Some(path) = &args.out_alloc {
        io::write_allocation_csv(path, &sparse.report.allocation)?;
    }
    if let Some(path) = &args.report {
        io::write_report(path, args.objective, &sparse.report)?;
    }
    Ok(())
}

fn run_iterate(args: IterateArgs) -> diffnet::Result<()> {
    let truth = io::read_truth(&args.truth)?;
    let schedule: Vec<u64> = args
        .schedule
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| diffnet::Error::Parse(format!("bad schedule entry {t:?}")))
        })
        .collect::<diffnet::Result<_>>()?;
    let s_init: BTreeMap<diffnet::EdgeId, f64> = match &args.s_init {
        Some(path) => {
            let guesses = io::read_network(path)?;
            guesses.edges().map(|(e, s, _)| (e, s)).collect()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x9e37_79b9_7f4a_7c15);
            truth
                .network
                .edge_ids()
                .map(|e| (e, rng.gen_range(f64::MIN_POSITIVE..1.0)))
                .collect()
        }
    };
    let state = diffnet::run_campaign(
        &truth,
        &s_init,
        &schedule,
        args.objective,
        args.seed,
        args.kl_floor,
    )?;
    std::fs::write(&args.out, io::campaign_history_csv(&state))?;
    for rec in &state.history {
        println!(
            "N {:>8}  D_KL {:.4e}  tr_C {:.6e}  sq_dev {:.4e}",
            rec.total_budget, rec.kl_divergence, rec.trace, rec.squared_deviation
        );
    }
    Ok(())
}

fn run_benchmark(args: BenchmarkArgs) -> diffnet::Result<()> {
    let s_model: bench::SModel = args.s_model.parse()?;
    let mut spec = bench::BenchmarkSpec::new(args.m, args.replicates, s_model, args.seed);
    spec.budget = args.budget;
    if args.connectivity {
        let stats = bench::connectivity_stats(&spec)?;
        std::fs::write(&args.out, stats.to_csv())?;
        println!(
            "2-connected: {:.1}%  within one edge: {:.1}%  mean edges: {:.1} individual / {:.1} pairwise",
            100.0 * stats.fraction_two_connected(),
            100.0 * stats.fraction_within_one_edge(),
            stats.mean_individual_edges(),
            stats.mean_pairwise_edges()
        );
    } else {
        let table = bench::run_random_benchmark(&spec)?;
        std::fs::write(&args.out, table.to_csv())?;
        for row in &table.rows {
            if row.metric == "trace" {
                println!(
                    "trace {:<12} vs {:<12} mean {:.4} +/- {:.4} (ratio of means {:.4})",
                    row.allocation, row.reference, row.mean, row.stderr, row.ratio_of_means
                );
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(args) => run_design(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Sparse(args) => run_sparse(args),
        Command::Iterate(args) => run_iterate(args),
        Command::Benchmark(args) => run_benchmark(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
