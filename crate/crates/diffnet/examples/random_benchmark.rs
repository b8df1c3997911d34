//! Seeded Monte-Carlo comparison of allocation schemes.
//!
//! Draws random fluctuation sets, computes the optimal and naive
//! allocations for each, and prints the distribution of metric ratios
//! against the constant-over-MST reference — a small-scale version of what
//! `diffnet benchmark` writes as CSV.
//!
//! Run: `cargo run --release --example random_benchmark`

use diffnet::bench::{connectivity_stats, run_random_benchmark, BenchmarkSpec, SModel};

fn main() -> diffnet::Result<()> {
    let spec = BenchmarkSpec::new(12, 30, SModel::Uniform { lo: 1.0, hi: 5.0 }, 7);
    let table = run_random_benchmark(&spec)?;

    println!("m = {}, {} replicates, s ~ U(1,5); ratios vs mst_constant", spec.m, spec.replicates);
    println!(
        "{:<16}{:<14}{:>10}{:>10}{:>10}{:>12}",
        "metric", "allocation", "median", "q1", "q3", "mean"
    );
    for row in &table.rows {
        if row.reference != "mst_constant" {
            continue;
        }
        println!(
            "{:<16}{:<14}{:>10.4}{:>10.4}{:>10.4}{:>12.4}",
            row.metric, row.allocation, row.median, row.q1, row.q3, row.mean
        );
    }
    println!("\nheadline trace comparisons:");
    for reference in ["d_optimal", "prop_s"] {
        let row = table.get("trace", "a_optimal", reference).unwrap();
        println!(
            "  a_optimal vs {reference}: mean of ratios {:.4} +/- {:.4}, ratio of means {:.4}",
            row.mean, row.stderr, row.ratio_of_means
        );
    }

    let stats = connectivity_stats(&spec)?;
    println!(
        "\npruned A-optimal networks: {:.0}% 2-edge-connected, {:.0}% within one edge,",
        100.0 * stats.fraction_two_connected(),
        100.0 * stats.fraction_within_one_edge()
    );
    println!(
        "funding on average {:.1} of {} individual and {:.1} of {} pairwise measurements",
        stats.mean_individual_edges(),
        spec.m,
        stats.mean_pairwise_edges(),
        spec.m * (spec.m - 1) / 2
    );
    Ok(())
}
