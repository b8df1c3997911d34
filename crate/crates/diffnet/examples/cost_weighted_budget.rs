//! Optimal allocation when samples have different per-sample costs.
//!
//! A budget constraint `sum n_e tau_e = N` reduces to the plain
//! fixed-total problem after rescaling: optimize with `s' = s sqrt(tau)`,
//! then map the cost-unit allocation back via `n = n' / tau`.
//!
//! Run: `cargo run --release --example cost_weighted_budget`

use diffnet::inference::Objective;
use diffnet::{build_network, cost_transform, optimize, total_cost, EdgeId};

fn main() -> diffnet::Result<()> {
    // Three quantities; absolute measurements cost 4x per sample.
    let m = 3;
    let mut entries = Vec::new();
    for i in 1..=m {
        entries.push((EdgeId::individual(i), 1.0 + 0.2 * i as f64, Some(4.0)));
        for j in (i + 1)..=m {
            entries.push((EdgeId::new(i, j), 0.5, Some(1.0)));
        }
    }
    let net = build_network(m, entries)?;

    let cost_budget = 1e4;
    let transform = cost_transform(&net)?;
    let report = optimize(transform.network(), cost_budget, Objective::A, None)?;
    let raw = transform.to_raw_samples(&report.allocation)?;

    println!("cost budget: {cost_budget}");
    println!("tr(C) at the optimum: {:.6e}\n", report.objective);
    println!("{:<10}{:>8}{:>12}{:>12}", "edge", "tau", "samples", "cost");
    for (e, n) in raw.iter() {
        if n == 0.0 {
            continue;
        }
        let tau = net.cost(e).unwrap();
        println!("{:<10}{:>8.1}{:>12.1}{:>12.1}", e.to_string(), tau, n, n * tau);
    }
    let spent = total_cost(&net, &raw)?;
    println!("\ntotal cost spent: {spent:.6} (budget {cost_budget})");
    Ok(())
}
