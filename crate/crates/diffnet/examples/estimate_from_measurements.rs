//! Maximum-likelihood estimation from a mixed set of measurements.
//!
//! Four quantities: one measured absolutely, the rest pinned down through
//! a chain of differences. The estimator solves `F x = z` and attaches the
//! covariance of the estimates.
//!
//! Run: `cargo run --release --example estimate_from_measurements`

use diffnet::{build_network, estimate, EdgeId, Measurement, MeasurementSet};

fn main() -> diffnet::Result<()> {
    let net = build_network(
        4,
        [
            (EdgeId::individual(1), 0.8, None),
            (EdgeId::new(1, 2), 0.3, None),
            (EdgeId::new(2, 3), 0.3, None),
            (EdgeId::new(3, 4), 0.3, None),
            (EdgeId::new(1, 4), 0.5, None),
        ],
    )?;

    // Hand-written observations around the truth x = (1.0, 1.5, 0.9, 2.1).
    let meas = MeasurementSet::new(
        [
            (
                EdgeId::individual(1),
                Measurement { value: 1.05, samples: 100.0, fluctuation: 0.8 },
            ),
            (
                EdgeId::new(1, 2),
                Measurement { value: -0.52, samples: 400.0, fluctuation: 0.3 },
            ),
            (
                EdgeId::new(2, 3),
                Measurement { value: 0.61, samples: 400.0, fluctuation: 0.3 },
            ),
            (
                EdgeId::new(3, 4),
                Measurement { value: -1.18, samples: 400.0, fluctuation: 0.3 },
            ),
            (
                EdgeId::new(1, 4),
                Measurement { value: -1.12, samples: 150.0, fluctuation: 0.5 },
            ),
        ]
        .into(),
    )?;

    let est = estimate(&net, &meas)?;
    println!("{:<10}{:>12}{:>16}", "quantity", "estimate", "std error");
    for (i, v) in est.values.iter().enumerate() {
        println!("{:<10}{:>12.4}{:>16.4}", i + 1, v, est.covariance[(i, i)].sqrt());
    }
    println!("\ncovariance of the estimates:");
    for r in 0..est.values.len() {
        let row: Vec<String> = (0..est.values.len())
            .map(|c| format!("{:>9.5}", est.covariance[(r, c)]))
            .collect();
        println!("  [{}]", row.join(" "));
    }

    // The two routes from 1 to 4 (direct, and through the chain) give a
    // consistency check on the data.
    let chain = -0.52 + 0.61 - 1.18;
    println!("\nroute check 1->4: chain {chain:.3} vs direct -1.120");
    Ok(())
}
