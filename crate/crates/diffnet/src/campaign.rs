//! Iterative measure-and-reallocate campaigns.
//!
//! Fluctuations are rarely known up front, so allocation proceeds in rounds:
//! optimize the next slice of budget against the current fluctuation
//! estimates, measure (here: simulate), replace the estimates of measured
//! edges with their empirical fluctuations, and repeat at a larger total
//! budget. Progress toward the allocation that the true fluctuations would
//! dictate is tracked with a KL divergence between allocation fractions.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::inference::{covariance, estimate, fisher_matrix, Objective};
use crate::network::{Allocation, DifferenceNetwork, EdgeId, Measurement, MeasurementSet};
use crate::solver::{optimize, round_to_integers, SolveReport};

/// Ground truth for simulated campaigns: the true quantity values and the
/// network with the true fluctuations.
#[derive(Debug, Clone)]
pub struct Truth {
    pub values: Vec<f64>,
    pub network: DifferenceNetwork,
}

impl Truth {
    pub fn new(values: Vec<f64>, network: DifferenceNetwork) -> Self {
        assert_eq!(
            values.len(),
            network.quantity_count(),
            "one true value per quantity"
        );
        Truth { values, network }
    }

    /// True mean of the measurement on edge `e`.
    fn mean(&self, e: EdgeId) -> f64 {
        let (a, b) = e.endpoints();
        if a == 0 {
            self.values[b - 1]
        } else {
            self.values[a - 1] - self.values[b - 1]
        }
    }
}

/// KL divergence between two allocations viewed as distributions over
/// edges: `D = sum_e p_e ln(p_e / q_e)` with both sides normalized by their
/// own totals. Zero-current edges contribute nothing; a funded edge outside
/// the target support makes the divergence infinite, which is reported as
/// an error rather than clamped.
pub fn kl_divergence(current: &Allocation, target: &Allocation) -> Result<f64> {
    let mut d = 0.0;
    for (e, n) in current.iter() {
        if n == 0.0 {
            continue;
        }
        let p = n / current.budget();
        let q = target.samples(e) / target.budget();
        if q == 0.0 {
            return Err(Error::InfiniteDivergence(e));
        }
        d += p * (p / q).ln();
    }
    Ok(d.max(0.0))
}

/// KL divergence with the target fractions floored at `floor`, so that
/// stray samples outside the target support give a large but finite
/// penalty. With `floor = 0` this is exactly [`kl_divergence`].
pub fn kl_divergence_floored(current: &Allocation, target: &Allocation, floor: f64) -> Result<f64> {
    if floor == 0.0 {
        return kl_divergence(current, target);
    }
    let mut d = 0.0;
    for (e, n) in current.iter() {
        if n == 0.0 {
            continue;
        }
        let p = n / current.budget();
        let q = (target.samples(e) / target.budget()).max(floor);
        d += p * (p / q).ln();
    }
    Ok(d.max(0.0))
}

/// Simulates the measurements of one campaign round: for each funded edge,
/// draws its integer number of samples from a normal distribution centered
/// on the true difference with the true per-sample fluctuation, and reports
/// the sample mean and sample standard deviation. Deterministic for a fixed
/// seed.
pub fn simulate_measurements(
    truth: &Truth,
    delta: &Allocation,
    seed: u64,
) -> Result<MeasurementSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = BTreeMap::new();
    for (e, n) in delta.iter() {
        if n == 0.0 {
            continue;
        }
        if n.fract() != 0.0 {
            return Err(Error::InvalidMeasurement {
                edge: e,
                reason: "sample counts must be integers for simulation",
            });
        }
        if n < 2.0 {
            return Err(Error::TooFewSamples { edge: e, samples: n });
        }
        let s = truth.network.fluctuation(e).ok_or(Error::UnknownEdge(e))?;
        let normal = Normal::new(truth.mean(e), s).expect("positive fluctuation");
        let count = n as usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for k in 0..count {
            let draw = normal.sample(&mut rng);
            let delta1 = draw - mean;
            mean += delta1 / (k + 1) as f64;
            m2 += delta1 * (draw - mean);
        }
        entries.insert(
            e,
            Measurement {
                value: mean,
                samples: n,
                fluctuation: (m2 / (n - 1.0)).sqrt(),
            },
        );
    }
    MeasurementSet::new(entries)
}

/// Per-edge pooled sample statistics across rounds.
#[derive(Debug, Clone, Copy, Default)]
struct Pooled {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Pooled {
    fn merge(&mut self, other: &Measurement) {
        let nb = other.samples;
        let m2b = other.fluctuation * other.fluctuation * (nb - 1.0);
        let na = self.count;
        let total = na + nb;
        let gap = other.value - self.mean;
        self.mean += gap * nb / total;
        self.m2 += m2b + gap * gap * na * nb / total;
        self.count = total;
    }

    fn fluctuation(&self) -> f64 {
        (self.m2 / (self.count - 1.0)).sqrt()
    }
}

/// One round of a campaign, as recorded in [`CampaignState::history`].
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// Cumulative budget after this round.
    pub total_budget: u64,
    /// The optimizer's incremental allocation before rounding.
    pub increment_real: Allocation,
    /// The rounded increment that was actually measured.
    pub increment: Allocation,
    /// KL divergence from the cumulative allocation to the allocation that
    /// the true fluctuations dictate (target fractions floored).
    pub kl_divergence: f64,
    /// Total variance of the estimates under the *true* fluctuations.
    pub trace: f64,
    pub estimates: Vec<f64>,
    /// `sum_i (estimate_i - truth_i)^2`.
    pub squared_deviation: f64,
}

/// Final state of a campaign run.
#[derive(Debug, Clone)]
pub struct CampaignState {
    /// Cumulative integer allocation over all rounds.
    pub spent: Allocation,
    /// Current fluctuation estimates (empirical on measured edges).
    pub s_estimates: BTreeMap<EdgeId, f64>,
    /// Pooled measurements across all rounds.
    pub measurements: MeasurementSet,
    /// The allocation the true fluctuations dictate, used as the KL target.
    pub target: SolveReport,
    pub history: Vec<IterationRecord>,
}

/// Raises every entry that rounded to a single sample up to two, taking the
/// extra sample from the largest entry (an empirical standard deviation
/// needs at least two samples). Lone samples that cannot be topped up are
/// folded into the largest other entry instead.
fn enforce_min_two(mut n: BTreeMap<EdgeId, f64>) -> Result<BTreeMap<EdgeId, f64>> {
    loop {
        let Some(deficient) = n
            .iter()
            .find(|(_, &v)| v == 1.0)
            .map(|(&e, _)| e)
        else {
            return Ok(n);
        };
        let donor = n
            .iter()
            .filter(|(&e, &v)| e != deficient && v > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&e, &v)| (e, v));
        match donor {
            Some((e, v)) if v >= 3.0 => {
                *n.get_mut(&deficient).unwrap() = 2.0;
                *n.get_mut(&e).unwrap() = v - 1.0;
            }
            Some((e, v)) => {
                *n.get_mut(&e).unwrap() = v + 1.0;
                *n.get_mut(&deficient).unwrap() = 0.0;
            }
            None => {
                return Err(Error::TooFewSamples {
                    edge: deficient,
                    samples: 1.0,
                })
            }
        }
    }
}

/// Runs a simulated campaign. `schedule` lists the cumulative total budgets
/// after each round (strictly increasing); `s_init` provides an initial
/// fluctuation guess for every edge of the truth network. Stray target-less
/// allocations are kept finite in the history via `kl_floor` (0 disables
/// flooring and makes such rounds error instead).
pub fn run_campaign(
    truth: &Truth,
    s_init: &BTreeMap<EdgeId, f64>,
    schedule: &[u64],
    objective: Objective,
    seed: u64,
    kl_floor: f64,
) -> Result<CampaignState> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) || schedule[0] == 0 {
        return Err(Error::BadSchedule);
    }
    let net = &truth.network;
    let mut s_est = BTreeMap::new();
    for e in net.edge_ids() {
        let s = *s_init.get(&e).ok_or(Error::MissingEstimate(e))?;
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NonPositiveFluctuation(e));
        }
        s_est.insert(e, s);
    }

    let final_total = *schedule.last().unwrap();
    let target = optimize(net, final_total as f64, objective, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spent: BTreeMap<EdgeId, f64> = net.edge_ids().map(|e| (e, 0.0)).collect();
    let mut pooled: BTreeMap<EdgeId, Pooled> = BTreeMap::new();
    let mut history = Vec::with_capacity(schedule.len());
    let mut prev_total = 0u64;

    for &total in schedule {
        let delta_budget = total - prev_total;
        let working = net.with_fluctuations(&s_est)?;
        let base = if prev_total > 0 {
            Some(Allocation::new(spent.clone(), prev_total as f64)?)
        } else {
            None
        };
        let report = optimize(&working, delta_budget as f64, objective, base.as_ref())?;
        let rounded = round_to_integers(&report.allocation, delta_budget)?;
        let increment = Allocation::new(
            enforce_min_two(rounded.iter().collect())?,
            delta_budget as f64,
        )?;

        let sim_seed = rng.gen::<u64>();
        let measured = simulate_measurements(truth, &increment, sim_seed)?;
        for (e, meas) in measured.iter() {
            pooled.entry(e).or_default().merge(meas);
            *spent.get_mut(&e).unwrap() += meas.samples;
        }

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (&e, stats) in &pooled {
            let s = stats.fluctuation();
            s_est.insert(e, s);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        for e in net.edge_ids() {
            if !pooled.contains_key(&e) {
                let s = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                s_est.insert(e, s);
            }
        }

        let cumulative = Allocation::new(spent.clone(), total as f64)?;
        let meas_set = MeasurementSet::new(
            pooled
                .iter()
                .map(|(&e, p)| {
                    (
                        e,
                        Measurement {
                            value: p.mean,
                            samples: p.count,
                            fluctuation: p.fluctuation(),
                        },
                    )
                })
                .collect(),
        )?;
        let est = estimate(net, &meas_set)?;
        let true_cov = covariance(&fisher_matrix(net, &cumulative)?)?;
        let kl = kl_divergence_floored(&cumulative, &target.allocation, kl_floor)?;
        let squared_deviation = est
            .values
            .iter()
            .zip(&truth.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        history.push(IterationRecord {
            total_budget: total,
            increment_real: report.allocation,
            increment,
            kl_divergence: kl,
            trace: true_cov.trace(),
            estimates: est.values,
            squared_deviation,
        });
        prev_total = total;
    }

    let spent_alloc = Allocation::new(spent, prev_total as f64)?;
    let measurements = MeasurementSet::new(
        pooled
            .iter()
            .map(|(&e, p)| {
                (
                    e,
                    Measurement {
                        value: p.mean,
                        samples: p.count,
                        fluctuation: p.fluctuation(),
                    },
                )
            })
            .collect(),
    )?;
    Ok(CampaignState {
        spent: spent_alloc,
        s_estimates: s_est,
        measurements,
        target,
        history,
    })
}
