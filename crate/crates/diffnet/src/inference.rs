//! Fisher information, covariance, maximum-likelihood estimation and the
//! design objectives.
//!
//! With `sigma_e^2 = s_e^2 / n_e` per measured edge, the Fisher information
//! of the estimated quantities is
//!
//! ```text
//! F_ii = 1/sigma_i^2 + sum_{k != i} 1/sigma_ik^2,    F_ij = -1/sigma_ij^2
//! ```
//!
//! and the covariance of the maximum-likelihood estimates is `C = F^{-1}`.
//! `F` is linear in the allocation, which is what makes the budget
//! allocation problem convex.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::network::{Allocation, DifferenceNetwork, EdgeId, MeasurementSet};

/// Condition-number estimate above which the information matrix is treated
/// as structurally singular.
pub const SINGULARITY_CONDITION: f64 = 1e12;

/// The three scalarizations of the covariance matrix that can be minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Minimize `tr(C)`: the total variance.
    A,
    /// Minimize `ln det(C)`: the volume of the confidence ellipsoid.
    D,
    /// Minimize `||C||_2`: the largest eigenvalue of the covariance.
    E,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::A => write!(f, "a"),
            Objective::D => write!(f, "d"),
            Objective::E => write!(f, "e"),
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Objective::A),
            "d" => Ok(Objective::D),
            "e" => Ok(Objective::E),
            other => Err(Error::Parse(format!(
                "unknown objective {other:?}; expected a, d or e"
            ))),
        }
    }
}

/// Adds `w * u_e u_e^T` to `f`, where `u_e` is the measurement direction of
/// edge `e` (indicator of `i` for an individual edge, difference of
/// indicators for a pair edge).
fn accumulate(f: &mut DMatrix<f64>, e: EdgeId, w: f64) {
    let (a, b) = e.endpoints();
    if a == 0 {
        let q = b - 1;
        f[(q, q)] += w;
    } else {
        let (p, q) = (a - 1, b - 1);
        f[(p, p)] += w;
        f[(q, q)] += w;
        f[(p, q)] -= w;
        f[(q, p)] -= w;
    }
}

/// Fisher information matrix of a network under an allocation. Edges with
/// zero samples contribute nothing; the result is linear in the allocation.
pub fn fisher_matrix(net: &DifferenceNetwork, alloc: &Allocation) -> Result<DMatrix<f64>> {
    let m = net.quantity_count();
    let mut f = DMatrix::zeros(m, m);
    for (e, n) in alloc.iter() {
        if n == 0.0 {
            continue;
        }
        let s = net.fluctuation(e).ok_or(Error::UnknownEdge(e))?;
        accumulate(&mut f, e, n / (s * s));
    }
    Ok(f)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts a symmetric positive definite information matrix. Fails with
/// [`Error::SingularInformation`] when the factorization breaks down or the
/// condition estimate exceeds [`SINGULARITY_CONDITION`] — the typical cause
/// being a quantity with no measured path to the origin, which leaves the
/// estimates translation invariant.
pub fn covariance(f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(f.clone()).ok_or(Error::SingularInformation)?;
    let mut c = chol.inverse();
    // The inverse of a symmetric matrix computed through its factorization
    // can carry tiny asymmetries; re-symmetrize.
    let ct = c.transpose();
    c = (c + ct) / 2.0;
    if one_norm(f) * one_norm(&c) > SINGULARITY_CONDITION {
        return Err(Error::SingularInformation);
    }
    Ok(c)
}

/// Evaluates one of the design objectives on a covariance matrix.
pub fn objective(c: &DMatrix<f64>, which: Objective) -> Result<f64> {
    let m = c.nrows();
    let scale = c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for i in 0..m {
        for j in (i + 1)..m {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-8 * scale.max(1e-300) {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    match which {
        Objective::A => Ok(c.trace()),
        Objective::D => {
            let chol = Cholesky::new(c.clone()).ok_or(Error::NotPositiveDefinite)?;
            Ok(2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
        }
        Objective::E => {
            let eig = SymmetricEigen::new(c.clone()).eigenvalues;
            let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            if min <= 0.0 {
                return Err(Error::NotPositiveDefinite);
            }
            Ok(eig.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
    }
}

/// Analytic gradient of an objective with respect to the per-edge sample
/// counts, evaluated at `alloc`:
///
/// * A: `d tr(C) / d n_e = -||C u_e||^2 / s_e^2`
/// * D: `d ln det(C) / d n_e = -(u_e^T C u_e) / s_e^2`
/// * E: subgradient `-(u_e^T v)^2 / (lambda_min^2 s_e^2)` averaged over the
///   eigenspace of `lambda_min(F)` when it is degenerate.
pub fn gradient(
    net: &DifferenceNetwork,
    alloc: &Allocation,
    which: Objective,
) -> Result<BTreeMap<EdgeId, f64>> {
    let f = fisher_matrix(net, alloc)?;
    let edges: Vec<EdgeId> = net.edge_ids().collect();
    let s2: Vec<f64> = edges
        .iter()
        .map(|&e| {
            let s = net.fluctuation(e).expect("edge from the network itself");
            s * s
        })
        .collect();
    let (_, g) = value_and_gradient_dense(&f, &edges, &s2, which)?;
    Ok(edges.into_iter().zip(g).collect())
}

/// Dense-matrix objective-plus-gradient core shared with the solver; one
/// factorization serves both. `edges` and `s2` list the differentiated
/// coordinates.
pub(crate) fn value_and_gradient_dense(
    f: &DMatrix<f64>,
    edges: &[EdgeId],
    s2: &[f64],
    which: Objective,
) -> Result<(f64, Vec<f64>)> {
    match which {
        Objective::A | Objective::D => {
            let chol = Cholesky::new(f.clone()).ok_or(Error::SingularInformation)?;
            let value = match which {
                Objective::A => {
                    // Filled in below from the inverse.
                    0.0
                }
                Objective::D => {
                    -2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
                }
                Objective::E => unreachable!(),
            };
            let c = chol.inverse();
            let g = edges
                .iter()
                .zip(s2)
                .map(|(&e, &s2)| {
                    let (a, b) = e.endpoints();
                    match which {
                        Objective::A => {
                            let sq = if a == 0 {
                                c.column(b - 1).norm_squared()
                            } else {
                                let (ca, cb) = (c.column(a - 1), c.column(b - 1));
                                ca.iter().zip(cb.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
                            };
                            -sq / s2
                        }
                        Objective::D => {
                            let quad = if a == 0 {
                                c[(b - 1, b - 1)]
                            } else {
                                let (p, q) = (a - 1, b - 1);
                                c[(p, p)] + c[(q, q)] - 2.0 * c[(p, q)]
                            };
                            -quad / s2
                        }
                        Objective::E => unreachable!(),
                    }
                })
                .collect();
            let value = if which == Objective::A { c.trace() } else { value };
            Ok((value, g))
        }
        Objective::E => {
            let (lambda_min, basis) = min_eigenspace(f)?;
            let scale = 1.0 / (lambda_min * lambda_min * basis.len() as f64);
            let g = edges
                .iter()
                .zip(s2)
                .map(|(&e, &s2)| {
                    let (a, b) = e.endpoints();
                    let mut acc = 0.0;
                    for v in &basis {
                        let proj = if a == 0 {
                            v[b - 1]
                        } else {
                            v[a - 1] - v[b - 1]
                        };
                        acc += proj * proj;
                    }
                    -acc * scale / s2
                })
                .collect();
            Ok((1.0 / lambda_min, g))
        }
    }
}

/// Smallest eigenvalue of `f` and an orthonormal basis of its eigenspace
/// (eigenvalues within relative 1e-9 of the minimum are treated as
/// degenerate).
pub(crate) fn min_eigenspace(f: &DMatrix<f64>) -> Result<(f64, Vec<DVector<f64>>)> {
    let eig = SymmetricEigen::new(f.clone());
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !min.is_finite() {
        return Err(Error::SingularInformation);
    }
    let tol = 1e-9 * min.abs();
    let basis = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l - min <= tol)
        .map(|(k, _)| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok((min, basis))
}

/// Information matrix, covariance and all three objective values for one
/// `(network, allocation)` pair.
#[derive(Debug, Clone)]
pub struct InformationState {
    pub fisher: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    pub trace: f64,
    pub log_det: f64,
    /// Largest eigenvalue of the covariance, computed as
    /// `1 / lambda_min(F)` so that it never requires forming `C` from a
    /// near-singular `F`.
    pub spectral_norm: f64,
}

impl InformationState {
    pub fn evaluate(net: &DifferenceNetwork, alloc: &Allocation) -> Result<Self> {
        let fisher = fisher_matrix(net, alloc)?;
        let covariance = covariance(&fisher)?;
        let chol = Cholesky::new(fisher.clone()).ok_or(Error::SingularInformation)?;
        let log_det = -2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let (lambda_min, _) = min_eigenspace(&fisher)?;
        Ok(InformationState {
            trace: covariance.trace(),
            log_det,
            spectral_norm: 1.0 / lambda_min,
            fisher,
            covariance,
        })
    }

    pub fn objective(&self, which: Objective) -> f64 {
        match which {
            Objective::A => self.trace,
            Objective::D => self.log_det,
            Objective::E => self.spectral_norm,
        }
    }
}

/// Maximum-likelihood estimates of the quantities with their covariance.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub values: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

/// Maximum-likelihood estimation from observed measurements: solves
/// `F x = z` with `z_i = x_i_hat / sigma_i^2 + sum_j x_ij_hat / sigma_ij^2`
/// using the sign convention `x_ji_hat = -x_ij_hat`.
pub fn estimate(net: &DifferenceNetwork, meas: &MeasurementSet) -> Result<Estimate> {
    let m = net.quantity_count();
    let mut f = DMatrix::zeros(m, m);
    let mut z = DVector::zeros(m);
    for (e, obs) in meas.iter() {
        if !net.has_edge(e) {
            return Err(Error::UnknownEdge(e));
        }
        let w = obs.samples / (obs.fluctuation * obs.fluctuation);
        accumulate(&mut f, e, w);
        let (a, b) = e.endpoints();
        if a == 0 {
            z[b - 1] += w * obs.value;
        } else {
            z[a - 1] += w * obs.value;
            z[b - 1] -= w * obs.value;
        }
    }
    let c = covariance(&f)?;
    let chol = Cholesky::new(f).ok_or(Error::SingularInformation)?;
    let x = chol.solve(&z);
    Ok(Estimate {
        values: x.iter().copied().collect(),
        covariance: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{complete_network, Measurement};
    use std::collections::BTreeMap;

    fn symmetric_net() -> DifferenceNetwork {
        complete_network(2, |_| 1.0).unwrap()
    }

    fn alloc(net_budget: f64, pairs: &[((usize, usize), f64)]) -> Allocation {
        Allocation::from_pairs(
            pairs.iter().map(|&((i, j), n)| (EdgeId::new(i, j), n)),
            net_budget,
        )
        .unwrap()
    }

    #[test]
    fn fisher_of_symmetric_triangle() {
        let net = symmetric_net();
        let a = alloc(3.0, &[((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.0)]);
        let f = fisher_matrix(&net, &a).unwrap();
        assert_eq!(f, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
    }

    #[test]
    fn fisher_without_pair_edge_is_identity() {
        let net = symmetric_net();
        let a = alloc(2.0, &[((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 0.0)]);
        let f = fisher_matrix(&net, &a).unwrap();
        assert_eq!(f, DMatrix::identity(2, 2));
    }

    #[test]
    fn fisher_is_linear_in_allocation() {
        let net = symmetric_net();
        let a1 = alloc(3.0, &[((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.0)]);
        let a2 = alloc(6.0, &[((0, 1), 2.0), ((0, 2), 2.0), ((1, 2), 2.0)]);
        let f1 = fisher_matrix(&net, &a1).unwrap();
        let f2 = fisher_matrix(&net, &a2).unwrap();
        assert_eq!(f2, f1 * 2.0);
    }

    #[test]
    fn covariance_of_triangle_fisher() {
        let f = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let c = covariance(&f).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert!((&c - &expect).norm() < 1e-14);
        assert!((c.trace() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn covariance_of_identity() {
        let f = DMatrix::identity(3, 3);
        let c = covariance(&f).unwrap();
        assert!((&c - DMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn covariance_detects_translation_invariance() {
        // Only the pair edge measured: the absolute scale is undetermined.
        let net = symmetric_net();
        let a = alloc(1.0, &[((1, 2), 1.0)]);
        let f = fisher_matrix(&net, &a).unwrap();
        assert!(matches!(covariance(&f), Err(Error::SingularInformation)));
    }

    #[test]
    fn objectives_on_identity() {
        let c = DMatrix::identity(3, 3);
        assert_eq!(objective(&c, Objective::A).unwrap(), 3.0);
        assert_eq!(objective(&c, Objective::D).unwrap(), 0.0);
        assert_eq!(objective(&c, Objective::E).unwrap(), 1.0);
    }

    #[test]
    fn objectives_on_triangle_covariance() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        // Eigenvalues 1 and 1/3 by the 2x2 closed form.
        assert!((objective(&c, Objective::A).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((objective(&c, Objective::D).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-14);
        assert!((objective(&c, Objective::E).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn objective_homogeneity() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        let scaled = &c * 4.0;
        let m = 2.0;
        assert!(
            (objective(&scaled, Objective::A).unwrap() - 4.0 * objective(&c, Objective::A).unwrap())
                .abs()
                < 1e-12
        );
        assert!(
            (objective(&scaled, Objective::E).unwrap() - 4.0 * objective(&c, Objective::E).unwrap())
                .abs()
                < 1e-12
        );
        assert!(
            (objective(&scaled, Objective::D).unwrap()
                - (objective(&c, Objective::D).unwrap() + m * 4.0f64.ln()))
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn objective_rejects_indefinite() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            objective(&c, Objective::D),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn gradient_hand_value_at_identity_fisher() {
        let net = symmetric_net();
        let a = alloc(2.0, &[((0, 1), 1.0), ((0, 2), 1.0)]);
        let g = gradient(&net, &a, Objective::A).unwrap();
        // C = I, so ||C u||^2 = 1 on the individual edge.
        assert!((g[&EdgeId::individual(1)] + 1.0).abs() < 1e-12);
        // Pair direction u = e1 - e2 has ||C u||^2 = 2.
        assert!((g[&EdgeId::new(1, 2)] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_symmetry_on_symmetric_network() {
        let net = symmetric_net();
        let a = alloc(3.0, &[((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.0)]);
        for which in [Objective::A, Objective::D, Objective::E] {
            let g = gradient(&net, &a, which).unwrap();
            let d = (g[&EdgeId::individual(1)] - g[&EdgeId::individual(2)]).abs();
            assert!(d < 1e-12, "{which}: {d}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for m in 2..=6 {
            let net = complete_network(m, |_| 1.0).unwrap();
            let net = net
                .with_fluctuations(
                    &net.edge_ids()
                        .map(|e| (e, rng.gen_range(0.5..3.0)))
                        .collect(),
                )
                .unwrap();
            let edges: Vec<EdgeId> = net.edge_ids().collect();
            let budget = 10.0;
            let raw: Vec<f64> = edges.iter().map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let n: BTreeMap<EdgeId, f64> = edges
                .iter()
                .zip(&raw)
                .map(|(&e, &v)| (e, v * budget / total))
                .collect();
            let a = Allocation::new(n.clone(), budget).unwrap();
            for which in [Objective::A, Objective::D] {
                let g = gradient(&net, &a, which).unwrap();
                let h = 1e-6 * budget;
                for &e in &edges {
                    let mut plus = n.clone();
                    *plus.get_mut(&e).unwrap() += h;
                    let mut minus = n.clone();
                    *minus.get_mut(&e).unwrap() -= h;
                    let fp = objective(
                        &covariance(
                            &fisher_matrix(&net, &Allocation::new(plus, budget + h).unwrap())
                                .unwrap(),
                        )
                        .unwrap(),
                        which,
                    )
                    .unwrap();
                    let fm = objective(
                        &covariance(
                            &fisher_matrix(&net, &Allocation::new(minus, budget - h).unwrap())
                                .unwrap(),
                        )
                        .unwrap(),
                        which,
                    )
                    .unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    let rel = (g[&e] - fd).abs() / fd.abs().max(1e-12);
                    assert!(rel < 1e-5, "m={m} {which} edge {e}: {} vs {fd}", g[&e]);
                }
            }
        }
    }

    #[test]
    fn estimate_combines_individual_and_difference() {
        let net = symmetric_net();
        let meas = MeasurementSet::new(
            [
                (
                    EdgeId::individual(1),
                    Measurement {
                        value: 1.0,
                        samples: 1.0,
                        fluctuation: 1.0,
                    },
                ),
                (
                    EdgeId::new(1, 2),
                    Measurement {
                        value: -0.5,
                        samples: 1.0,
                        fluctuation: 1.0,
                    },
                ),
            ]
            .into(),
        )
        .unwrap();
        let est = estimate(&net, &meas).unwrap();
        assert!((est.values[0] - 1.0).abs() < 1e-12);
        assert!((est.values[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_with_only_individual_measurements() {
        let net = symmetric_net();
        let meas = MeasurementSet::new(
            [
                (
                    EdgeId::individual(1),
                    Measurement {
                        value: 2.5,
                        samples: 4.0,
                        fluctuation: 1.0,
                    },
                ),
                (
                    EdgeId::individual(2),
                    Measurement {
                        value: -0.5,
                        samples: 9.0,
                        fluctuation: 2.0,
                    },
                ),
            ]
            .into(),
        )
        .unwrap();
        let est = estimate(&net, &meas).unwrap();
        assert!((est.values[0] - 2.5).abs() < 1e-12);
        assert!((est.values[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_reproduces_consistent_measurements() {
        let net = symmetric_net();
        let (x1, x2) = (0.7, -1.3);
        let meas = MeasurementSet::new(
            [
                (
                    EdgeId::individual(1),
                    Measurement {
                        value: x1,
                        samples: 3.0,
                        fluctuation: 0.9,
                    },
                ),
                (
                    EdgeId::individual(2),
                    Measurement {
                        value: x2,
                        samples: 5.0,
                        fluctuation: 2.3,
                    },
                ),
                (
                    EdgeId::new(1, 2),
                    Measurement {
                        value: x1 - x2,
                        samples: 7.0,
                        fluctuation: 0.4,
                    },
                ),
            ]
            .into(),
        )
        .unwrap();
        let est = estimate(&net, &meas).unwrap();
        assert!((est.values[0] - x1).abs() < 1e-12);
        assert!((est.values[1] - x2).abs() < 1e-12);
    }

    #[test]
    fn estimate_fails_without_origin_connection() {
        let net = symmetric_net();
        let meas = MeasurementSet::new(
            [(
                EdgeId::new(1, 2),
                Measurement {
                    value: 0.3,
                    samples: 10.0,
                    fluctuation: 1.0,
                },
            )]
            .into(),
        )
        .unwrap();
        assert!(matches!(
            estimate(&net, &meas),
            Err(Error::SingularInformation)
        ));
    }

    #[test]
    fn information_state_is_consistent() {
        let net = symmetric_net();
        let a = alloc(3.0, &[((0, 1), 1.2), ((0, 2), 0.8), ((1, 2), 1.0)]);
        let st = InformationState::evaluate(&net, &a).unwrap();
        let id = &st.fisher * &st.covariance;
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-8);
        assert!((st.trace - objective(&st.covariance, Objective::A).unwrap()).abs() < 1e-12);
        assert!(
            (st.spectral_norm - objective(&st.covariance, Objective::E).unwrap()).abs()
                < 1e-10 * st.spectral_norm
        );
    }
}
