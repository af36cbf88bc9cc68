//! Ground-truth values: the closed-form W₂ between Gaussians and an exact
//! solver for small discrete transport problems.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::MatrixRoot;
use crate::sample::{GaussianSpec, Sample};

/// Default bound on `n_x · n_y` for [`exact_discrete_w2`].
pub const DISCRETE_ORACLE_MAX_CELLS: usize = 10_000;

/// Bures term `tr(Σa + Σb − 2 (Σa^{1/2} Σb Σa^{1/2})^{1/2})`, evaluated as
/// `‖Σa^{1/2} − Σb^{1/2} U‖²_F` with `U` the orthogonal polar factor that
/// attains the minimum. The sum of squares avoids cancellation when the
/// covariances nearly coincide.
pub fn bures_term(cov_a: &DMatrix<f64>, cov_b: &DMatrix<f64>) -> Result<f64> {
    if cov_a.shape() != cov_b.shape() {
        return Err(Error::DimensionMismatch {
            expected: cov_a.nrows(),
            actual: cov_b.nrows(),
        });
    }
    let root_a = MatrixRoot::new(cov_a)?.root;
    let root_b = MatrixRoot::new(cov_b)?.root;
    let svd = (&root_a * &root_b).svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Eigen("singular value decomposition failed".into())),
    };
    let polar = v_t.transpose() * u.transpose();
    Ok((root_a - root_b * polar).norm_squared())
}

/// Closed-form 2-Wasserstein distance between two Gaussians.
pub fn closed_form_w2(a: &GaussianSpec, b: &GaussianSpec) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let mean_term = (a.mean() - b.mean()).norm_squared();
    Ok((mean_term + bures_term(a.covariance(), b.covariance())?).sqrt())
}

/// Exact optimal transport cost between two weighted point clouds with
/// ground cost `‖x − y‖^p`, returned as its p-th root. Guarded at
/// `n_x · n_y ≤` [`DISCRETE_ORACLE_MAX_CELLS`].
pub fn exact_discrete_w2(x: &Sample, y: &Sample, p: f64) -> Result<f64> {
    exact_discrete_w2_with_limit(x, y, p, DISCRETE_ORACLE_MAX_CELLS)
}

/// [`exact_discrete_w2`] with an explicit size guard.
pub fn exact_discrete_w2_with_limit(
    x: &Sample,
    y: &Sample,
    p: f64,
    max_cells: usize,
) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    let cells = x.n() * y.n();
    if cells > max_cells {
        return Err(Error::OracleGuard(format!(
            "n_x * n_y = {cells} exceeds {max_cells}"
        )));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "order p must be > 0, got {p}"
        )));
    }
    let cost = DMatrix::from_fn(x.n(), y.n(), |i, j| {
        let d2 = (x.points().row(i) - y.points().row(j)).norm_squared();
        if p == 2.0 {
            d2
        } else {
            d2.sqrt().powf(p)
        }
    });
    let plan = min_cost_transport(x.weights().as_slice(), y.weights().as_slice(), &cost)?;
    let total: f64 = plan.iter().zip(cost.iter()).map(|(f, c)| f * c).sum();
    Ok(total.max(0.0).powf(1.0 / p))
}

const MASS_EPS: f64 = 1e-15;

/// Solve the transportation problem by successive shortest augmenting paths
/// with node potentials (Dijkstra on reduced costs over the residual graph).
/// Returns the optimal plan, `supply.len() × demand.len()`.
pub fn min_cost_transport(
    supply: &[f64],
    demand: &[f64],
    cost: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let m = supply.len();
    let n = demand.len();
    if cost.shape() != (m, n) {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: cost.nrows(),
        });
    }
    if supply
        .iter()
        .chain(demand)
        .any(|w| !(w.is_finite() && *w >= 0.0))
    {
        return Err(Error::InvalidParameter(
            "masses must be finite and nonnegative".into(),
        ));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if !(total_s > 0.0) || !(total_d > 0.0) {
        return Err(Error::InvalidParameter(
            "degenerate weights: zero total mass".into(),
        ));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("non-finite cost".into()));
    }
    // rescale demand onto the supply total so both sides balance exactly
    let mut rem_s = supply.to_vec();
    let mut rem_d: Vec<f64> = demand.iter().map(|d| d * total_s / total_d).collect();
    let eps = MASS_EPS * total_s;
    let mut flow = DMatrix::<f64>::zeros(m, n);
    // potentials: sources 0..m, sinks m..m+n
    let mut pot = vec![0.0f64; m + n];
    let v = m + n;
    let mut dist = vec![f64::INFINITY; v];
    let mut prev = vec![usize::MAX; v];
    let mut done = vec![false; v];

    loop {
        if rem_s.iter().all(|&s| s <= eps) || rem_d.iter().all(|&d| d <= eps) {
            break;
        }
        dist.iter_mut().for_each(|x| *x = f64::INFINITY);
        prev.iter_mut().for_each(|x| *x = usize::MAX);
        done.iter_mut().for_each(|x| *x = false);
        for i in 0..m {
            if rem_s[i] > eps {
                dist[i] = 0.0;
            }
        }
        // dense Dijkstra
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..v {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < m {
                for j in 0..n {
                    let t = m + j;
                    if done[t] {
                        continue;
                    }
                    let rc = (cost[(u, j)] + pot[u] - pot[t]).max(0.0);
                    if best + rc < dist[t] {
                        dist[t] = best + rc;
                        prev[t] = u;
                    }
                }
            } else {
                let j = u - m;
                for i in 0..m {
                    if done[i] || flow[(i, j)] <= eps {
                        continue;
                    }
                    let rc = (-cost[(i, j)] + pot[u] - pot[i]).max(0.0);
                    if best + rc < dist[i] {
                        dist[i] = best + rc;
                        prev[i] = u;
                    }
                }
            }
        }
        // cheapest sink with unmet demand
        let mut target = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if rem_d[j] > eps && dist[m + j] < best {
                best = dist[m + j];
                target = m + j;
            }
        }
        if target == usize::MAX {
            return Err(Error::Eigen(
                "transport solver found no augmenting path".into(),
            ));
        }
        for k in 0..v {
            if dist[k].is_finite() {
                pot[k] += dist[k].min(best);
            } else {
                pot[k] += best;
            }
        }
        // bottleneck along the path
        let mut amount = rem_d[target - m];
        let mut node = target;
        while prev[node] != usize::MAX {
            let from = prev[node];
            if from >= m {
                // reverse arc sink(from) -> source(node)
                amount = amount.min(flow[(node, from - m)]);
            }
            node = from;
        }
        let source = node;
        amount = amount.min(rem_s[source]);
        if !(amount > 0.0) {
            break;
        }
        let mut node = target;
        while prev[node] != usize::MAX {
            let from = prev[node];
            if from < m {
                flow[(from, node - m)] += amount;
            } else {
                let f = &mut flow[(node, from - m)];
                *f -= amount;
                if *f <= eps {
                    *f = 0.0;
                }
            }
            node = from;
        }
        rem_s[source] -= amount;
        rem_d[target - m] -= amount;
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport1d::exact_assignment_cost;
    use nalgebra::DVector;

    fn pts(rows: usize, cols: usize, data: &[f64]) -> Sample {
        Sample::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    #[test]
    fn identical_gaussians_zero() {
        let a = GaussianSpec::ar1(6, 1.0, 0.7).unwrap();
        assert!(closed_form_w2(&a, &a).unwrap() < 1e-7);
    }

    #[test]
    fn pure_mean_shift() {
        let a = GaussianSpec::ar1(10, -2.0, 0.0).unwrap();
        let b = GaussianSpec::ar1(10, 2.0, 0.0).unwrap();
        assert!((closed_form_w2(&a, &b).unwrap() - 160f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn one_dimensional_gaussians() {
        // W2² = (μa − μb)² + (σa − σb)²
        let a = GaussianSpec::new(
            DVector::from_vec(vec![1.0]),
            DMatrix::from_element(1, 1, 4.0),
        )
        .unwrap();
        let b = GaussianSpec::new(
            DVector::from_vec(vec![-2.0]),
            DMatrix::from_element(1, 1, 9.0),
        )
        .unwrap();
        assert!((closed_form_w2(&a, &b).unwrap() - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = GaussianSpec::ar1(10, -2.0, 0.8).unwrap();
        let b = GaussianSpec::ar1(10, 2.0, 0.5).unwrap();
        let ab = closed_form_w2(&a, &b).unwrap();
        let ba = closed_form_w2(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        let shifted_a =
            GaussianSpec::new(a.mean().add_scalar(3.5), a.covariance().clone()).unwrap();
        let shifted_b =
            GaussianSpec::new(b.mean().add_scalar(3.5), b.covariance().clone()).unwrap();
        assert!((closed_form_w2(&shifted_a, &shifted_b).unwrap() - ab).abs() < 1e-9);
    }

    #[test]
    fn discrete_identical_is_zero() {
        let x = pts(3, 2, &[0.0, 1.0, 2.0, 3.0, -1.0, 0.5]);
        assert!(exact_discrete_w2(&x, &x, 2.0).unwrap() < 1e-12);
    }

    #[test]
    fn discrete_forced_plan() {
        let x = pts(2, 1, &[0.0, 1.0]);
        let y = Sample::new(DMatrix::from_row_slice(1, 1, &[2.0])).unwrap();
        assert!((exact_discrete_w2(&x, &y, 2.0).unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn discrete_matches_assignment_in_1d() {
        let u = [0.3, -1.0, 2.2, 0.9, 5.0];
        let v = [1.1, 0.0, -0.7, 3.3, 2.0];
        let x = pts(5, 1, &u);
        let y = pts(5, 1, &v);
        for p in [1.0, 2.0] {
            let a = exact_discrete_w2(&x, &y, p).unwrap();
            let b = exact_assignment_cost(&u, &v, p).unwrap();
            assert!((a - b).abs() < 1e-9, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn discrete_weighted_two_by_two() {
        // u = (0,1) uniform, v = (0,2) with weights (0.75, 0.25): the only
        // optimal vertex sends 0.5 of u=0 and 0.25 of u=1 to 0, and 0.25 of
        // u=1 to 2, cost 0.25·1 + 0.25·1 = 0.5
        let x = pts(2, 1, &[0.0, 1.0]);
        let y = Sample::with_weights(
            DMatrix::from_row_slice(2, 1, &[0.0, 2.0]),
            DVector::from_vec(vec![0.75, 0.25]),
        )
        .unwrap();
        assert!((exact_discrete_w2(&x, &y, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn discrete_guard() {
        let x = Sample::new(DMatrix::zeros(101, 1)).unwrap();
        let y = Sample::new(DMatrix::from_element(100, 1, 1.0)).unwrap();
        assert!(matches!(
            exact_discrete_w2(&x, &y, 2.0),
            Err(Error::OracleGuard(_))
        ));
        assert!((exact_discrete_w2_with_limit(&x, &y, 2.0, 20_000).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn plan_has_correct_marginals() {
        let supply = [0.2, 0.5, 0.3];
        let demand = [0.6, 0.4];
        let cost = DMatrix::from_row_slice(3, 2, &[1.0, 4.0, 2.0, 1.0, 3.0, 0.5]);
        let plan = min_cost_transport(&supply, &demand, &cost).unwrap();
        for (i, s) in supply.iter().enumerate() {
            assert!((plan.row(i).sum() - s).abs() < 1e-12);
        }
        for (j, t) in demand.iter().enumerate() {
            assert!((plan.column(j).sum() - t).abs() < 1e-12);
        }
        // LP optimum by hand: 0.2 of s0 -> d0, 0.4 of s1 -> d0, 0.1 of s1 -> d1,
        // 0.3 of s2 -> d1  => 0.2 + 0.8 + 0.1 + 0.15 = 1.25
        let total: f64 = plan.iter().zip(cost.iter()).map(|(f, c)| f * c).sum();
        assert!((total - 1.25).abs() < 1e-12, "{total}");
    }
}
