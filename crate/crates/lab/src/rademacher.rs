//! Monte Carlo estimates of Rademacher complexities.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use skm_core::metric::{nearest, wsq};
use skm_core::{rng, solve_weights, Dataset, DissimilarityTensor, GainVector, Partition, Result, SkmError};

use crate::mc::{self, MCEstimate};

fn signs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
}

/// Settings of [`rc_mc_euclid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcEuclidConfig {
    pub s: f64,
    /// Centers range over `[−m_box, m_box]^p`.
    pub m_box: f64,
    pub k: usize,
    pub n_draws: usize,
    pub seed: u64,
    /// Starts and alternations of the inner ascent.
    pub n_starts: usize,
    pub max_iter: usize,
}

/// `J(w, A) = (1/n) Σ_i ε_i (‖x_i − μ‖²_w − min_a ‖x_i − a‖²_w)`.
fn sup_objective(x: &Array2<f64>, eps: &[f64], mu: &[f64], w: &[f64], centers: &Array2<f64>) -> f64 {
    let n = x.nrows();
    let total: f64 = x
        .rows()
        .into_iter()
        .zip(eps)
        .map(|(row, &e)| {
            let r = row.as_slice().expect("contiguous");
            e * (wsq(r, mu, w) - nearest(r, centers.view(), w).1)
        })
        .sum();
    total / n as f64
}

/// Approximate `sup_{w, A} J(w, A)` by alternating: assign, per-coordinate center
/// update in `[−M, M]`, exact weight step on the linearized gains. Every iterate is
/// an admissible `(w, A)`, so the best value seen is a lower bound on the supremum.
fn ascend(x: &Array2<f64>, eps: &[f64], mu: &[f64], cfg: &RcEuclidConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (n, p) = x.dim();
    let (s, m_box, k) = (cfg.s, cfg.m_box, cfg.k);
    // w = 0 is admissible and gives J = 0
    let mut best = 0.0f64;
    for _ in 0..cfg.n_starts.max(1) {
        let mut centers = Array2::from_shape_fn((k, p), |_| rng.random_range(-m_box..=m_box));
        let mut w = solve_weights(&GainVector::new(vec![1.0; p])?, s)?.as_slice().to_vec();
        for _ in 0..cfg.max_iter {
            let labels: Vec<usize> = x
                .rows()
                .into_iter()
                .map(|r| nearest(r.as_slice().expect("contiguous"), centers.view(), &w).0)
                .collect();
            for c in 0..k {
                for j in 0..p {
                    let (mut e_sum, mut ex_sum) = (0.0, 0.0);
                    for i in (0..n).filter(|&i| labels[i] == c) {
                        e_sum += eps[i];
                        ex_sum += eps[i] * x[[i, j]];
                    }
                    // maximize −Σ ε_i (x_ij − a)² over a ∈ [−M, M]
                    centers[[c, j]] = if e_sum > 0.0 {
                        (ex_sum / e_sum).clamp(-m_box, m_box)
                    } else if ex_sum >= 0.0 {
                        m_box
                    } else {
                        -m_box
                    };
                }
            }
            let mut gains = vec![0.0; p];
            for (i, row) in x.rows().into_iter().enumerate() {
                let c = centers.row(labels[i]);
                for j in 0..p {
                    gains[j] += eps[i] * ((row[j] - mu[j]).powi(2) - (row[j] - c[j]).powi(2));
                }
            }
            gains.iter_mut().for_each(|g| *g /= n as f64);
            w = solve_weights(&GainVector::new(gains)?, s)?.as_slice().to_vec();
            best = best.max(sup_objective(x, eps, mu, &w, &centers));
        }
    }
    Ok(best)
}

/// Rademacher complexity of `{‖· − μ‖²_w − min_{a∈A} ‖· − a‖²_w}` on the sample `x`,
/// centers restricted to the box `[−M, M]^p`. The inner supremum is approximated from
/// below, so the estimate is a lower bound on the complexity up to Monte Carlo error.
pub fn rc_mc_euclid(x: &Dataset<f64>, mu: ArrayView1<'_, f64>, cfg: &RcEuclidConfig) -> Result<MCEstimate> {
    mc::require_draws(cfg.n_draws)?;
    let (m_box, seed) = (cfg.m_box, cfg.seed);
    if mu.len() != x.p() {
        return Err(SkmError::DimensionMismatch { expected: x.p(), found: mu.len() });
    }
    if let Some(b) = x.bound() {
        if b > m_box {
            return Err(SkmError::InvalidArgument(format!("data bound {b} exceeds the center box {m_box}")));
        }
    }
    let xv = x.values().as_standard_layout().into_owned();
    let mu = mu.to_vec();
    let values = (0..cfg.n_draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = rng::stream(seed, "rc-euclid", d as u64);
            let eps = signs(&mut rng, x.n());
            ascend(&xv, &eps, &mu, cfg, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mc::summarize(&values, seed))
}

/// Member lists of every cell of every partition in `family`.
fn cells(family: &[Partition], n: usize) -> Result<Vec<Vec<usize>>> {
    if family.is_empty() {
        return Err(SkmError::EmptySet);
    }
    let mut out = Vec::new();
    for part in family {
        if part.n() != n {
            return Err(SkmError::DimensionMismatch { expected: n, found: part.n() });
        }
        for k in 0..part.k() {
            out.push(part.members(k).collect());
        }
    }
    Ok(out)
}

/// `E sup_{C} (1/n) |Σ_i ε_i 1{X_i ∈ C}|`, the sup taken exactly over every cell of
/// every partition in `family`.
pub fn rc_mc_partition(family: &[Partition], n_draws: usize, seed: u64) -> Result<MCEstimate> {
    mc::require_draws(n_draws)?;
    let n = family.first().map_or(0, Partition::n);
    let cells = cells(family, n)?;
    let values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = rng::stream(seed, "rc-partition", d as u64);
            let eps = signs(&mut rng, n);
            cells.iter().map(|c| c.iter().map(|&i| eps[i]).sum::<f64>().abs()).fold(0.0, f64::max) / n as f64
        })
        .collect();
    Ok(mc::summarize(&values, seed))
}

/// `E sup_{C} (1/h) |Σ_{i<h} ε_i d_j(X_i, X_{i+h}) 1{X_i, X_{i+h} ∈ C}|` with `h = ⌊n/2⌋`.
pub fn rcj_mc(
    d: &DissimilarityTensor<f64>,
    j: usize,
    family: &[Partition],
    n_draws: usize,
    seed: u64,
) -> Result<MCEstimate> {
    mc::require_draws(n_draws)?;
    let n = d.n();
    if n < 2 {
        return Err(SkmError::InvalidArgument(format!("pair complexity needs n >= 2, got {n}")));
    }
    if j >= d.p() {
        return Err(SkmError::InvalidArgument(format!("feature {j} out of range for p = {}", d.p())));
    }
    let h = n / 2;
    let pair_vals: Vec<f64> = (0..h).map(|i| d.get(i, i + h, j)).collect();
    // for each cell, the pair indices with both ends inside
    let mut pair_cells = Vec::new();
    for part in family {
        if part.n() != n {
            return Err(SkmError::DimensionMismatch { expected: n, found: part.n() });
        }
        for k in 0..part.k() {
            pair_cells.push((0..h).filter(|&i| part.label(i) == k && part.label(i + h) == k).collect::<Vec<usize>>());
        }
    }
    if pair_cells.is_empty() {
        return Err(SkmError::EmptySet);
    }
    let values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|dr| {
            let mut rng = rng::stream(seed, "rc-pair", dr as u64);
            let eps = signs(&mut rng, h);
            pair_cells.iter().map(|c| c.iter().map(|&i| eps[i] * pair_vals[i]).sum::<f64>().abs()).fold(0.0, f64::max)
                / h as f64
        })
        .collect();
    Ok(mc::summarize(&values, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use skm_core::{Dataset, PointModel, TwoBallModel};

    #[test]
    fn single_cell_matches_mean_absolute_deviation() {
        let n = 400;
        let fam = vec![Partition::new(vec![0; n], 1).unwrap()];
        let e = rc_mc_partition(&fam, 4000, 1).unwrap();
        let want = (2.0 / (std::f64::consts::PI * n as f64)).sqrt();
        assert!((e.value - want).abs() < 4.0 * e.std_error + 0.002, "{e:?} vs {want}");
    }

    #[test]
    fn one_point_gives_one() {
        let fam = vec![Partition::new(vec![0], 1).unwrap()];
        let e = rc_mc_partition(&fam, 10, 2).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
    }

    #[test]
    fn larger_family_is_no_smaller() {
        let small = vec![Partition::new(vec![0, 0, 1, 1, 0, 1], 2).unwrap()];
        let mut big = small.clone();
        big.push(Partition::new(vec![0, 1, 0, 1, 1, 0], 2).unwrap());
        let a = rc_mc_partition(&small, 500, 3).unwrap();
        let b = rc_mc_partition(&big, 500, 3).unwrap();
        assert!(b.value >= a.value);
    }

    #[test]
    fn pair_complexity_reductions() {
        let n = 40;
        let zero = DissimilarityTensor::from_fn(n, 1, 0.0, |_, _, _| 0.0).unwrap();
        let fam = vec![Partition::new(vec![0; n], 1).unwrap()];
        assert_eq!(rcj_mc(&zero, 0, &fam, 50, 1).unwrap().value, 0.0);

        let m = 2.5;
        let flat = DissimilarityTensor::from_fn(n, 1, m, |_, i, i2| if i == i2 { 0.0 } else { m }).unwrap();
        let pair = rcj_mc(&flat, 0, &fam, 3000, 4).unwrap();
        // reduction: M · E|(1/h) Σ ε_i| over the same sign draws
        let signs_only = (0..3000)
            .map(|dr| {
                let mut rng = rng::stream(4, "rc-pair", dr as u64);
                signs(&mut rng, n / 2).iter().sum::<f64>().abs() / (n / 2) as f64
            })
            .sum::<f64>()
            / 3000.0;
        assert!((pair.value - m * signs_only).abs() < 1e-12);
        assert!(pair.value <= m);
        let short = DissimilarityTensor::from_fn(1, 1, 0.0, |_, _, _| 0.0).unwrap();
        assert!(rcj_mc(&short, 0, &[Partition::new(vec![0], 1).unwrap()], 10, 1).is_err());
    }

    #[test]
    fn euclid_estimate_is_nonnegative_and_below_bound() {
        let model = TwoBallModel::new(3, 1).unwrap();
        let x: Dataset<f64> = model.sample(40, 5).unwrap();
        let m = model.bound().unwrap();
        let cfg = RcEuclidConfig { s: 1.2, m_box: m, k: 2, n_draws: 60, seed: 6, n_starts: 5, max_iter: 30 };
        let e = rc_mc_euclid(&x, model.mean().view(), &cfg).unwrap();
        assert!(e.value >= 0.0);
        assert!(e.value <= crate::bounds::rc_bound_euclid(1.2, m, 2, 40));
    }

    #[test]
    fn euclid_se_shrinks_with_draws() {
        let model = TwoBallModel::new(3, 1).unwrap();
        let x: Dataset<f64> = model.sample(30, 5).unwrap();
        let m = model.bound().unwrap();
        let cfg = RcEuclidConfig { s: 1.0, m_box: m, k: 2, n_draws: 100, seed: 7, n_starts: 2, max_iter: 10 };
        let a = rc_mc_euclid(&x, model.mean().view(), &cfg).unwrap();
        let b = rc_mc_euclid(&x, model.mean().view(), &RcEuclidConfig { n_draws: 400, ..cfg }).unwrap();
        let ratio = b.std_error / a.std_error;
        assert!(ratio > 0.35 && ratio < 0.7, "ratio {ratio}");
    }
}
