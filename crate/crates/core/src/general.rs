//! Partition-form sparse K-means over an arbitrary per-feature dissimilarity tensor.
//!
//! Sign convention: the objective is maximized; risks are its negation.

use ndarray::Array2;
use rand::seq::{index::sample, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashSet;

use crate::error::{Result, SkmError};
use crate::euclid::assign;
use crate::pairwise::{check_len, pairwise_gains};
use crate::partitions::{check_exhaustive_size, for_each_partition};
use crate::rng;
use crate::scalar::Scalar;
use crate::types::{CentroidSet, Dataset, DissimilarityTensor, Partition, Theta, WeightVector};
use crate::weights::{solve_weights, GainVector};

/// Per-feature bracketed gains of the partition objective.
pub fn general_gains<F: Scalar>(d: &DissimilarityTensor<F>, part: &Partition) -> Result<GainVector<F>> {
    check_len(d.n(), part.n())?;
    pairwise_gains(part, d.p(), |j, i, i2| d.get(i, i2, j))
}

/// `Σ_j w_j ((1/n) Σ_i Σ_i' d_{i,i',j} − Σ_k (1/n_k) Σ_{i,i'∈C_k} d_{i,i',j})`.
pub fn objective_general<F: Scalar>(d: &DissimilarityTensor<F>, part: &Partition, w: &WeightVector<F>) -> Result<F> {
    check_len(d.p(), w.p())?;
    Ok(w.dot(general_gains(d, part)?.as_slice()))
}

/// Scaled empirical risk
/// `−Σ_j w_j (1/(n−1)) [(1/n) Σ_{i≠i'} d_{i,i',j} − Σ_k (1/n_k) Σ_{i,i'∈C_k} d_{i,i',j}]`,
/// summed off-diagonal; equals `−objective_general / (n − 1)`.
pub fn empirical_risk_general<F: Scalar>(
    d: &DissimilarityTensor<F>,
    part: &Partition,
    w: &WeightVector<F>,
) -> Result<F> {
    check_len(d.n(), part.n())?;
    check_len(d.p(), w.p())?;
    let n = d.n();
    if n < 2 {
        return Err(SkmError::InvalidArgument(format!("scaled empirical risk needs n >= 2, got {n}")));
    }
    part.require_nonempty()?;
    let sizes = part.sizes();
    let nf = F::from_count(n);
    let mut risk = F::zero();
    for (j, &wj) in w.as_slice().iter().enumerate() {
        let slice = d.feature(j);
        let mut off_diag = F::zero();
        let mut within = vec![F::zero(); part.k()];
        for i in 0..n {
            for i2 in 0..n {
                if i == i2 {
                    continue;
                }
                let v = slice[[i, i2]];
                off_diag += v;
                if part.label(i) == part.label(i2) {
                    within[part.label(i)] = within[part.label(i)] + v;
                }
            }
        }
        let mut bracket = off_diag / nf;
        for (s, &nk) in within.iter().zip(&sizes) {
            bracket -= *s / F::from_count(nk);
        }
        risk -= wj * bracket / F::from_count(n - 1);
    }
    Ok(risk)
}

/// Globally best partition at fixed `w`; first optimum in lexicographic label order.
pub fn exhaustive_partition_oracle<F: Scalar>(
    d: &DissimilarityTensor<F>,
    w: &WeightVector<F>,
    k: usize,
) -> Result<(Partition, F)> {
    check_len(d.p(), w.p())?;
    check_exhaustive_size(d.n(), k)?;
    best_over_partitions(d.n(), k, |part| Ok((objective_general(d, part, w)?, ()))).map(|(p, v, _)| (p, v))
}

/// Joint optimum over partitions and weights: each partition gets its exact weight step.
pub fn exhaustive_joint_oracle<F: Scalar>(d: &DissimilarityTensor<F>, s: F, k: usize) -> Result<(Theta<F>, F)> {
    check_exhaustive_size(d.n(), k)?;
    let (part, value, w) = best_over_partitions(d.n(), k, |part| {
        let gains = general_gains(d, part)?;
        let w = solve_weights(&gains, s)?;
        Ok((w.dot(gains.as_slice()), w))
    })?;
    Ok((Theta::general(w, part), value))
}

fn best_over_partitions<F: Scalar, E>(
    n: usize,
    k: usize,
    mut score: impl FnMut(&Partition) -> Result<(F, E)>,
) -> Result<(Partition, F, E)> {
    let mut best: Option<(Partition, F, E)> = None;
    let mut failure = None;
    for_each_partition(n, k, |labels| {
        if failure.is_some() {
            return;
        }
        let part = Partition::from_raw(labels.to_vec(), k);
        match score(&part) {
            Ok((v, extra)) => {
                if best.as_ref().is_none_or(|(_, b, _)| v > *b) {
                    best = Some((part, v, extra));
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    best.ok_or(SkmError::TooManyClusters { k, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFitOptions {
    pub max_iter: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for GeneralFitOptions {
    fn default() -> Self {
        Self { max_iter: 50, n_starts: 20, seed: 0, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFit<F> {
    pub theta: Theta<F>,
    pub objective: F,
    /// Objective after each accepted alternation; nondecreasing.
    pub trace: Vec<F>,
    pub start: usize,
}

impl<F: Scalar> GeneralFit<F> {
    pub fn partition(&self) -> &Partition {
        self.theta.partition().expect("general fit holds a partition")
    }
}

/// Best-improvement single-point relocation at fixed weighted dissimilarity.
/// Moves that would empty a cluster are never taken.
pub fn relocation_search<F: Scalar>(dw: &Array2<F>, part: &Partition) -> Result<Partition> {
    part.require_nonempty()?;
    let n = part.n();
    let k = part.k();
    check_len(n, dw.nrows())?;
    let mut labels = part.labels().to_vec();
    let mut sizes = part.sizes();
    // row_to[i][c] = Σ_{l ∈ C_c} dw[i, l]
    let mut row_to = vec![vec![F::zero(); k]; n];
    let mut within = vec![F::zero(); k];
    let mut total = F::zero();
    for i in 0..n {
        for l in 0..n {
            let v = dw[[i, l]];
            row_to[i][labels[l]] += v;
            total += v;
        }
        within[labels[i]] += row_to[i][labels[i]];
    }
    let two = F::lit(2.0);
    let threshold = F::lit(1e-12) * (total / F::from_count(n)).abs().max(F::min_positive_value());
    let max_moves = 100 * n * k;
    for _ in 0..max_moves {
        let mut best: Option<(usize, usize, F)> = None;
        for i in 0..n {
            let a = labels[i];
            if sizes[a] < 2 {
                continue;
            }
            let na = F::from_count(sizes[a]);
            let before_a = within[a] / na;
            let after_a = (within[a] - two * row_to[i][a]) / (na - F::one());
            for b in (0..k).filter(|&b| b != a) {
                let nb = F::from_count(sizes[b]);
                let after_b = (within[b] + two * row_to[i][b]) / (nb + F::one());
                let gain = before_a + within[b] / nb - after_a - after_b;
                if gain > threshold && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((i, b, gain));
                }
            }
        }
        let Some((i, b, _)) = best else { break };
        let a = labels[i];
        within[a] -= two * row_to[i][a];
        within[b] += two * row_to[i][b];
        sizes[a] -= 1;
        sizes[b] += 1;
        labels[i] = b;
        for (l, row) in row_to.iter_mut().enumerate() {
            let v = dw[[l, i]];
            row[a] -= v;
            row[b] += v;
        }
    }
    Partition::checked(labels, k)
}

fn random_partition(n: usize, k: usize, rng: &mut impl Rng) -> Partition {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![0; n];
    for (slot, &i) in order.iter().enumerate() {
        labels[i] = if slot < k { slot } else { rng.random_range(0..k) };
    }
    Partition::from_raw(labels, k)
}

fn fit_general_once<F: Scalar>(
    d: &DissimilarityTensor<F>,
    k: usize,
    s: F,
    opts: &GeneralFitOptions,
    start: usize,
) -> Result<GeneralFit<F>> {
    let mut rng = rng::stream(opts.seed, "general-fit", start as u64);
    let mut part = random_partition(d.n(), k, &mut rng);
    let mut gains = general_gains(d, &part)?;
    let mut w = solve_weights(&gains, s)?;
    let mut obj = w.dot(gains.as_slice());
    let mut trace = vec![obj];
    let tol = F::lit(opts.tol);
    for _ in 1..opts.max_iter {
        let next = relocation_search(&d.weighted(&w), &part)?;
        let next_gains = general_gains(d, &next)?;
        let next_w = solve_weights(&next_gains, s)?;
        let next_obj = next_w.dot(next_gains.as_slice());
        if next_obj < obj {
            break;
        }
        let small = next_obj - obj <= tol * obj.abs();
        part = next;
        gains = next_gains;
        w = next_w;
        obj = next_obj;
        trace.push(obj);
        if small {
            break;
        }
    }
    let _ = gains;
    Ok(GeneralFit { theta: Theta::general(w, part), objective: obj, trace, start })
}

/// Alternating weight step / relocation search, best of `n_starts` random partitions.
pub fn fit_general<F: Scalar>(
    d: &DissimilarityTensor<F>,
    k: usize,
    s: F,
    opts: &GeneralFitOptions,
) -> Result<GeneralFit<F>> {
    if k == 0 {
        return Err(SkmError::InvalidArgument("K must be at least 1".into()));
    }
    if k > d.n() {
        return Err(SkmError::TooManyClusters { k, n: d.n() });
    }
    if !s.is_finite() || s < F::zero() {
        return Err(SkmError::InvalidSparsity(s.as_f64()));
    }
    let results: Vec<Result<GeneralFit<F>>> =
        (0..opts.n_starts.max(1)).into_par_iter().map(|start| fit_general_once(d, k, s, opts, start)).collect();
    let mut best: Option<GeneralFit<F>> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.objective > b.objective) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Distinct Voronoi partitions from `n_candidates` seeded draws of `K` data rows as centers
/// (unweighted Euclidean). Draws that leave a cell empty are skipped.
pub fn voronoi_partition_family<F: Scalar>(
    x: &Dataset<F>,
    k: usize,
    n_candidates: usize,
    seed: u64,
) -> Result<Vec<Partition>> {
    if k == 0 || k > x.n() {
        return Err(SkmError::TooManyClusters { k, n: x.n() });
    }
    let unit = WeightVector::unit(x.p());
    let mut seen = HashSet::new();
    let mut family = Vec::new();
    for c in 0..n_candidates {
        let mut rng = rng::stream(seed, "voronoi", c as u64);
        let picks = sample(&mut rng, x.n(), k);
        let mut centers = Array2::zeros((k, x.p()));
        for (slot, i) in picks.iter().enumerate() {
            centers.row_mut(slot).assign(&x.row(i));
        }
        let part = assign(x, &CentroidSet::new(centers)?, &unit)?;
        if part.first_empty().is_some() {
            continue;
        }
        if seen.insert(part.canonical()) {
            family.push(part);
        }
    }
    Ok(family)
}
