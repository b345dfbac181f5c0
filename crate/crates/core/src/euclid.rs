//! Sparse K-means under squared Euclidean dissimilarity.
//!
//! Two equivalent objectives are provided: the pairwise weighted BCSS
//! `Σ_j w_j b_j` and the centroid form
//! `(1/n) Σ_i (‖X_i − X̄‖²_w − min_{a∈A} ‖X_i − a‖²_w)`. For a partition with
//! cluster means as centers the pairwise value equals
//! `2 [Σ_i ‖X_i − X̄‖²_w − Σ_k Σ_{i∈C_k} ‖X_i − X̄_k‖²_w]`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Result, SkmError};
use crate::metric::{nearest, wsq};
use crate::pairwise::{check_len, pairwise_gains};
use crate::partitions::{check_exhaustive_size, for_each_partition};
use crate::rng;
use crate::scalar::Scalar;
use crate::types::{CentroidSet, Dataset, Partition, Theta, WeightVector};
use crate::weights::{solve_weights, GainVector};

fn row_slice<'a, F: Scalar>(x: &'a ArrayView1<'_, F>) -> &'a [F] {
    x.as_slice().expect("dataset rows are contiguous")
}

/// Pairwise per-feature gains `b_j`, summed directly over all `n²` pairs.
pub fn bcss_per_feature<F: Scalar>(x: &Dataset<F>, part: &Partition) -> Result<GainVector<F>> {
    check_len(x.n(), part.n())?;
    let v = x.values();
    pairwise_gains(part, x.p(), |j, i, i2| {
        let diff = v[[i, j]] - v[[i2, j]];
        diff * diff
    })
}

/// Same gains through the `O(np)` identity `b_j = 2 [TSS_j − WSS_j]`.
pub fn bcss_centroid_form<F: Scalar>(x: &Dataset<F>, part: &Partition) -> Result<GainVector<F>> {
    check_len(x.n(), part.n())?;
    part.require_nonempty()?;
    let centers = update_centroids(x, part)?;
    let grand = x.mean();
    let two = F::lit(2.0);
    let v = x.values();
    let mut gains = vec![F::zero(); x.p()];
    for (i, row) in v.rows().into_iter().enumerate() {
        let c = centers.center(part.label(i));
        for j in 0..x.p() {
            let t = row[j] - grand[j];
            let w = row[j] - c[j];
            gains[j] = gains[j] + t * t - w * w;
        }
    }
    GainVector::new(gains.into_iter().map(|g| two * g).collect())
}

/// Nearest-centroid labels under `‖·‖²_w`, ties to the lowest index.
/// Clusters may come back empty.
pub fn assign<F: Scalar>(x: &Dataset<F>, centers: &CentroidSet<F>, w: &WeightVector<F>) -> Result<Partition> {
    check_len(w.p(), x.p())?;
    check_len(w.p(), centers.p())?;
    let c = centers.centers().as_standard_layout().into_owned();
    let labels = x.values().rows().into_iter().map(|row| nearest(row_slice(&row), c.view(), w.as_slice()).0).collect();
    Ok(Partition::from_raw(labels, centers.k()))
}

/// Coordinatewise cluster means.
pub fn update_centroids<F: Scalar>(x: &Dataset<F>, part: &Partition) -> Result<CentroidSet<F>> {
    check_len(x.n(), part.n())?;
    part.require_nonempty()?;
    let mut sums = Array2::<F>::zeros((part.k(), x.p()));
    for (i, row) in x.values().rows().into_iter().enumerate() {
        let mut s = sums.row_mut(part.label(i));
        s += &row;
    }
    for (k, size) in part.sizes().into_iter().enumerate() {
        let mut s = sums.row_mut(k);
        s /= F::from_count(size);
    }
    CentroidSet::new(sums)
}

/// Pairwise weighted BCSS `Σ_j w_j b_j`.
pub fn objective_pairwise<F: Scalar>(x: &Dataset<F>, part: &Partition, w: &WeightVector<F>) -> Result<F> {
    check_len(x.p(), w.p())?;
    Ok(w.dot(bcss_per_feature(x, part)?.as_slice()))
}

/// Mean of `‖X_i − reference‖²_w − min_{a∈A} ‖X_i − a‖²_w`.
fn centered_gap<F: Scalar>(
    x: &Dataset<F>,
    centers: &CentroidSet<F>,
    w: &WeightVector<F>,
    reference: &[F],
) -> Result<F> {
    check_len(w.p(), x.p())?;
    check_len(w.p(), centers.p())?;
    check_len(w.p(), reference.len())?;
    let c = centers.centers().as_standard_layout().into_owned();
    let ws = w.as_slice();
    let total: F = x
        .values()
        .rows()
        .into_iter()
        .map(|row| {
            let r = row_slice(&row);
            wsq(r, reference, ws) - nearest(r, c.view(), ws).1
        })
        .sum();
    Ok(total / F::from_count(x.n()))
}

/// Centroid-form objective `(1/n) Σ_i (‖X_i − X̄‖²_w − min_{a∈A} ‖X_i − a‖²_w)`.
pub fn objective_centroid<F: Scalar>(x: &Dataset<F>, centers: &CentroidSet<F>, w: &WeightVector<F>) -> Result<F> {
    let mean = x.mean();
    centered_gap(x, centers, w, mean.as_slice().expect("contiguous"))
}

/// `Σ_i ‖X_i − X̄‖²_w − Σ_k Σ_{i∈C_k} ‖X_i − X̄_k‖²_w`: the centroid form at the
/// cluster means, without the `1/n` normalization.
pub fn dispersion_gap<F: Scalar>(x: &Dataset<F>, part: &Partition, w: &WeightVector<F>) -> Result<F> {
    check_len(x.p(), w.p())?;
    let centers = update_centroids(x, part)?;
    let mean = x.mean();
    let ms = mean.as_slice().expect("contiguous");
    let ws = w.as_slice();
    let mut total = F::zero();
    for (i, row) in x.values().rows().into_iter().enumerate() {
        let r = row_slice(&row);
        let c = centers.center(part.label(i));
        total = total + wsq(r, ms, ws) - wsq(r, c.as_slice().expect("contiguous"), ws);
    }
    Ok(total)
}

/// `R_n(w, A)`: negated centroid form with the true mean `μ` in place of `X̄`.
pub fn empirical_risk<F: Scalar>(
    x: &Dataset<F>,
    w: &WeightVector<F>,
    centers: &CentroidSet<F>,
    mu: ArrayView1<'_, F>,
) -> Result<F> {
    let mu = mu.to_vec();
    Ok(-centered_gap(x, centers, w, &mu)?)
}

/// `R_n'(w, A)`: negated centroid-form objective.
pub fn empirical_risk_prime<F: Scalar>(x: &Dataset<F>, w: &WeightVector<F>, centers: &CentroidSet<F>) -> Result<F> {
    Ok(-objective_centroid(x, centers, w)?)
}

/// `2 Σ_i (x_ij − x̄_j)²` per feature.
fn total_dispersion<F: Scalar>(x: &Dataset<F>) -> Vec<F> {
    let mean = x.mean();
    let mut t = vec![F::zero(); x.p()];
    for row in x.values().rows() {
        for (j, tj) in t.iter_mut().enumerate() {
            let d = row[j] - mean[j];
            *tj += d * d;
        }
    }
    t.into_iter().map(|v| F::lit(2.0) * v).collect()
}

fn rel_err<F: Scalar>(a: F, b: F) -> F {
    let scale = a.abs().max(b.abs());
    if scale == F::zero() {
        F::zero()
    } else {
        (a - b).abs() / scale
    }
}

/// Instances at or below this size are eligible for the exhaustive argmax comparison.
pub const EXHAUSTIVE_MAX_N: usize = 10;
pub const EXHAUSTIVE_MAX_K: usize = 3;

/// Argmax comparison between the pairwise and centroid forms over all partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveAgreement<F> {
    pub partitions_checked: u128,
    pub pairwise_argmax: Partition,
    pub pairwise_optimum: F,
    pub centroid_argmax: Partition,
    /// Best centroid-form value, `1/n`-normalized.
    pub centroid_optimum: F,
    pub same_argmax: bool,
    /// `pairwise_optimum / (n · centroid_optimum)`; the proof algebra gives 2.
    pub ratio_unnormalized: F,
    /// `pairwise_optimum / centroid_optimum`; equals `2n`.
    pub ratio_normalized: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport<F> {
    pub pairwise: F,
    pub dispersion_gap: F,
    /// `|pairwise − 2·dispersion_gap| / max(|·|)`.
    pub identity_rel_err: F,
    /// Direct pairwise gains against the `2 [TSS − WSS]` route, worst feature, relative
    /// to `2 TSS_j`: both routes are differences of terms of that size, so a gain far
    /// below its feature's total dispersion carries cancellation error on that scale.
    pub gain_identity_rel_err: F,
    pub exhaustive: Option<ExhaustiveAgreement<F>>,
}

impl<F: Scalar> EquivalenceReport<F> {
    pub fn identity_holds(&self, tol: F) -> bool {
        self.identity_rel_err <= tol && self.gain_identity_rel_err <= tol
    }
}

/// Check the factor-two identity on `part`, and optionally compare exhaustive argmaxes.
pub fn check_equivalence<F: Scalar>(
    x: &Dataset<F>,
    part: &Partition,
    w: &WeightVector<F>,
    exhaustive: bool,
) -> Result<EquivalenceReport<F>> {
    let pairwise = objective_pairwise(x, part, w)?;
    let dispersion = dispersion_gap(x, part, w)?;
    let direct = bcss_per_feature(x, part)?;
    let routed = bcss_centroid_form(x, part)?;
    let scale = total_dispersion(x);
    let gain_err = direct
        .as_slice()
        .iter()
        .zip(routed.as_slice())
        .zip(&scale)
        .map(|((&a, &b), &t)| {
            let s = a.abs().max(b.abs()).max(t);
            if s == F::zero() {
                F::zero()
            } else {
                (a - b).abs() / s
            }
        })
        .fold(F::zero(), F::max);
    let exhaustive = if exhaustive { Some(exhaustive_agreement(x, w, part.k())?) } else { None };
    Ok(EquivalenceReport {
        pairwise,
        dispersion_gap: dispersion,
        identity_rel_err: rel_err(pairwise, F::lit(2.0) * dispersion),
        gain_identity_rel_err: gain_err,
        exhaustive,
    })
}

fn exhaustive_agreement<F: Scalar>(x: &Dataset<F>, w: &WeightVector<F>, k: usize) -> Result<ExhaustiveAgreement<F>> {
    let n = x.n();
    if n > EXHAUSTIVE_MAX_N || k > EXHAUSTIVE_MAX_K {
        return Err(SkmError::InstanceTooLarge(format!(
            "exhaustive equivalence needs n <= {EXHAUSTIVE_MAX_N} and K <= {EXHAUSTIVE_MAX_K}, got n = {n}, K = {k}"
        )));
    }
    let count = check_exhaustive_size(n, k)?;
    let mut best_pair: Option<(Vec<usize>, F)> = None;
    let mut best_cent: Option<(Vec<usize>, F)> = None;
    let mut failure = None;
    for_each_partition(n, k, |labels| {
        if failure.is_some() {
            return;
        }
        let part = Partition::from_raw(labels.to_vec(), k);
        let eval = objective_pairwise(x, &part, w).and_then(|pv| {
            let centers = update_centroids(x, &part)?;
            Ok((pv, objective_centroid(x, &centers, w)?))
        });
        match eval {
            Ok((pv, cv)) => {
                if best_pair.as_ref().is_none_or(|(_, b)| pv > *b) {
                    best_pair = Some((labels.to_vec(), pv));
                }
                if best_cent.as_ref().is_none_or(|(_, b)| cv > *b) {
                    best_cent = Some((labels.to_vec(), cv));
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (pl, pv) = best_pair.expect("at least one partition");
    let (cl, cv) = best_cent.expect("at least one partition");
    let pairwise_argmax = Partition::from_raw(pl, k);
    let centroid_argmax = Partition::from_raw(cl, k);
    let nf = F::from_count(n);
    let ratio = |num: F, den: F| {
        if den == F::zero() && num == F::zero() {
            F::nan()
        } else {
            num / den
        }
    };
    Ok(ExhaustiveAgreement {
        partitions_checked: count,
        same_argmax: pairwise_argmax.same_clustering(&centroid_argmax),
        pairwise_argmax,
        pairwise_optimum: pv,
        centroid_argmax,
        centroid_optimum: cv,
        ratio_unnormalized: ratio(pv, nf * cv),
        ratio_normalized: ratio(pv, cv),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Cap on weight/partition alternations.
    pub max_iter: usize,
    /// Cap on assign/update sweeps inside one Lloyd run.
    pub max_lloyd: usize,
    pub n_starts: usize,
    pub seed: u64,
    /// Stop when the objective improves by less than `tol · |objective|`.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 50, max_lloyd: 100, n_starts: 10, seed: 0, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<F> {
    pub theta: Theta<F>,
    pub partition: Partition,
    /// Pairwise BCSS objective at the returned parameter.
    pub objective: F,
    /// Objective after each accepted alternation; nondecreasing.
    pub trace: Vec<F>,
    /// Every gain was nonpositive, so the weights are zero.
    pub degenerate: bool,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult<F> {
    pub partition: Partition,
    pub centers: CentroidSet<F>,
    pub sweeps: usize,
}

/// Move points into empty clusters: each empty cluster receives the point
/// farthest from its current center among clusters holding at least two points.
fn repair_empty<F: Scalar>(
    x: &Dataset<F>,
    centers: &CentroidSet<F>,
    w: &WeightVector<F>,
    labels: &mut [usize],
    k: usize,
) {
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    while let Some(empty) = sizes.iter().position(|&c| c == 0) {
        let mut pick: Option<(usize, F)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let row = x.row(i);
            let d = wsq(row_slice(&row), centers.center(l).as_slice().expect("contiguous"), w.as_slice());
            if pick.is_none_or(|(_, best)| d > best) {
                pick = Some((i, d));
            }
        }
        let (i, _) = pick.expect("K <= n leaves a cluster with two points");
        sizes[labels[i]] -= 1;
        labels[i] = empty;
        sizes[empty] += 1;
    }
}

/// Weighted Lloyd iterations from `init` until labels stop changing.
/// Empty clusters are repaired after every assignment.
pub fn weighted_lloyd<F: Scalar>(
    x: &Dataset<F>,
    init: &CentroidSet<F>,
    w: &WeightVector<F>,
    max_sweeps: usize,
) -> Result<LloydResult<F>> {
    let k = init.k();
    if k > x.n() {
        return Err(SkmError::TooManyClusters { k, n: x.n() });
    }
    let mut labels = assign(x, init, w)?.labels().to_vec();
    repair_empty(x, init, w, &mut labels, k);
    let mut part = Partition::from_raw(labels, k);
    let mut centers = update_centroids(x, &part)?;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut next = assign(x, &centers, w)?.labels().to_vec();
        repair_empty(x, &centers, w, &mut next, k);
        if next == part.labels() {
            break;
        }
        part = Partition::from_raw(next, k);
        centers = update_centroids(x, &part)?;
    }
    Ok(LloydResult { partition: part, centers, sweeps })
}

fn initial_weights<F: Scalar>(p: usize, s: F) -> Result<WeightVector<F>> {
    let root_p = F::from_count(p).sqrt();
    if root_p <= s {
        Ok(WeightVector::from_parts(Array1::from_elem(p, F::one() / root_p), s))
    } else {
        solve_weights(&GainVector::new(vec![F::one(); p])?, s)
    }
}

fn fit_once<F: Scalar>(x: &Dataset<F>, k: usize, s: F, opts: &FitOptions, start: usize) -> Result<FitResult<F>> {
    let mut rng = rng::stream(opts.seed, "euclid-fit", start as u64);
    let picks = sample(&mut rng, x.n(), k);
    let mut init = Array2::zeros((k, x.p()));
    for (slot, i) in picks.iter().enumerate() {
        init.row_mut(slot).assign(&x.row(i));
    }
    let init = CentroidSet::new(init)?;
    let w0 = initial_weights(x.p(), s)?;

    let lloyd = weighted_lloyd(x, &init, &w0, opts.max_lloyd)?;
    let mut part = lloyd.partition;
    let mut gains = bcss_centroid_form(x, &part)?;
    let mut w = solve_weights(&gains, s)?;
    let mut obj = w.dot(gains.as_slice());
    let mut trace = vec![obj];
    let tol = F::lit(opts.tol);

    for _ in 1..opts.max_iter {
        let centers = update_centroids(x, &part)?;
        let next = weighted_lloyd(x, &centers, &w, opts.max_lloyd)?.partition;
        let next_gains = bcss_centroid_form(x, &next)?;
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
    let degenerate = gains.as_slice().iter().all(|&b| b <= F::zero());
    let centers = update_centroids(x, &part)?;
    Ok(FitResult { theta: Theta::euclidean(w, centers)?, partition: part, objective: obj, trace, degenerate, start })
}

/// Alternating sparse K-means fit, best of `n_starts` seeded starts.
///
/// Starts run in parallel; the winner is the highest objective, ties to the
/// lowest start index, so the result does not depend on thread count.
pub fn fit<F: Scalar>(x: &Dataset<F>, k: usize, s: F, opts: &FitOptions) -> Result<FitResult<F>> {
    if k == 0 {
        return Err(SkmError::InvalidArgument("K must be at least 1".into()));
    }
    if k > x.n() {
        return Err(SkmError::TooManyClusters { k, n: x.n() });
    }
    if !s.is_finite() || s < F::zero() {
        return Err(SkmError::InvalidSparsity(s.as_f64()));
    }
    let starts = opts.n_starts.max(1);
    let results: Vec<Result<FitResult<F>>> =
        (0..starts).into_par_iter().map(|start| fit_once(x, k, s, opts, start)).collect();
    let mut best: Option<FitResult<F>> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.objective > b.objective) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn ds(rows: &[Vec<f64>]) -> Dataset<f64> {
        Dataset::from_rows(rows).unwrap()
    }

    fn unit(p: usize) -> WeightVector<f64> {
        WeightVector::new(Array1::from_elem(p, 1.0 / (p as f64).sqrt()), p as f64).unwrap()
    }

    #[test]
    fn bcss_examples() {
        let same = ds(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        let part = Partition::checked(vec![0, 1, 0], 2).unwrap();
        assert_eq!(bcss_per_feature(&same, &part).unwrap().as_slice(), &[0.0, 0.0]);

        let two = ds(&[vec![0.0], vec![2.0]]);
        let singletons = Partition::checked(vec![0, 1], 2).unwrap();
        assert_eq!(bcss_per_feature(&two, &singletons).unwrap().as_slice(), &[4.0]);
        assert_eq!(bcss_centroid_form(&two, &singletons).unwrap().as_slice(), &[4.0]);

        let bad = Partition::new(vec![0, 0], 2).unwrap();
        assert_eq!(bcss_per_feature(&two, &bad), Err(SkmError::EmptyCluster(1)));
    }

    #[test]
    fn assign_examples() {
        let x = ds(&[vec![0.0], vec![10.0], vec![5.0]]);
        let a = CentroidSet::from_rows(&[vec![1.0], vec![9.0]]).unwrap();
        let w = WeightVector::new(array![1.0], 1.0).unwrap();
        // 5 is equidistant from 1 and 9
        assert_eq!(assign(&x, &a, &w).unwrap().labels(), &[0, 1, 0]);
        let zero = WeightVector::zeros(1, 1.0);
        assert_eq!(assign(&x, &a, &zero).unwrap().labels(), &[0, 0, 0]);
    }

    #[test]
    fn centroid_examples() {
        let x = ds(&[vec![0.0, 0.0], vec![2.0, 2.0], vec![5.0, 1.0]]);
        let part = Partition::checked(vec![0, 0, 1], 2).unwrap();
        let c = update_centroids(&x, &part).unwrap();
        assert_eq!(c.center(0).to_vec(), vec![1.0, 1.0]);
        assert_eq!(c.center(1).to_vec(), vec![5.0, 1.0]);
        let all = update_centroids(&x, &Partition::checked(vec![0, 0, 0], 1).unwrap()).unwrap();
        assert_eq!(all.center(0), x.mean());
    }

    #[test]
    fn objective_examples() {
        let two = ds(&[vec![0.0], vec![2.0]]);
        let singletons = Partition::checked(vec![0, 1], 2).unwrap();
        let w = WeightVector::new(array![1.0], 1.0).unwrap();
        assert_eq!(objective_pairwise(&two, &singletons, &w).unwrap(), 4.0);
        assert_eq!(objective_pairwise(&two, &singletons, &WeightVector::zeros(1, 1.0)).unwrap(), 0.0);
        let a = CentroidSet::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(objective_centroid(&two, &a, &w).unwrap(), 1.0);
        let mean = CentroidSet::new(two.mean().insert_axis(ndarray::Axis(0))).unwrap();
        assert_eq!(objective_centroid(&two, &mean, &w).unwrap(), 0.0);
    }

    #[test]
    fn risk_examples() {
        let x = ds(&[vec![0.0, 1.0], vec![2.0, -1.0], vec![1.0, 3.0]]);
        let w = unit(2);
        let mu = array![0.5, 0.25];
        let at_mu = CentroidSet::new(mu.clone().insert_axis(ndarray::Axis(0))).unwrap();
        assert_eq!(empirical_risk(&x, &w, &at_mu, mu.view()).unwrap(), 0.0);
        let a = CentroidSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(empirical_risk(&x, &WeightVector::zeros(2, 1.0), &a, mu.view()).unwrap(), 0.0);
        let xbar = CentroidSet::new(x.mean().insert_axis(ndarray::Axis(0))).unwrap();
        assert_relative_eq!(empirical_risk_prime(&x, &w, &xbar).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn equivalence_on_identical_rows() {
        let x = ds(&vec![vec![1.0, -1.0]; 5]);
        let part = Partition::checked(vec![0, 1, 0, 1, 1], 2).unwrap();
        let rep = check_equivalence(&x, &part, &unit(2), true).unwrap();
        assert_eq!(rep.pairwise, 0.0);
        assert_eq!(rep.dispersion_gap, 0.0);
        assert!(rep.identity_holds(1e-9));
        let ex = rep.exhaustive.unwrap();
        assert_eq!(ex.pairwise_optimum, 0.0);
        assert_eq!(ex.centroid_optimum, 0.0);
    }

    #[test]
    fn equivalence_rejects_large_exhaustive() {
        let rows: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64]).collect();
        let x = ds(&rows);
        let part = Partition::checked((0..11).map(|i| i % 2).collect(), 2).unwrap();
        assert!(matches!(check_equivalence(&x, &part, &unit(1), true), Err(SkmError::InstanceTooLarge(_))));
        assert!(check_equivalence(&x, &part, &unit(1), false).is_ok());
    }

    #[test]
    fn fit_validation() {
        let x = ds(&[vec![0.0], vec![1.0]]);
        assert_eq!(fit(&x, 3, 1.0, &FitOptions::default()).unwrap_err(), SkmError::TooManyClusters { k: 3, n: 2 });
        assert!(fit(&x, 1, -1.0, &FitOptions::default()).is_err());
    }

    #[test]
    fn fit_on_identical_rows_is_degenerate() {
        let x = ds(&vec![vec![3.0, 1.0]; 6]);
        let r = fit(&x, 2, 1.2, &FitOptions::default()).unwrap();
        assert!(r.degenerate);
        assert!(r.theta.weights.is_zero());
        r.partition.require_nonempty().unwrap();
    }

    #[test]
    fn lloyd_repairs_empty_clusters() {
        let x = ds(&[vec![0.0], vec![0.1], vec![5.0]]);
        let init = CentroidSet::from_rows(&[vec![0.0], vec![100.0], vec![200.0]]).unwrap();
        let w = WeightVector::new(array![1.0], 1.0).unwrap();
        let r = weighted_lloyd(&x, &init, &w, 100).unwrap();
        assert_eq!(r.partition.sizes(), vec![1, 1, 1]);
    }
}
