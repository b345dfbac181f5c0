//! Population risks and the excess-risk experiments.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use skm_core::metric::{nearest, wsq};
use skm_core::models::{AtomModel, PointModel};
use skm_core::partitions::for_each_partition;
use skm_core::{
    empirical_risk_general, fit, fit_general, rng, solve_weights, CentroidSet, Dataset, FitOptions, GainVector,
    GeneralFitOptions, Partition, Result, SkmError, Theta, WeightVector,
};

use crate::bounds::thm1_bound;
use crate::mc::{self, MCEstimate};

/// `(w, centers)` flattened for the inner Monte Carlo loop.
pub(crate) struct Flat {
    w: Vec<f64>,
    centers: Array2<f64>,
}

impl Flat {
    pub(crate) fn new(theta: &Theta<f64>) -> Result<Self> {
        let a = theta.centers().ok_or(SkmError::ModeMismatch)?;
        Ok(Self { w: theta.weights.as_slice().to_vec(), centers: a.centers().as_standard_layout().into_owned() })
    }

    /// `−(‖x − μ‖²_w − min_a ‖x − a‖²_w)`.
    pub(crate) fn loss(&self, x: &[f64], mu: &[f64]) -> f64 {
        nearest(x, self.centers.view(), &self.w).1 - wsq(x, mu, &self.w)
    }
}

/// `R(w, A) = −E[‖X − μ‖²_w − min_{a∈A} ‖X − a‖²_w]` by Monte Carlo.
pub fn population_risk_mc<M: PointModel + ?Sized>(
    model: &M,
    w: &WeightVector<f64>,
    centers: &CentroidSet<f64>,
    n_draws: usize,
    seed: u64,
) -> Result<MCEstimate> {
    let theta = Theta::euclidean(w.clone(), centers.clone())?;
    Ok(compare_risks(model, &[theta], n_draws, seed)?.risks[0])
}

/// Risks of several parameters on one shared sample, with differences against the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskComparison {
    pub risks: Vec<MCEstimate>,
    /// `R(θ_i) − R(θ_0)` for `i >= 1`, with paired standard errors.
    pub diffs: Vec<MCEstimate>,
}

/// Evaluate every `theta` on the same draws (common random numbers).
pub fn compare_risks<M: PointModel + ?Sized>(
    model: &M,
    thetas: &[Theta<f64>],
    n_draws: usize,
    seed: u64,
) -> Result<RiskComparison> {
    mc::require_draws(n_draws)?;
    if thetas.is_empty() {
        return Err(SkmError::EmptySet);
    }
    let p = model.p();
    for t in thetas {
        if t.weights.p() != p {
            return Err(SkmError::DimensionMismatch { expected: p, found: t.weights.p() });
        }
    }
    let flats = thetas.iter().map(Flat::new).collect::<Result<Vec<_>>>()?;
    let mu = model.mean().to_vec();
    let m = flats.len();
    let moments = mc::run(n_draws, 2 * m - 1, seed, "population-risk", |rng, out| {
        let mut x = vec![0.0; p];
        model.sample_into(rng, &mut x);
        for (i, f) in flats.iter().enumerate() {
            out[i] = f.loss(&x, &mu);
        }
        for i in 1..m {
            out[m + i - 1] = out[i] - out[0];
        }
    });
    Ok(RiskComparison {
        risks: (0..m).map(|i| moments.estimate(i, seed)).collect(),
        diffs: (1..m).map(|i| moments.estimate(m + i - 1, seed)).collect(),
    })
}

/// Exact general-dissimilarity risk of a partition of the atoms:
/// `−Σ_j w_j (E d_j(X₁,X₂) − Σ_k E[d_j(X₁,X₂) 1{X₁,X₂ ∈ C_k}] / P(C_k))`.
pub fn population_risk_general(model: &AtomModel, w: &WeightVector<f64>, atom_part: &Partition) -> Result<f64> {
    Ok(-w.dot(&population_gains(model, atom_part)?))
}

/// Per-feature population gains of an atom partition.
pub fn population_gains(model: &AtomModel, atom_part: &Partition) -> Result<Vec<f64>> {
    if atom_part.n() != model.m() {
        return Err(SkmError::DimensionMismatch { expected: model.m(), found: atom_part.n() });
    }
    let probs = model.probs();
    let mut mass = vec![0.0; atom_part.k()];
    for (a, &q) in probs.iter().enumerate() {
        mass[atom_part.label(a)] += q;
    }
    if let Some(k) = mass.iter().position(|&m| m <= 0.0) {
        return Err(SkmError::ZeroMassCell(k));
    }
    let m = model.m();
    Ok((0..model.p())
        .map(|j| {
            let mut total = 0.0;
            let mut within = vec![0.0; atom_part.k()];
            for a in 0..m {
                for b in 0..m {
                    let v = probs[a] * probs[b] * model.table(j, a, b);
                    total += v;
                    if atom_part.label(a) == atom_part.label(b) {
                        within[atom_part.label(a)] += v;
                    }
                }
            }
            total - within.iter().zip(&mass).map(|(w, m)| w / m).sum::<f64>()
        })
        .collect())
}

/// Exact risk minimizer over atom partitions into `k` nonempty positive-mass cells,
/// each with its exact weight step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomOptimum {
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
    pub risk: f64,
    /// Smallest cell mass of the optimal partition.
    pub min_cell_mass: f64,
}

pub fn atom_theta_star(model: &AtomModel, s: f64, k: usize) -> Result<AtomOptimum> {
    let mut best: Option<AtomOptimum> = None;
    let mut failure = None;
    for_each_partition(model.m(), k, |labels| {
        if failure.is_some() {
            return;
        }
        let part = Partition::new(labels.to_vec(), k).expect("labels in range");
        let gains = match population_gains(model, &part) {
            Ok(g) => g,
            Err(SkmError::ZeroMassCell(_)) => return,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let w = match GainVector::new(gains.clone()).and_then(|g| solve_weights(&g, s)) {
            Ok(w) => w,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let risk = -w.dot(&gains);
        if best.as_ref().is_none_or(|b| risk < b.risk) {
            let mut mass = vec![0.0; k];
            labels.iter().zip(model.probs()).for_each(|(&l, &q)| mass[l] += q);
            best = Some(AtomOptimum {
                labels: labels.to_vec(),
                weights: w.as_slice().to_vec(),
                risk,
                min_cell_mass: mass.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    best.ok_or(SkmError::TooManyClusters { k, n: model.m() })
}

/// Settings shared by the excess-risk experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskGapConfig {
    pub k: usize,
    pub s: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Starts per replication fit.
    pub n_starts: usize,
    /// Draws per risk evaluation.
    pub mc_draws: usize,
    /// Confidence parameter of the reported bound.
    pub t: f64,
    /// Sample size, starts and draws used to pin down the reference optimum.
    pub star_sample_n: usize,
    pub star_starts: usize,
    pub star_mc_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskGapRow {
    pub n: usize,
    pub rep: usize,
    pub gap: f64,
    pub gap_se: f64,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub n: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaStar {
    pub weights: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub risk: MCEstimate,
    /// Which candidate won: `"fit"` or `"reference"`.
    pub source: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskGapResult {
    pub theta_star: ThetaStar,
    pub rows: Vec<RiskGapRow>,
    pub summary: Vec<GapSummary>,
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub(crate) fn summarize_by_n(n_grid: &[usize], rows: &[(usize, f64)]) -> Vec<GapSummary> {
    n_grid
        .iter()
        .map(|&n| {
            let mut v: Vec<f64> = rows.iter().filter(|r| r.0 == n).map(|r| r.1).collect();
            v.sort_by(f64::total_cmp);
            GapSummary {
                n,
                median: quantile(&v, 0.5),
                q25: quantile(&v, 0.25),
                q75: quantile(&v, 0.75),
                mean: v.iter().sum::<f64>() / v.len().max(1) as f64,
            }
        })
        .collect()
}

fn with_budget(theta: &Theta<f64>, s: f64) -> Result<Theta<f64>> {
    let w = WeightVector::new(theta.weights.as_array().clone(), s)?;
    let a = theta.centers().ok_or(SkmError::ModeMismatch)?.clone();
    Theta::euclidean(w, a)
}

fn rows_of(a: &CentroidSet<f64>) -> Vec<Vec<f64>> {
    a.centers().rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Operational `θ*`: the best multi-start fit on a large sample, compared by Monte
/// Carlo against `reference` when given.
pub fn find_theta_star<M: PointModel + ?Sized>(
    model: &M,
    reference: Option<&Theta<f64>>,
    cfg: &RiskGapConfig,
) -> Result<(Theta<f64>, ThetaStar)> {
    let reference = match reference {
        Some(r) => {
            if r.weights.l1() > cfg.s + skm_core::TOL_FEAS {
                return Err(SkmError::InvalidSparsity(cfg.s));
            }
            Some(with_budget(r, cfg.s)?)
        }
        None => None,
    };
    let x = Dataset::new(model.sample_rows(cfg.star_sample_n, cfg.seed, "theta-star", 0))?;
    let opts = FitOptions {
        n_starts: cfg.star_starts,
        seed: rng::derive_seed(cfg.seed, "theta-star-fit", 0),
        ..FitOptions::default()
    };
    let fitted = fit(&x, cfg.k, cfg.s, &opts)?.theta;
    let mut cands = vec![fitted];
    cands.extend(reference);
    let seed = rng::derive_seed(cfg.seed, "theta-star-mc", 0);
    let cmp = compare_risks(model, &cands, cfg.star_mc_draws, seed)?;
    let pick = usize::from(cmp.diffs.first().is_some_and(|d| d.value < 0.0));
    let theta = cands.swap_remove(pick);
    let star = ThetaStar {
        weights: theta.weights.as_slice().to_vec(),
        centers: rows_of(theta.centers().expect("euclidean")),
        risk: cmp.risks[pick],
        source: if pick == 0 { "fit" } else { "reference" },
    };
    Ok((theta, star))
}

/// Fit on fresh samples of each size and record `R(θ̂) − R(θ*)`, paired on common draws.
pub fn risk_gap_experiment<M: PointModel + ?Sized>(
    model: &M,
    reference: Option<&Theta<f64>>,
    cfg: &RiskGapConfig,
) -> Result<RiskGapResult> {
    if cfg.n_grid.iter().any(|&n| n < cfg.k) {
        return Err(SkmError::TooManyClusters { k: cfg.k, n: cfg.n_grid.iter().copied().min().unwrap_or(0) });
    }
    let (star, star_report) = find_theta_star(model, reference, cfg)?;
    let eval_seed = rng::derive_seed(cfg.seed, "risk-gap-eval", 0);
    let tasks: Vec<(usize, usize)> = cfg.n_grid.iter().flat_map(|&n| (0..cfg.reps).map(move |r| (n, r))).collect();
    let rows = tasks
        .par_iter()
        .enumerate()
        .map(|(idx, &(n, rep))| {
            let x = Dataset::new(model.sample_rows(n, cfg.seed, "risk-gap-sample", idx as u64))?;
            let opts = FitOptions {
                n_starts: cfg.n_starts,
                seed: rng::derive_seed(cfg.seed, "risk-gap-fit", idx as u64),
                ..FitOptions::default()
            };
            let hat = fit(&x, cfg.k, cfg.s, &opts)?.theta;
            let cmp = compare_risks(model, &[star.clone(), hat], cfg.mc_draws, eval_seed)?;
            let gap = cmp.diffs[0];
            let bound = thm1_bound(cfg.s, model.bound(), cfg.k, n, model.p(), cfg.t).ok().map(|b| b.bound_total);
            Ok(RiskGapRow {
                n,
                rep,
                gap: gap.value,
                gap_se: gap.std_error,
                bound,
                within_bound: bound.map(|b| gap.value <= b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.gap)).collect();
    Ok(RiskGapResult { theta_star: star_report, summary: summarize_by_n(&cfg.n_grid, &pairs), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomGapRow {
    pub n: usize,
    pub rep: usize,
    /// Scaled empirical risk at the fitted parameter.
    pub empirical_risk: f64,
    /// `|R_n(θ̂) − R(θ*)|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomGapResult {
    pub theta_star: AtomOptimum,
    pub rows: Vec<AtomGapRow>,
    pub summary: Vec<GapSummary>,
}

/// Discrete-model counterpart of [`risk_gap_experiment`]: distance between the scaled
/// empirical risk at the fitted parameter and the exact optimal population risk.
pub fn atom_risk_gap_experiment(model: &AtomModel, cfg: &RiskGapConfig) -> Result<AtomGapResult> {
    let star = atom_theta_star(model, cfg.s, cfg.k)?;
    let tasks: Vec<(usize, usize)> = cfg.n_grid.iter().flat_map(|&n| (0..cfg.reps).map(move |r| (n, r))).collect();
    let rows = tasks
        .par_iter()
        .enumerate()
        .map(|(idx, &(n, rep))| {
            let atoms = model.sample_atoms(n, rng::derive_seed(cfg.seed, "atom-gap-sample", idx as u64));
            let d = model.tensor::<f64>(&atoms)?;
            let opts = GeneralFitOptions {
                n_starts: cfg.n_starts,
                seed: rng::derive_seed(cfg.seed, "atom-gap-fit", idx as u64),
                ..GeneralFitOptions::default()
            };
            let f = fit_general(&d, cfg.k, cfg.s, &opts)?;
            let r = empirical_risk_general(&d, f.partition(), &f.theta.weights)?;
            Ok(AtomGapRow { n, rep, empirical_risk: r, gap: (r - star.risk).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.gap)).collect();
    Ok(AtomGapResult { theta_star: star, summary: summarize_by_n(&cfg.n_grid, &pairs), rows })
}
