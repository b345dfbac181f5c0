//! `fit`, `fit-general` and `equiv-check`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use skm_core::{
    check_equivalence, empirical_risk, empirical_risk_general, empirical_risk_prime, exhaustive_partition_oracle,
    fit as fit_euclid, fit_general as fit_gen, objective_centroid, rng, Dataset, DissimilarityTensor, FitOptions,
    GeneralFitOptions, Partition, WeightVector,
};

use super::{atom_model, euclid_data, feature_names, point_model, Ctx, Run};
use crate::config::ModelSpec;
use crate::error::{CliError, Result};
use crate::io::{read_dataset, read_tensor, Cell, Output, Table};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitExp {
    /// Sample size when the model is generative; ignored for CSV data.
    pub n: usize,
}

impl Default for FitExp {
    fn default() -> Self {
        Self { n: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub objective: f64,
    /// `1/n`-normalized centroid form at the fitted centers.
    pub centroid_objective: f64,
    /// Risk with the sample mean.
    pub empirical_risk_prime: f64,
    /// Risk with the population mean, for generative models.
    pub empirical_risk: Option<f64>,
    pub degenerate: bool,
    pub start: usize,
    pub iterations: usize,
    pub weights: Vec<f64>,
    pub nonzero_weights: usize,
    pub cluster_sizes: Vec<usize>,
}

fn weight_table(names: &[String], w: &WeightVector<f64>) -> Table {
    let mut t = Table::new("weights", &["feature", "name", "weight"]);
    for (j, (name, &v)) in names.iter().zip(w.as_slice()).enumerate() {
        t.push(vec![(j + 1).into(), name.as_str().into(), v.into()]);
    }
    t
}

fn label_table(part: &Partition) -> Table {
    let mut t = Table::new("labels", &["row", "cluster"]);
    for (i, &l) in part.labels().iter().enumerate() {
        t.push(vec![(i + 1).into(), (l + 1).into()]);
    }
    t
}

fn trace_table(trace: &[f64]) -> Table {
    let mut t = Table::new("trace", &["iteration", "objective"]);
    for (i, &v) in trace.iter().enumerate() {
        t.push(vec![i.into(), v.into()]);
    }
    t
}

pub fn fit(ctx: &Ctx<'_>) -> Result<Run<FitExp, FitSummary>> {
    let (mut exp, seed): (FitExp, u64) = ctx.experiment()?;
    let (data, mu) = euclid_data(ctx, exp.n, seed)?;
    let x = &data.data;
    exp.n = x.n();
    let alg = &ctx.cfg.algorithm;
    let opts =
        FitOptions { max_iter: alg.max_iter, max_lloyd: alg.max_lloyd, n_starts: alg.n_starts, seed, tol: alg.tol };
    let res = fit_euclid(x, alg.k, alg.s, &opts)?;
    let centers = res.theta.centers().expect("euclidean fit");
    let w = &res.theta.weights;

    let mut header: Vec<&str> = vec!["cluster"];
    header.extend(data.names.iter().map(String::as_str));
    let mut ct = Table::new("centers", &header);
    for c in 0..centers.k() {
        let mut row: Vec<Cell> = vec![(c + 1).into()];
        row.extend(centers.center(c).iter().map(|&v| Cell::from(v)));
        ct.push(row);
    }

    let summary = FitSummary {
        n: x.n(),
        p: x.p(),
        k: alg.k,
        objective: res.objective,
        centroid_objective: objective_centroid(x, centers, w)?,
        empirical_risk_prime: empirical_risk_prime(x, w, centers)?,
        empirical_risk: mu.map(|m| empirical_risk(x, w, centers, m.view())).transpose()?,
        degenerate: res.degenerate,
        start: res.start,
        iterations: res.trace.len(),
        weights: w.as_slice().to_vec(),
        nonzero_weights: w.as_slice().iter().filter(|&&v| v > 0.0).count(),
        cluster_sizes: res.partition.sizes(),
    };
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: summary,
            passed: None,
            tables: vec![weight_table(&data.names, w), ct, label_table(&res.partition), trace_table(&res.trace)],
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitGeneralExp {
    /// Sample size when the model is generative; ignored for file input.
    pub n: usize,
    /// Also run the exhaustive partition search at the fitted weights.
    pub oracle: bool,
}

impl Default for FitGeneralExp {
    fn default() -> Self {
        Self { n: 100, oracle: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub oracle_objective: f64,
    /// `oracle − fitted`, never negative up to rounding.
    pub shortfall: f64,
    pub same_partition: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitGeneralSummary {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub bound: f64,
    pub objective: f64,
    pub empirical_risk: f64,
    /// `|(n − 1)·risk + objective| / |objective|`.
    pub scaling_rel_err: f64,
    pub start: usize,
    pub iterations: usize,
    pub weights: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub oracle: Option<OracleComparison>,
}

fn general_input(ctx: &Ctx<'_>, n: usize, seed: u64) -> Result<(DissimilarityTensor<f64>, Vec<String>)> {
    let cfg = ctx.cfg;
    match &cfg.model {
        ModelSpec::Tensor { path, bound } => {
            let d = read_tensor(&cfg.resolve_path(path), *bound)?;
            let p = d.p();
            Ok((d, feature_names(p)))
        }
        ModelSpec::Dataset { path, bound } => {
            let data = read_dataset(&cfg.resolve_path(path), *bound)?;
            Ok((DissimilarityTensor::squared_euclidean(&data.data), data.names))
        }
        spec => {
            if n < 2 {
                return Err(CliError::Config("experiment.n must be at least 2".into()));
            }
            let sample_seed = rng::derive_seed(seed, "cli-data", 0);
            if let Some(model) = atom_model(spec) {
                let model = model?;
                let d = model.tensor(&model.sample_atoms(n, sample_seed))?;
                return Ok((d, feature_names(model.p())));
            }
            let model =
                point_model(spec).ok_or_else(|| ctx.unsupported("tensor, dataset, atoms, two_ball or gauss_mix"))??;
            let x = Dataset::new(model.sample_rows(n, sample_seed, "cli-data", 0))?;
            Ok((DissimilarityTensor::squared_euclidean(&x), feature_names(model.p())))
        }
    }
}

pub fn fit_general(ctx: &Ctx<'_>) -> Result<Run<FitGeneralExp, FitGeneralSummary>> {
    let (mut exp, seed): (FitGeneralExp, u64) = ctx.experiment()?;
    let (d, names) = general_input(ctx, exp.n, seed)?;
    exp.n = d.n();
    let alg = &ctx.cfg.algorithm;
    let opts = GeneralFitOptions { max_iter: alg.max_iter, n_starts: alg.n_starts, seed, tol: alg.tol };
    let res = fit_gen(&d, alg.k, alg.s, &opts)?;
    let w = &res.theta.weights;
    let part = res.partition();
    let risk = empirical_risk_general(&d, part, w)?;
    let scaled = (d.n() as f64 - 1.0) * risk + res.objective;
    let scaling_rel_err = if res.objective == 0.0 { scaled.abs() } else { scaled.abs() / res.objective.abs() };
    let oracle = if exp.oracle {
        let (best, value) = exhaustive_partition_oracle(&d, w, alg.k)?;
        Some(OracleComparison {
            oracle_objective: value,
            shortfall: value - res.objective,
            same_partition: best.same_clustering(part),
        })
    } else {
        None
    };
    let summary = FitGeneralSummary {
        n: d.n(),
        p: d.p(),
        k: alg.k,
        bound: d.bound(),
        objective: res.objective,
        empirical_risk: risk,
        scaling_rel_err,
        start: res.start,
        iterations: res.trace.len(),
        weights: w.as_slice().to_vec(),
        cluster_sizes: part.sizes(),
        oracle,
    };
    let tables = vec![weight_table(&names, w), label_table(part), trace_table(&res.trace)];
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: summary,
            passed: None,
            tables,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivExp {
    /// Random instances checked for the identity only.
    pub instances: usize,
    pub n_max: usize,
    pub p_max: usize,
    pub k_max: usize,
    /// Small random instances that also compare exhaustive argmaxes.
    pub exhaustive_instances: usize,
    pub exhaustive_n_max: usize,
    pub exhaustive_k_max: usize,
    /// Relative tolerance on the factor-two identity.
    pub tol: f64,
    /// For data input: also compare exhaustive argmaxes.
    pub exhaustive: bool,
}

impl Default for EquivExp {
    fn default() -> Self {
        Self {
            instances: 100,
            n_max: 50,
            p_max: 10,
            k_max: 4,
            exhaustive_instances: 20,
            exhaustive_n_max: 10,
            exhaustive_k_max: 3,
            tol: 1e-9,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivSummary {
    pub instances: usize,
    pub exhaustive_instances: usize,
    pub max_identity_rel_err: f64,
    pub identity_failures: usize,
    pub argmax_disagreements: usize,
}

/// Random instance: scaled uniform data, a partition with every cluster used, and a
/// feasible weight vector with some exact zeros.
pub fn random_instance(
    seed: u64,
    index: u64,
    n_max: usize,
    p_max: usize,
    k_max: usize,
) -> Result<(Dataset<f64>, Partition, WeightVector<f64>)> {
    if n_max < 2 || p_max < 1 || k_max < 1 {
        return Err(CliError::Config(format!(
            "need n_max >= 2, p_max >= 1, k_max >= 1 (got {n_max}, {p_max}, {k_max})"
        )));
    }
    let mut rng = rng::stream(seed, "equiv-instance", index);
    let k = rng.random_range(1..=k_max.min(n_max));
    let n = rng.random_range(k.max(2)..=n_max);
    let p = rng.random_range(1..=p_max);
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let x = Array2::from_shape_fn((n, p), |_| scale * rng.random_range(-1.0..1.0));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![0; n];
    for (slot, &i) in order.iter().enumerate() {
        labels[i] = if slot < k { slot } else { rng.random_range(0..k) };
    }
    let mut w: Vec<f64> = (0..p).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
    let l2 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 > 0.0 {
        w.iter_mut().for_each(|v| *v /= l2);
    }
    let l1: f64 = w.iter().sum();
    Ok((Dataset::new(x)?, Partition::new(labels, k)?, WeightVector::new(w.into(), l1.max(1.0))?))
}

pub fn equiv_check(ctx: &Ctx<'_>) -> Result<Run<EquivExp, EquivSummary>> {
    let (exp, seed): (EquivExp, u64) = ctx.experiment()?;
    let mut table = Table::new(
        "instances",
        &[
            "instance",
            "exhaustive",
            "n",
            "p",
            "k",
            "pairwise",
            "dispersion_gap",
            "identity_rel_err",
            "gain_rel_err",
            "partitions_checked",
            "same_argmax",
            "ratio_unnormalized",
            "passed",
        ],
    );
    let mut summary = EquivSummary {
        instances: 0,
        exhaustive_instances: 0,
        max_identity_rel_err: 0.0,
        identity_failures: 0,
        argmax_disagreements: 0,
    };
    let mut check =
        |idx: usize, x: &Dataset<f64>, part: &Partition, w: &WeightVector<f64>, exhaustive: bool| -> Result<()> {
            let rep = check_equivalence(x, part, w, exhaustive)?;
            let identity_ok = rep.identity_holds(exp.tol);
            let same = rep.exhaustive.as_ref().map(|e| e.same_argmax);
            summary.instances += 1;
            summary.max_identity_rel_err =
                summary.max_identity_rel_err.max(rep.identity_rel_err).max(rep.gain_identity_rel_err);
            summary.identity_failures += usize::from(!identity_ok);
            if exhaustive {
                summary.exhaustive_instances += 1;
                summary.argmax_disagreements += usize::from(same == Some(false));
            }
            table.push(vec![
                idx.into(),
                exhaustive.into(),
                x.n().into(),
                x.p().into(),
                part.k().into(),
                rep.pairwise.into(),
                rep.dispersion_gap.into(),
                rep.identity_rel_err.into(),
                rep.gain_identity_rel_err.into(),
                rep.exhaustive
                    .as_ref()
                    .map_or(Cell::Text(String::new()), |e| Cell::Text(e.partitions_checked.to_string())),
                same.into(),
                rep.exhaustive.as_ref().map(|e| e.ratio_unnormalized).into(),
                (identity_ok && same != Some(false)).into(),
            ]);
            Ok(())
        };

    match &ctx.cfg.model {
        ModelSpec::Random => {
            for i in 0..exp.instances {
                let (x, part, w) = random_instance(seed, i as u64, exp.n_max, exp.p_max, exp.k_max)?;
                check(i, &x, &part, &w, false)?;
            }
            for i in 0..exp.exhaustive_instances {
                let idx = exp.instances + i;
                let (x, part, w) =
                    random_instance(seed, idx as u64, exp.exhaustive_n_max, exp.p_max, exp.exhaustive_k_max)?;
                check(idx, &x, &part, &w, true)?;
            }
        }
        ModelSpec::Dataset { .. } => {
            // Identity at the fitted partition, with equal weights on every feature.
            let (data, _) = euclid_data(ctx, 0, seed)?;
            let x = &data.data;
            let alg = &ctx.cfg.algorithm;
            let opts = FitOptions {
                max_iter: alg.max_iter,
                max_lloyd: alg.max_lloyd,
                n_starts: alg.n_starts,
                seed,
                tol: alg.tol,
            };
            let res = fit_euclid(x, alg.k, alg.s, &opts)?;
            let p = x.p() as f64;
            let w = WeightVector::new(ndarray::Array1::from_elem(x.p(), 1.0 / p.sqrt()), p.sqrt())?;
            check(0, x, &res.partition, &w, exp.exhaustive)?;
        }
        _ => return Err(ctx.unsupported("random or dataset")),
    }
    let passed = summary.identity_failures == 0 && summary.argmax_disagreements == 0;
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: summary,
            passed: Some(passed),
            tables: vec![table],
        },
    })
}
