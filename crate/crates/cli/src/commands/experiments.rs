//! Monte Carlo experiments, bound tables and inequality audits.

use serde::{Deserialize, Serialize};
use skm_core::{reference_theta, Theta, TwoBallModel, WeightVector};
use skm_lab::{
    atom_risk_gap_experiment, continuity_probe, gaussian_counterexample_check, hoeffding_coverage, lemma5_check,
    modulus_nonincreasing, peter_paul_check, rc_bound_euclid, rc_mc_euclid, risk_gap_experiment, set_peter_paul_check,
    thm1_bound, thm4_bound, AtomOptimum, AuditReport, ContinuityConfig, ContinuityRow, CoverageReport,
    DisplacementReport, GapSummary, MCEstimate, RcEuclidConfig, RiskGapConfig, StationarityConfig, StationarityReport,
    ThetaStar, Thm4Inputs,
};

use super::{atom_model, euclid_data, point_model, two_ball, Ctx, Run};
use crate::config::ModelSpec;
use crate::error::{CliError, Result};
use crate::io::{Cell, Output, Table};

/// Reference parameter of the two-ball model, carried at budget `s` (needs `s >= √r`).
fn reference_at(model: &TwoBallModel, s: f64) -> Option<Theta<f64>> {
    let t: Theta<f64> = reference_theta(model);
    let w = WeightVector::new(t.weights.as_array().clone(), s).ok()?;
    Theta::euclidean(w, t.centers()?.clone()).ok()
}

fn reference_or_err(model: &TwoBallModel, s: f64) -> Result<Theta<f64>> {
    reference_at(model, s).ok_or_else(|| {
        CliError::Config(format!(
            "the two-ball reference weights need s >= sqrt(r) = {}, got s = {s}",
            (model.r() as f64).sqrt()
        ))
    })
}

fn summary_table(summary: &[GapSummary]) -> Table {
    let mut t = Table::new("summary", &["n", "median", "q25", "q75", "mean"]);
    for s in summary {
        t.push(vec![s.n.into(), s.median.into(), s.q25.into(), s.q75.into(), s.mean.into()]);
    }
    t
}

fn strictly_decreasing(summary: &[GapSummary]) -> bool {
    summary.windows(2).all(|w| w[1].median < w[0].median)
}

fn final_ratio(summary: &[GapSummary]) -> f64 {
    match (summary.first(), summary.last()) {
        (Some(a), Some(b)) if a.median > 0.0 => b.median / a.median,
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskGapExp {
    pub n_grid: Vec<usize>,
    pub reps: usize,
    /// Monte Carlo draws per population-risk evaluation.
    pub mc_draws: usize,
    /// Confidence parameter of the plotted bound.
    pub t: f64,
    /// Large-sample fit that competes with the reference for the risk minimizer.
    pub star_sample_n: usize,
    pub star_starts: usize,
    pub star_mc_draws: usize,
    /// Pass threshold on `median(last n) / median(first n)`; 0.2 for point models,
    /// 0.25 for atom models when unset.
    pub max_final_ratio: Option<f64>,
    /// Pass threshold on the fraction of replications under the bound.
    pub min_within_bound: f64,
}

impl Default for RiskGapExp {
    fn default() -> Self {
        Self {
            n_grid: vec![50, 200, 800, 3200],
            reps: 20,
            mc_draws: 1_000_000,
            t: 0.05,
            star_sample_n: 100_000,
            star_starts: 20,
            star_mc_draws: 1_000_000,
            max_final_ratio: None,
            min_within_bound: 0.85,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum StarReport {
    Point(ThetaStar),
    Atoms(AtomOptimum),
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskGapSummary {
    pub theta_star: StarReport,
    pub summary: Vec<GapSummary>,
    pub strictly_decreasing: bool,
    pub final_ratio: f64,
    pub within_bound_fraction: Option<f64>,
}

pub fn risk_gap(ctx: &Ctx<'_>) -> Result<Run<RiskGapExp, RiskGapSummary>> {
    let (mut exp, seed): (RiskGapExp, u64) = ctx.experiment()?;
    if exp.n_grid.is_empty() || exp.reps == 0 {
        return Err(CliError::Config("experiment.n_grid and experiment.reps must be nonempty".into()));
    }
    let alg = &ctx.cfg.algorithm;
    let lab = RiskGapConfig {
        k: alg.k,
        s: alg.s,
        n_grid: exp.n_grid.clone(),
        reps: exp.reps,
        seed,
        n_starts: alg.n_starts,
        mc_draws: exp.mc_draws,
        t: exp.t,
        star_sample_n: exp.star_sample_n,
        star_starts: exp.star_starts,
        star_mc_draws: exp.star_mc_draws,
    };
    let mut rows = Table::new("replications", &["n", "rep", "gap", "gap_se", "bound", "within_bound"]);
    let (star, summary, within) = if let Some(atoms) = atom_model(&ctx.cfg.model) {
        exp.max_final_ratio.get_or_insert(0.25);
        let res = atom_risk_gap_experiment(&atoms?, &lab)?;
        let mut rows_a = Table::new("replications", &["n", "rep", "empirical_risk", "gap"]);
        for r in &res.rows {
            rows_a.push(vec![r.n.into(), r.rep.into(), r.empirical_risk.into(), r.gap.into()]);
        }
        rows = rows_a;
        (StarReport::Atoms(res.theta_star), res.summary, None)
    } else {
        exp.max_final_ratio.get_or_insert(0.2);
        let model = point_model(&ctx.cfg.model).ok_or_else(|| ctx.unsupported("two_ball, gauss_mix or atoms"))??;
        let reference = match &ctx.cfg.model {
            ModelSpec::TwoBall { .. } => reference_at(&two_ball(ctx)?, alg.s),
            _ => None,
        };
        let res = risk_gap_experiment(model.as_ref(), reference.as_ref(), &lab)?;
        for r in &res.rows {
            rows.push(vec![
                r.n.into(),
                r.rep.into(),
                r.gap.into(),
                r.gap_se.into(),
                r.bound.into(),
                r.within_bound.into(),
            ]);
        }
        let flags: Vec<bool> = res.rows.iter().filter_map(|r| r.within_bound).collect();
        let within = (!flags.is_empty()).then(|| flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64);
        (StarReport::Point(res.theta_star), res.summary, within)
    };
    let decreasing = strictly_decreasing(&summary);
    let ratio = final_ratio(&summary);
    let max_ratio = exp.max_final_ratio.expect("set above");
    let passed = decreasing && ratio <= max_ratio && within.is_none_or(|f| f >= exp.min_within_bound);
    let tables = vec![rows, summary_table(&summary)];
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: RiskGapSummary {
                theta_star: star,
                summary,
                strictly_decreasing: decreasing,
                final_ratio: ratio,
                within_bound_fraction: within,
            },
            passed: Some(passed),
            tables,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RademacherExp {
    /// Sample size for generative models.
    pub n: usize,
    pub n_draws: usize,
    /// Restarts of the inner supremum search per sign draw.
    pub n_starts: usize,
    pub max_iter: usize,
}

impl Default for RademacherExp {
    fn default() -> Self {
        Self { n: 100, n_draws: 1000, n_starts: 5, max_iter: 30 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RademacherSummary {
    pub n: usize,
    pub m: f64,
    pub estimate: MCEstimate,
    pub bound: f64,
    /// `estimate <= bound + 3·SE`.
    pub within_bound: bool,
}

pub fn rademacher(ctx: &Ctx<'_>) -> Result<Run<RademacherExp, RademacherSummary>> {
    let (mut exp, seed): (RademacherExp, u64) = ctx.experiment()?;
    let (data, mu) = euclid_data(ctx, exp.n, seed)?;
    let x = &data.data;
    exp.n = x.n();
    let m = x.bound().ok_or(skm_core::SkmError::UnknownBound)?;
    let mu = mu.unwrap_or_else(|| x.mean());
    let alg = &ctx.cfg.algorithm;
    let est = rc_mc_euclid(
        x,
        mu.view(),
        &RcEuclidConfig {
            s: alg.s,
            m_box: m,
            k: alg.k,
            n_draws: exp.n_draws,
            seed,
            n_starts: exp.n_starts,
            max_iter: exp.max_iter,
        },
    )?;
    let bound = rc_bound_euclid(alg.s, m, alg.k, x.n());
    let within = est.value <= bound + 3.0 * est.std_error;
    let mut t = Table::new("estimate", &["n", "s", "m", "k", "estimate", "std_error", "bound", "within_bound"]);
    t.push(vec![
        x.n().into(),
        alg.s.into(),
        m.into(),
        alg.k.into(),
        est.value.into(),
        est.std_error.into(),
        bound.into(),
        within.into(),
    ]);
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: RademacherSummary { n: x.n(), m, estimate: est, bound, within_bound: within },
            passed: Some(within),
            tables: vec![t],
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// Squared Euclidean risk bound.
    Euclidean,
    /// General-dissimilarity bound under a minimum cell mass.
    General,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsExp {
    pub form: BoundForm,
    pub n_grid: Vec<usize>,
    pub t: f64,
    /// Coordinate (or dissimilarity) bound; taken from the model when unset.
    pub m: Option<f64>,
    /// Dimension; taken from the model when unset.
    pub p: Option<usize>,
    /// Minimum cell mass (general form).
    pub delta: Option<f64>,
    /// Partition-class Rademacher complexity (general form).
    pub rc: Option<f64>,
    /// Largest per-feature pair complexity (general form).
    pub rcj_max: Option<f64>,
}

impl Default for BoundsExp {
    fn default() -> Self {
        Self {
            form: BoundForm::Euclidean,
            n_grid: vec![100, 1000, 10_000, 100_000],
            t: 0.05,
            m: None,
            p: None,
            delta: None,
            rc: None,
            rcj_max: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub total: f64,
    pub components: Vec<(&'static str, f64)>,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsSummary {
    pub confidence_label: &'static str,
    pub rows: Vec<BoundRow>,
    pub all_feasible: bool,
}

fn model_bound(spec: &ModelSpec) -> Result<(Option<f64>, Option<usize>)> {
    if let Some(a) = atom_model(spec) {
        let a = a?;
        return Ok((Some(a.bound()), Some(a.p())));
    }
    if let Some(m) = point_model(spec) {
        let m = m?;
        return Ok((m.bound(), Some(m.p())));
    }
    Ok(match spec {
        ModelSpec::Dataset { bound, .. } | ModelSpec::Tensor { bound, .. } => (*bound, None),
        _ => (None, None),
    })
}

fn required(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| CliError::Config(format!("experiment.{name} is required for the general bound")))
}

pub fn bounds(ctx: &Ctx<'_>) -> Result<Run<BoundsExp, BoundsSummary>> {
    let (mut exp, seed): (BoundsExp, u64) = ctx.experiment()?;
    if exp.n_grid.is_empty() {
        return Err(CliError::Config("experiment.n_grid is empty".into()));
    }
    let (model_m, model_p) = model_bound(&ctx.cfg.model)?;
    exp.m = exp.m.or(model_m);
    exp.p = exp.p.or(model_p);
    let alg = &ctx.cfg.algorithm;
    let mut rows = Vec::new();
    let mut label = "";
    let mut table;
    match exp.form {
        BoundForm::Euclidean => {
            let p = exp.p.ok_or_else(|| CliError::Config("experiment.p is required for this model".into()))?;
            table = Table::new("bounds", &["n", "rc", "hoeffding", "mean_shift", "total"]);
            for &n in &exp.n_grid {
                let b = thm1_bound(alg.s, exp.m, alg.k, n, p, exp.t)?;
                label = b.confidence_label;
                table.push(vec![
                    n.into(),
                    b.component("rc").into(),
                    b.component("hoeffding").into(),
                    b.component("mean_shift").into(),
                    b.bound_total.into(),
                ]);
                rows.push(BoundRow { n, total: b.bound_total, components: b.components, feasible: b.feasible });
            }
        }
        BoundForm::General => {
            let m = exp.m.ok_or(skm_core::SkmError::UnknownBound)?;
            let (delta, rc, rcj_max) =
                (required(exp.delta, "delta")?, required(exp.rc, "rc")?, required(exp.rcj_max, "rcj_max")?);
            table = Table::new("bounds", &["n", "mean", "cell_mass", "pair", "total", "feasible"]);
            for &n in &exp.n_grid {
                let b = thm4_bound(&Thm4Inputs { s: alg.s, m, k: alg.k, delta, t: exp.t, n, rc, rcj_max });
                label = b.confidence_label;
                table.push(vec![
                    n.into(),
                    b.component("mean").into(),
                    b.component("cell_mass").into(),
                    b.component("pair").into(),
                    b.bound_total.into(),
                    b.feasible.into(),
                ]);
                rows.push(BoundRow { n, total: b.bound_total, components: b.components, feasible: b.feasible });
            }
        }
    }
    let all_feasible = rows.iter().all(|r| r.feasible);
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: BoundsSummary { confidence_label: label, rows, all_feasible },
            passed: None,
            tables: vec![table],
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcentrationExp {
    /// Seeded cases per inequality audit.
    pub cases: usize,
    pub eps_grid: Vec<f64>,
    /// Sample size and replications of the mean-deviation coverage check.
    pub coverage_n: usize,
    pub coverage_reps: usize,
    pub t: f64,
}

impl Default for ConcentrationExp {
    fn default() -> Self {
        Self {
            cases: 100_000,
            eps_grid: vec![0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0],
            coverage_n: 200,
            coverage_reps: 1000,
            t: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationSummary {
    pub peter_paul: AuditReport,
    pub set_peter_paul: AuditReport,
    pub hausdorff_split: AuditReport,
    pub coverage: CoverageReport,
    /// Coverage at least `1 − t`.
    pub coverage_ok: bool,
}

pub fn concentration(ctx: &Ctx<'_>) -> Result<Run<ConcentrationExp, ConcentrationSummary>> {
    let (exp, seed): (ConcentrationExp, u64) = ctx.experiment()?;
    let model = two_ball(ctx)?;
    let pp = peter_paul_check(exp.cases, &exp.eps_grid, skm_core::rng::derive_seed(seed, "audit", 0))?;
    let spp = set_peter_paul_check(exp.cases, &exp.eps_grid, skm_core::rng::derive_seed(seed, "audit", 1))?;
    let split = lemma5_check(exp.cases, skm_core::rng::derive_seed(seed, "audit", 2));
    let w = reference_theta::<f64>(&model).weights;
    let cov = hoeffding_coverage(
        &model,
        &w,
        exp.coverage_n,
        exp.t,
        exp.coverage_reps,
        skm_core::rng::derive_seed(seed, "audit", 3),
    )?;
    let coverage_ok = cov.coverage >= 1.0 - exp.t;

    let mut audits = Table::new("audits", &["audit", "cases", "violations", "max_ratio"]);
    for (name, r) in [("peter_paul", &pp), ("set_peter_paul", &spp), ("hausdorff_split", &split)] {
        audits.push(vec![name.into(), r.cases.into(), r.violations.into(), r.max_ratio.into()]);
    }
    let mut coverage = Table::new("coverage", &["n", "t", "reps", "bound", "coverage", "nominal_se", "meets_nominal"]);
    coverage.push(vec![
        cov.n.into(),
        cov.t.into(),
        cov.reps.into(),
        cov.bound.into(),
        cov.coverage.into(),
        cov.nominal_se.into(),
        coverage_ok.into(),
    ]);
    let passed = pp.violations + spp.violations + split.violations == 0;
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: ConcentrationSummary {
                peter_paul: pp,
                set_peter_paul: spp,
                hausdorff_split: split,
                coverage: cov,
                coverage_ok,
            },
            passed: Some(passed),
            tables: vec![audits, coverage],
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationarityExp {
    pub n_perturb: usize,
    pub mc_draws: usize,
    /// Largest perturbation size.
    pub radius: f64,
    /// Gaussian model only: weight level on the informative block; defaults to `1/√r`.
    pub alpha: Option<f64>,
}

impl Default for StationarityExp {
    fn default() -> Self {
        Self { n_perturb: 200, mc_draws: 1_000_000, radius: 0.5, alpha: None }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum StationaritySummary {
    TwoBall(Box<StationarityReport>),
    GaussMix {
        lloyd: DisplacementReport,
        /// Displacement beyond 3 standard errors.
        moved: bool,
    },
}

fn displacement_row(name: &str, d: &DisplacementReport, passed: bool) -> Vec<Cell> {
    vec![name.into(), d.displacement.into(), d.std_error.into(), d.max_abs_z.into(), passed.into()]
}

pub fn stationarity(ctx: &Ctx<'_>) -> Result<Run<StationarityExp, StationaritySummary>> {
    let (mut exp, seed): (StationarityExp, u64) = ctx.experiment()?;
    let mut t = Table::new("checks", &["check", "statistic", "std_error", "z", "passed"]);
    let (summary, passed) = match &ctx.cfg.model {
        ModelSpec::GaussMix { p, r, delta, sigma } => {
            let model = skm_core::GaussMixModel::new(*p, *r, *delta, *sigma)?;
            let alpha = *exp.alpha.get_or_insert(1.0 / (*r as f64).sqrt());
            let d = gaussian_counterexample_check(&model, alpha, exp.mc_draws, seed)?;
            let moved = d.moved();
            t.push(displacement_row("lloyd_displacement", &d, !moved));
            (StationaritySummary::GaussMix { lloyd: d, moved }, None)
        }
        ModelSpec::TwoBall { .. } => {
            if exp.alpha.is_some() {
                return Err(CliError::Config("experiment.alpha applies to the gauss_mix model only".into()));
            }
            let model = two_ball(ctx)?;
            let rep = skm_lab::verify_stationarity_two_ball(
                &model,
                &StationarityConfig {
                    s: ctx.cfg.algorithm.s,
                    n_perturb: exp.n_perturb,
                    mc_draws: exp.mc_draws,
                    seed,
                    radius: exp.radius,
                },
            )?;
            for (name, c) in [("centroid_perturbation", &rep.centroid), ("weight_perturbation", &rep.weight)] {
                t.push(vec![name.into(), c.worst_diff.into(), c.worst_se.into(), c.worst_z.into(), c.passed.into()]);
            }
            t.push(displacement_row("lloyd_displacement", &rep.lloyd, rep.lloyd.fixed()));
            let est_row = |name: &str, e: &MCEstimate| -> Vec<Cell> {
                let z = if e.std_error > 0.0 { e.value / e.std_error } else { 0.0 };
                vec![name.into(), e.value.into(), e.std_error.into(), z.into(), Cell::Text(String::new())]
            };
            t.push(est_row("axis_shift", &rep.axis_shift));
            if let Some(e) = &rep.noise_weight {
                t.push(est_row("noise_weight", e));
            }
            let passed = rep.passed;
            (StationaritySummary::TwoBall(Box::new(rep)), Some(passed))
        }
        _ => return Err(ctx.unsupported("two_ball or gauss_mix")),
    };
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: summary,
            passed,
            tables: vec![t],
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuityExp {
    pub radii: Vec<f64>,
    pub n_probe: usize,
    pub mc_draws: usize,
}

impl Default for ContinuityExp {
    fn default() -> Self {
        Self { radii: vec![0.5, 0.25, 0.125, 0.0625], n_probe: 200, mc_draws: 200_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuitySummary {
    pub rows: Vec<ContinuityRow>,
    /// Modulus shrinks with the radius, up to 3 combined standard errors.
    pub nonincreasing: bool,
    /// Smallest-radius modulus below half the largest-radius modulus.
    pub halves: bool,
}

pub fn continuity(ctx: &Ctx<'_>) -> Result<Run<ContinuityExp, ContinuitySummary>> {
    let (exp, seed): (ContinuityExp, u64) = ctx.experiment()?;
    if exp.radii.is_empty() {
        return Err(CliError::Config("experiment.radii is empty".into()));
    }
    let model = two_ball(ctx)?;
    let theta = reference_or_err(&model, ctx.cfg.algorithm.s)?;
    let rows = continuity_probe(
        &model,
        &theta,
        &exp.radii,
        &ContinuityConfig { n_probe: exp.n_probe, mc_draws: exp.mc_draws, seed },
    )?;
    let nonincreasing = modulus_nonincreasing(&rows, 3.0);
    let by_radius = |pick_max: bool| {
        rows.iter().reduce(|a, b| if (b.radius > a.radius) == pick_max { b } else { a }).map_or(f64::NAN, |r| r.modulus)
    };
    let halves = by_radius(false) < 0.5 * by_radius(true);
    let mut t = Table::new("modulus", &["radius", "modulus", "std_error", "mean_abs_diff", "max_distance"]);
    for r in &rows {
        t.push(vec![
            r.radius.into(),
            r.modulus.into(),
            r.std_error.into(),
            r.mean_abs_diff.into(),
            r.max_distance.into(),
        ]);
    }
    Ok(Run {
        seed,
        output: Output {
            command: ctx.command.name(),
            config: ctx.resolve(exp, seed),
            result: ContinuitySummary { rows, nonincreasing, halves },
            passed: Some(nonincreasing && halves),
            tables: vec![t],
        },
    })
}
