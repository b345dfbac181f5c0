//! Subcommand implementations. Each returns its tables and summary; [`run`] writes them.

mod experiments;
mod fitting;

use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::de::DeserializeOwned;
use serde::Serialize;
use skm_core::{rng, AtomModel, GaussMixModel, PointModel, TwoBallModel};

use crate::config::{Config, ModelSpec, Resolved, ResolvedExperiment, ResolvedOutput};
use crate::error::{CliError, Result};
use crate::io::{read_dataset, write_output, NamedDataset, Output};

pub use experiments::{
    bounds, concentration, continuity, rademacher, risk_gap, stationarity, BoundForm, BoundRow, BoundsExp,
    BoundsSummary, ConcentrationExp, ConcentrationSummary, ContinuityExp, ContinuitySummary, RademacherExp,
    RademacherSummary, RiskGapExp, RiskGapSummary, StarReport, StationarityExp, StationaritySummary,
};
pub use fitting::{
    equiv_check, fit, fit_general, random_instance, EquivExp, EquivSummary, FitExp, FitGeneralExp, FitGeneralSummary,
    FitSummary, OracleComparison,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    FitGeneral,
    EquivCheck,
    RiskGap,
    Rademacher,
    Bounds,
    Concentration,
    Stationarity,
    Continuity,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Fit,
        Command::FitGeneral,
        Command::EquivCheck,
        Command::RiskGap,
        Command::Rademacher,
        Command::Bounds,
        Command::Concentration,
        Command::Stationarity,
        Command::Continuity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::FitGeneral => "fit-general",
            Command::EquivCheck => "equiv-check",
            Command::RiskGap => "risk-gap",
            Command::Rademacher => "rademacher",
            Command::Bounds => "bounds",
            Command::Concentration => "concentration",
            Command::Stationarity => "stationarity",
            Command::Continuity => "continuity",
        }
    }

    /// Whether a failed `passed` flag turns into exit code 4. Monte Carlo comparisons
    /// report their flags as data instead.
    fn exact_check(self) -> bool {
        matches!(self, Command::EquivCheck | Command::Concentration)
    }
}

/// What a subcommand produced, before anything touches the disk.
pub struct Run<E: Serialize, R: Serialize> {
    pub seed: u64,
    pub output: Output<Resolved<E>, R>,
}

pub struct Ctx<'a> {
    pub cfg: &'a Config,
    pub seed: Option<u64>,
    pub command: Command,
}

impl Ctx<'_> {
    pub fn prefix(&self) -> String {
        self.cfg.output.prefix.clone().unwrap_or_else(|| self.command.name().replace('-', "_"))
    }

    fn experiment<E: DeserializeOwned>(&self) -> Result<(E, u64)> {
        self.cfg.experiment(self.seed)
    }

    fn resolve<E: Serialize>(&self, params: E, seed: u64) -> Resolved<E> {
        Resolved {
            model: resolved_model(&self.cfg.model),
            algorithm: self.cfg.algorithm.clone(),
            experiment: ResolvedExperiment { seed, params },
            output: ResolvedOutput { prefix: self.prefix() },
        }
    }

    fn unsupported(&self, expected: &str) -> CliError {
        CliError::Config(format!(
            "{} does not support model kind '{}'; expected {expected}",
            self.command.name(),
            self.cfg.model.kind()
        ))
    }
}

/// Run one subcommand and write its files into `out_dir`; returns the written paths.
pub fn run(command: Command, cfg: &Config, seed: Option<u64>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let ctx = Ctx { cfg, seed, command };
    match command {
        Command::Fit => emit(&ctx, out_dir, fit(&ctx)?),
        Command::FitGeneral => emit(&ctx, out_dir, fit_general(&ctx)?),
        Command::EquivCheck => emit(&ctx, out_dir, equiv_check(&ctx)?),
        Command::RiskGap => emit(&ctx, out_dir, risk_gap(&ctx)?),
        Command::Rademacher => emit(&ctx, out_dir, rademacher(&ctx)?),
        Command::Bounds => emit(&ctx, out_dir, bounds(&ctx)?),
        Command::Concentration => emit(&ctx, out_dir, concentration(&ctx)?),
        Command::Stationarity => emit(&ctx, out_dir, stationarity(&ctx)?),
        Command::Continuity => emit(&ctx, out_dir, continuity(&ctx)?),
    }
}

fn emit<E: Serialize, R: Serialize>(ctx: &Ctx<'_>, dir: &Path, run: Run<E, R>) -> Result<Vec<PathBuf>> {
    let written = write_output(dir, &ctx.prefix(), run.seed, &run.output)?;
    if ctx.command.exact_check() && run.output.passed == Some(false) {
        return Err(CliError::Check(format!(
            "{} reported failures; see {}",
            ctx.command.name(),
            written.last().expect("summary path").display()
        )));
    }
    Ok(written)
}

fn resolved_model(spec: &ModelSpec) -> ModelSpec {
    match spec {
        ModelSpec::TwoBall { p, r, radius: None } => {
            ModelSpec::TwoBall { p: *p, r: *r, radius: Some((*r as f64).sqrt() / 2.0) }
        }
        other => other.clone(),
    }
}

fn two_ball(ctx: &Ctx<'_>) -> Result<TwoBallModel> {
    match &ctx.cfg.model {
        ModelSpec::TwoBall { p, r, radius: None } => Ok(TwoBallModel::new(*p, *r)?),
        ModelSpec::TwoBall { p, r, radius: Some(rad) } => Ok(TwoBallModel::with_radius(*p, *r, *rad)?),
        _ => Err(ctx.unsupported("two_ball")),
    }
}

fn atom_model(spec: &ModelSpec) -> Option<Result<AtomModel>> {
    match spec {
        ModelSpec::Atoms { points, probs } => Some(AtomModel::from_points(points, probs.clone()).map_err(Into::into)),
        _ => None,
    }
}

fn point_model(spec: &ModelSpec) -> Option<Result<Box<dyn PointModel>>> {
    match spec {
        ModelSpec::TwoBall { p, r, radius } => Some(
            match radius {
                None => TwoBallModel::new(*p, *r),
                Some(rad) => TwoBallModel::with_radius(*p, *r, *rad),
            }
            .map(|m| Box::new(m) as Box<dyn PointModel>)
            .map_err(Into::into),
        ),
        ModelSpec::GaussMix { p, r, delta, sigma } => Some(
            GaussMixModel::new(*p, *r, *delta, *sigma).map(|m| Box::new(m) as Box<dyn PointModel>).map_err(Into::into),
        ),
        _ => None,
    }
}

fn feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// Euclidean data: read from CSV, or `n` draws from a generative model.
/// Also returns the population mean when the model knows it.
fn euclid_data(ctx: &Ctx<'_>, n: usize, seed: u64) -> Result<(NamedDataset, Option<Array1<f64>>)> {
    if let ModelSpec::Dataset { path, bound } = &ctx.cfg.model {
        return Ok((read_dataset(&ctx.cfg.resolve_path(path), *bound)?, None));
    }
    let model = point_model(&ctx.cfg.model).ok_or_else(|| ctx.unsupported("dataset, two_ball or gauss_mix"))??;
    if n == 0 {
        return Err(CliError::Config("experiment.n must be positive".into()));
    }
    let x = model.sample_rows(n, rng::derive_seed(seed, "cli-data", 0), "cli-data", 0);
    let data = match model.bound() {
        Some(m) => skm_core::Dataset::with_bound(x, m)?,
        None => skm_core::Dataset::new(x)?,
    };
    Ok((NamedDataset { names: feature_names(model.p()), data }, Some(model.mean())))
}
