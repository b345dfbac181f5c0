//! Randomized audits of the inequalities the consistency arguments rely on.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use skm_core::metric::{directed_hausdorff, nearest, wsq};
use skm_core::models::PointModel;
use skm_core::{rng, Result, SkmError, WeightVector};

/// Outcome of a randomized inequality audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub cases: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (1 means the inequality was attained).
    pub max_ratio: f64,
}

/// Relative slack granted to floating-point rounding.
pub const AUDIT_RTOL: f64 = 1e-12;

fn violates(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > AUDIT_RTOL * lhs.abs().max(rhs.abs())
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn audit<G>(n_cases: usize, seed: u64, tag: &str, case: G) -> AuditReport
where
    G: Fn(&mut ChaCha8Rng) -> (f64, f64) + Sync,
{
    let results: Vec<(f64, f64)> =
        (0..n_cases).into_par_iter().map(|i| case(&mut rng::stream(seed, tag, i as u64))).collect();
    AuditReport {
        cases: n_cases,
        violations: results.iter().filter(|(l, r)| violates(*l, *r)).count(),
        max_ratio: results.iter().map(|&(l, r)| ratio(l, r)).fold(0.0, f64::max),
    }
}

fn gaussian_point(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> Vec<f64> {
    (0..p)
        .map(|_| {
            scale * {
                let z: f64 = StandardNormal.sample(rng);
                z
            }
        })
        .collect()
}

fn random_weights(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(0.0..1.0)).collect()
}

fn pick_eps(rng: &mut ChaCha8Rng, eps_grid: &[f64]) -> f64 {
    eps_grid[rng.random_range(0..eps_grid.len())]
}

fn check_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(SkmError::InvalidArgument("epsilon grid must be nonempty and positive".into()));
    }
    Ok(())
}

/// `d²(x, y) ≤ (1 + ε) d²(x, z) + (1 + 1/ε) d²(z, y)` on random triples under random
/// weighted Euclidean metrics.
pub fn peter_paul_check(n_triples: usize, eps_grid: &[f64], seed: u64) -> Result<AuditReport> {
    check_grid(eps_grid)?;
    Ok(audit(n_triples, seed, "peter-paul", |rng| {
        let p = rng.random_range(1..=6);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let w = random_weights(rng, p);
        let x = gaussian_point(rng, p, scale);
        let y = gaussian_point(rng, p, scale);
        let z = gaussian_point(rng, p, scale);
        let eps = pick_eps(rng, eps_grid);
        let lhs = wsq(&x, &y, &w);
        let rhs = (1.0 + eps) * wsq(&x, &z, &w) + (1.0 + 1.0 / eps) * wsq(&z, &y, &w);
        (lhs, rhs)
    }))
}

fn random_set(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> Array2<f64> {
    let m = rng.random_range(1..=5);
    Array2::from_shape_fn((m, p), |_| {
        scale * {
            let z: f64 = StandardNormal.sample(rng);
            z
        }
    })
}

/// `d²(x, A) ≤ (1 + ε) d²(x, B) + (1 + 1/ε) d⃗_H²(B, A)` on random finite sets.
pub fn set_peter_paul_check(n_cases: usize, eps_grid: &[f64], seed: u64) -> Result<AuditReport> {
    check_grid(eps_grid)?;
    let results: Vec<Result<(f64, f64)>> = (0..n_cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, "set-peter-paul", i as u64);
            let rng = &mut rng;
            let p = rng.random_range(1..=5);
            let scale = 10f64.powf(rng.random_range(-1.0..1.0));
            let raw = random_weights(rng, p);
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let w = WeightVector::new(raw.iter().map(|v| v / norm).collect(), p as f64)?;
            let a = random_set(rng, p, scale);
            let b = random_set(rng, p, scale);
            let x = gaussian_point(rng, p, scale);
            let eps = pick_eps(rng, eps_grid);
            let dxa = nearest(&x, a.view(), w.as_slice()).1;
            let dxb = nearest(&x, b.view(), w.as_slice()).1;
            let dh = directed_hausdorff(b.view(), a.view(), Some(&w))?;
            Ok((dxa, (1.0 + eps) * dxb + (1.0 + 1.0 / eps) * dh * dh))
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(AuditReport {
        cases: n_cases,
        violations: results.iter().filter(|(l, r)| violates(*l, *r)).count(),
        max_ratio: results.iter().map(|&(l, r)| ratio(l, r)).fold(0.0, f64::max),
    })
}

/// `|1/P_n f − 1/P f| ≤ 2ε/δ²` whenever `P f ≥ δ`, `|P_n f − P f| ≤ ε` and `δ ≥ 2ε`.
/// One case in ten sits exactly at the extreme admissible point.
pub fn lemma5_check(n_cases: usize, seed: u64) -> AuditReport {
    audit(n_cases, seed, "lemma5", |rng| {
        let delta: f64 = rng.random_range(1e-3..=1.0);
        let extreme = rng.random_bool(0.1);
        let eps = if extreme { delta / 2.0 } else { rng.random_range(0.0..=delta / 2.0) };
        let pf: f64 = if extreme { delta } else { rng.random_range(delta..=1.0) };
        let pnf: f64 = if extreme { pf - eps } else { rng.random_range((pf - eps).max(0.0)..=(pf + eps).min(1.0)) };
        ((1.0 / pnf - 1.0 / pf).abs(), 2.0 * eps / (delta * delta))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub reps: usize,
    pub n: usize,
    pub t: f64,
    /// `2 s M² log(p/t) / n` with `s = ‖w‖₁`.
    pub bound: f64,
    pub coverage: f64,
    /// Binomial standard error of `coverage` at the nominal level `1 − t`.
    pub nominal_se: f64,
}

/// Fraction of replications with `‖X̄ − μ‖²_w ≤ 2 s M² log(p/t) / n`.
pub fn hoeffding_coverage<M: PointModel + ?Sized>(
    model: &M,
    w: &WeightVector<f64>,
    n: usize,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<CoverageReport> {
    let m = model.bound().ok_or(SkmError::UnknownBound)?;
    if !(t > 0.0 && t < 1.0) || n == 0 || reps == 0 {
        return Err(SkmError::InvalidArgument(format!(
            "need 0 < t < 1, n >= 1 and reps >= 1 (t = {t}, n = {n}, reps = {reps})"
        )));
    }
    if w.p() != model.p() {
        return Err(SkmError::DimensionMismatch { expected: model.p(), found: w.p() });
    }
    let bound = 2.0 * w.l1() * m * m * (model.p() as f64 / t).ln() / n as f64;
    let mu = model.mean().to_vec();
    let covered: usize = (0..reps)
        .into_par_iter()
        .map(|r| {
            let x = model.sample_rows(n, seed, "hoeffding", r as u64);
            let xbar = x.mean_axis(ndarray::Axis(0)).expect("n >= 1").to_vec();
            usize::from(wsq(&xbar, &mu, w.as_slice()) <= bound)
        })
        .sum();
    Ok(CoverageReport {
        reps,
        n,
        t,
        bound,
        coverage: covered as f64 / reps as f64,
        nominal_se: (t * (1.0 - t) / reps as f64).sqrt(),
    })
}
