//! Stationarity, fixed-point and continuity probes around a reference parameter.

use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use skm_core::metric::nearest;
use skm_core::models::{GaussMixModel, PointModel, TwoBallModel};
use skm_core::{
    reference_theta, rng, solve_weights, theta_distance, CentroidSet, GainVector, Result, SkmError, Theta, WeightVector,
};

use crate::mc::{self, MCEstimate, Moments, CHUNK};
use crate::risk::compare_risks;

/// Uniform direction scaled to length `radius`.
fn sphere_step(rng: &mut ChaCha8Rng, p: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.iter().map(|x| x * radius / norm).collect();
        }
    }
}

/// Feasible point on the segment from `w0` toward `target` (clamped to `w >= 0`),
/// as far along as the constraints allow. Never farther from `w0` than `target`.
///
/// Feasibility here is exact (no tolerance), relaxed only to whatever rounding
/// excess `w0` itself carries, so probes cannot gain from the tolerance band.
pub fn repair_toward(w0: &WeightVector<f64>, target: &[f64]) -> WeightVector<f64> {
    let s = w0.s();
    let (l1_cap, l2_cap) = (s.max(w0.l1()), w0.l2_sq().max(1.0));
    let base = w0.as_slice();
    let clamped: Vec<f64> = target.iter().map(|v| v.max(0.0)).collect();
    let at = |lam: f64| -> Vec<f64> { base.iter().zip(&clamped).map(|(a, b)| (a + lam * (b - a)).max(0.0)).collect() };
    let ok = |w: &[f64]| w.iter().sum::<f64>() <= l1_cap && w.iter().map(|v| v * v).sum::<f64>() <= l2_cap;
    let lam = if ok(&at(1.0)) {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    WeightVector::new(at(lam).into(), s).expect("within the caps of a feasible w0")
}

fn shift_centers(a: &CentroidSet<f64>, rng: &mut ChaCha8Rng, radius: f64) -> Result<CentroidSet<f64>> {
    let mut c = a.centers().to_owned();
    for mut row in c.rows_mut() {
        let step = sphere_step(rng, row.len(), radius);
        row.iter_mut().zip(step).for_each(|(v, d)| *v += d);
    }
    CentroidSet::new(c)
}

/// One population weighted-Lloyd step from a two-center configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementReport {
    /// Conditional means of the two nearest-center cells.
    pub updated_centers: Vec<Vec<f64>>,
    pub cell_counts: Vec<usize>,
    /// Outward shift along `u = (c₂ − c₁)/‖c₂ − c₁‖`:
    /// `½ (⟨c₁ − m₁, u⟩ + ⟨m₂ − c₂, u⟩)`.
    pub displacement: f64,
    pub std_error: f64,
    /// Largest `|m_kj − c_kj| / se_kj` over cells and coordinates.
    pub max_abs_z: f64,
    pub n_mc: usize,
    pub seed: u64,
}

impl DisplacementReport {
    /// Displacement exceeds three standard errors.
    pub fn moved(&self) -> bool {
        self.displacement > 3.0 * self.std_error
    }

    /// Displacement within three standard errors of zero.
    pub fn fixed(&self) -> bool {
        self.displacement.abs() <= 3.0 * self.std_error
    }
}

/// Monte Carlo conditional means of the cells `{x : nearest center under w is c_k}`.
pub fn lloyd_displacement<M: PointModel + ?Sized>(
    model: &M,
    centers: &CentroidSet<f64>,
    w: &WeightVector<f64>,
    n_mc: usize,
    seed: u64,
) -> Result<DisplacementReport> {
    mc::require_draws(n_mc)?;
    if centers.k() != 2 {
        return Err(SkmError::InvalidArgument(format!("displacement is defined for two centers, got {}", centers.k())));
    }
    let p = model.p();
    if centers.p() != p || w.p() != p {
        return Err(SkmError::DimensionMismatch { expected: p, found: centers.p().min(w.p()) });
    }
    let c = centers.centers().as_standard_layout().into_owned();
    let diff: Vec<f64> = (0..p).map(|j| c[[1, j]] - c[[0, j]]).collect();
    let len = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len == 0.0 {
        return Err(SkmError::InvalidArgument("centers coincide".into()));
    }
    let u: Vec<f64> = diff.iter().map(|v| v / len).collect();
    let ws = w.as_slice();
    let chunks = n_mc.div_ceil(CHUNK);
    let parts: Vec<[Moments; 2]> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut rng = rng::stream(seed, "lloyd-step", ch as u64);
            let mut cells = [Moments::new(p + 1), Moments::new(p + 1)];
            let mut x = vec![0.0; p + 1];
            for _ in 0..CHUNK.min(n_mc - ch * CHUNK) {
                model.sample_into(&mut rng, &mut x[..p]);
                x[p] = x[..p].iter().zip(&u).map(|(a, b)| a * b).sum();
                let k = nearest(&x[..p], c.view(), ws).0;
                cells[k].push(&x);
            }
            cells
        })
        .collect();
    let mut cells = [Moments::new(p + 1), Moments::new(p + 1)];
    for part in &parts {
        cells[0].merge(&part[0]);
        cells[1].merge(&part[1]);
    }
    if let Some(k) = cells.iter().position(|m| m.count < 2) {
        return Err(SkmError::ZeroMassCell(k));
    }
    let est = |k: usize, j: usize| cells[k].estimate(j, seed);
    let proj_c = |k: usize| (0..p).map(|j| c[[k, j]] * u[j]).sum::<f64>();
    let (m0, m1) = (est(0, p), est(1, p));
    let displacement = 0.5 * ((proj_c(0) - m0.value) + (m1.value - proj_c(1)));
    let std_error = 0.5 * (m0.std_error.powi(2) + m1.std_error.powi(2)).sqrt();
    let mut max_abs_z = 0.0f64;
    for k in 0..2 {
        for j in 0..p {
            let e = est(k, j);
            let dev = (e.value - c[[k, j]]).abs();
            let z = if e.std_error > 0.0 {
                dev / e.std_error
            } else if dev > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            max_abs_z = max_abs_z.max(z);
        }
    }
    Ok(DisplacementReport {
        updated_centers: (0..2).map(|k| cells[k].mean[..p].to_vec()).collect(),
        cell_counts: cells.iter().map(|m| m.count).collect(),
        displacement,
        std_error,
        max_abs_z,
        n_mc,
        seed,
    })
}

/// One weighted-Lloyd step from `{μ₁, μ₂}` under `w = α 𝟙_r`: the half-space cells
/// truncate each Gaussian component, so the conditional means move outward.
pub fn gaussian_counterexample_check(
    model: &GaussMixModel,
    alpha: f64,
    n_mc: usize,
    seed: u64,
) -> Result<DisplacementReport> {
    let r = model.r();
    if alpha.is_nan() || alpha <= 0.0 || alpha * alpha * r as f64 > 1.0 + skm_core::TOL_FEAS {
        return Err(SkmError::InvalidArgument(format!("alpha must lie in (0, 1/√r], got {alpha} with r = {r}")));
    }
    let mut w = Array1::zeros(model.p());
    w.slice_mut(ndarray::s![..r]).fill(alpha);
    let w = WeightVector::new(w, alpha * r as f64)?;
    let centers =
        CentroidSet::new(ndarray::stack![ndarray::Axis(0), model.component_mean(0), model.component_mean(1)])?;
    lloyd_displacement(model, &centers, &w, n_mc, seed)
}

/// Worst case of "perturbed risk minus reference risk" over a set of probes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbCheck {
    pub n_perturb: usize,
    /// Smallest `diff / se` (most negative means the reference looked worse).
    pub worst_z: f64,
    pub worst_diff: f64,
    pub worst_se: f64,
    /// No probe beat the reference by more than three standard errors
    /// (plus the rounding floor).
    pub passed: bool,
}

/// Relative rounding floor on risk differences: probes that barely move the parameter
/// give near-identical risks whose Monte Carlo SE underflows the rounding error.
pub const ROUNDING_RTOL: f64 = 1e-12;

/// `diff` is not significantly negative: below `−3·SE` and below the rounding floor.
fn not_worse(d: &MCEstimate, floor: f64) -> bool {
    d.value >= -3.0 * d.std_error - floor
}

fn perturb_check(diffs: &[MCEstimate], floor: f64) -> PerturbCheck {
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    let mut passed = true;
    for d in diffs {
        if !not_worse(d, floor) {
            passed = false;
        }
        let z = if d.std_error > 0.0 {
            d.value / d.std_error
        } else if d.value < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        if z < worst.0 {
            worst = (z, d.value, d.std_error);
        }
    }
    PerturbCheck { n_perturb: diffs.len(), worst_z: worst.0, worst_diff: worst.1, worst_se: worst.2, passed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityConfig {
    pub s: f64,
    pub n_perturb: usize,
    pub mc_draws: usize,
    pub seed: u64,
    /// Largest perturbation of each center and of `w`.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub weights: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    /// Risk at perturbed centers, `w` fixed.
    pub centroid: PerturbCheck,
    /// One population Lloyd step from the reference centers.
    pub lloyd: DisplacementReport,
    /// Risk at perturbed feasible weights, centers fixed.
    pub weight: PerturbCheck,
    /// Risk change when both centers move apart along the informative axis.
    pub axis_shift: MCEstimate,
    /// Risk change when weight is moved onto the first noise coordinate.
    pub noise_weight: Option<MCEstimate>,
    /// Absolute slack added to every `3·SE` band, `ROUNDING_RTOL · |R(reference)|`.
    pub rounding_floor: f64,
    pub passed: bool,
}

/// Check that the reference parameter of the two-ball model is stationary: no
/// perturbation of the centers (at fixed `w`) or of `w` (at fixed centers) lowers the
/// risk beyond Monte Carlo error, and one Lloyd step maps the centers to themselves.
pub fn verify_stationarity_two_ball(model: &TwoBallModel, cfg: &StationarityConfig) -> Result<StationarityReport> {
    let base: Theta<f64> = reference_theta(model);
    if base.weights.l1() > cfg.s + skm_core::TOL_FEAS {
        return Err(SkmError::InvalidSparsity(cfg.s));
    }
    let w_star = WeightVector::new(base.weights.as_array().clone(), cfg.s)?;
    let a_star = base.centers().expect("euclidean").clone();
    let star = Theta::euclidean(w_star.clone(), a_star.clone())?;
    let p = model.p();
    let r = model.r();

    let mut center_probes = vec![star.clone()];
    let mut weight_probes = vec![star.clone()];
    for i in 0..cfg.n_perturb {
        let mut rng = rng::stream(cfg.seed, "stationarity-centers", i as u64);
        let rho = cfg.radius * rng.random::<f64>();
        center_probes.push(Theta::euclidean(w_star.clone(), shift_centers(&a_star, &mut rng, rho)?)?);

        let mut rng = rng::stream(cfg.seed, "stationarity-weights", i as u64);
        let w = if i % 2 == 0 {
            let gains: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            solve_weights(&GainVector::new(gains)?, cfg.s)?
        } else {
            let rho = cfg.radius * rng.random::<f64>();
            let step = sphere_step(&mut rng, p, rho);
            let target: Vec<f64> = w_star.as_slice().iter().zip(&step).map(|(a, b)| a + b).collect();
            repair_toward(&w_star, &target)
        };
        weight_probes.push(Theta::euclidean(w, a_star.clone())?);
    }

    // centers pushed apart along the informative axis by a small step
    let u = 1.0 / (r as f64).sqrt();
    let mut apart = a_star.centers().to_owned();
    for j in 0..r {
        apart[[0, j]] -= 0.05 * u;
        apart[[1, j]] += 0.05 * u;
    }
    center_probes.push(Theta::euclidean(w_star.clone(), CentroidSet::new(apart)?)?);

    // shift a little weight onto the first noise coordinate, then restore feasibility
    let noise_probe = (r < p).then(|| {
        let phi: f64 = 0.1;
        let mut target: Vec<f64> = w_star.as_slice().iter().map(|v| v * phi.cos()).collect();
        target[r] = phi.sin();
        Theta::euclidean(repair_toward(&w_star, &target), a_star.clone())
    });
    if let Some(t) = noise_probe {
        weight_probes.push(t?);
    }

    let cseed = rng::derive_seed(cfg.seed, "stationarity-mc", 0);
    let centers_cmp = compare_risks(model, &center_probes, cfg.mc_draws, cseed)?;
    let weights_cmp = compare_risks(model, &weight_probes, cfg.mc_draws, cseed)?;
    let lloyd =
        lloyd_displacement(model, &a_star, &w_star, cfg.mc_draws, rng::derive_seed(cfg.seed, "stationarity-lloyd", 0))?;

    let (axis_shift, centroid_diffs) = centers_cmp.diffs.split_last().expect("axis probe present");
    let (noise_weight, weight_diffs) = if r < p {
        let (last, rest) = weights_cmp.diffs.split_last().expect("noise probe present");
        (Some(*last), rest)
    } else {
        (None, &weights_cmp.diffs[..])
    };
    let floor = ROUNDING_RTOL * centers_cmp.risks[0].value.abs().max(f64::MIN_POSITIVE);
    let centroid = perturb_check(centroid_diffs, floor);
    let weight = perturb_check(weight_diffs, floor);
    let passed = centroid.passed
        && weight.passed
        && lloyd.fixed()
        && not_worse(axis_shift, floor)
        && noise_weight.is_none_or(|d| not_worse(&d, floor));
    Ok(StationarityReport {
        weights: w_star.as_slice().to_vec(),
        centers: a_star.centers().rows().into_iter().map(|r| r.to_vec()).collect(),
        centroid,
        lloyd,
        weight,
        axis_shift: *axis_shift,
        noise_weight,
        rounding_floor: floor,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub radius: f64,
    /// `max |R(θ′) − R(θ₀)|` over the probes at this radius.
    pub modulus: f64,
    /// Standard error of the maximizing probe's difference.
    pub std_error: f64,
    pub mean_abs_diff: f64,
    /// Largest `theta_distance(θ′, θ₀)` among the probes.
    pub max_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityConfig {
    pub n_probe: usize,
    pub mc_draws: usize,
    pub seed: u64,
}

/// Risk modulus of continuity around `theta0`: for each radius, the largest risk change
/// over random parameters within that `theta_distance`, all on common draws.
pub fn continuity_probe<M: PointModel + ?Sized>(
    model: &M,
    theta0: &Theta<f64>,
    radii: &[f64],
    cfg: &ContinuityConfig,
) -> Result<Vec<ContinuityRow>> {
    let a0 = theta0.centers().ok_or(SkmError::ModeMismatch)?;
    if radii.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(SkmError::InvalidArgument("radii must be finite and >= 0".into()));
    }
    let w0 = &theta0.weights;
    let p = w0.p();
    let mut thetas = vec![theta0.clone()];
    for (ri, &rho) in radii.iter().enumerate() {
        for i in 0..cfg.n_probe {
            let mut rng = rng::stream(cfg.seed, "continuity", (ri * cfg.n_probe + i) as u64);
            let step = sphere_step(&mut rng, p, rho);
            let target: Vec<f64> = w0.as_slice().iter().zip(&step).map(|(a, b)| a + b).collect();
            let w = repair_toward(w0, &target);
            thetas.push(Theta::euclidean(w, shift_centers(a0, &mut rng, rho)?)?);
        }
    }
    let distances = thetas[1..].iter().map(|t| theta_distance(t, theta0)).collect::<Result<Vec<f64>>>()?;
    let cmp = compare_risks(model, &thetas, cfg.mc_draws, cfg.seed)?;
    Ok(radii
        .iter()
        .enumerate()
        .map(|(ri, &radius)| {
            let block = &cmp.diffs[ri * cfg.n_probe..(ri + 1) * cfg.n_probe];
            let dists = &distances[ri * cfg.n_probe..(ri + 1) * cfg.n_probe];
            let worst = block.iter().fold(None::<&MCEstimate>, |b, d| match b {
                Some(b) if b.value.abs() >= d.value.abs() => Some(b),
                _ => Some(d),
            });
            ContinuityRow {
                radius,
                modulus: worst.map_or(0.0, |d| d.value.abs()),
                std_error: worst.map_or(0.0, |d| d.std_error),
                mean_abs_diff: block.iter().map(|d| d.value.abs()).sum::<f64>() / block.len().max(1) as f64,
                max_distance: dists.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect())
}

/// Modulus shrinks (up to `k` combined standard errors) as the radius shrinks.
pub fn modulus_nonincreasing(rows: &[ContinuityRow], k: f64) -> bool {
    let mut sorted: Vec<&ContinuityRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.radius.total_cmp(&a.radius));
    sorted.windows(2).all(|pair| {
        let (big, small) = (pair[0], pair[1]);
        small.modulus <= big.modulus + k * (big.std_error.powi(2) + small.std_error.powi(2)).sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn repair_stays_feasible_and_close() {
        let w0 = WeightVector::new(array![0.6, 0.8, 0.0], 1.4).unwrap();
        let target = [1.5, -0.3, 0.4];
        let w = repair_toward(&w0, &target);
        assert!(w.is_feasible());
        let d = |a: &[f64]| a.iter().zip(w0.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(d(w.as_slice()) <= d(&target) + 1e-12);
    }

    #[test]
    fn gaussian_centers_move_outward() {
        let g = GaussMixModel::new(4, 2, 1.0, 1.0).unwrap();
        let r = gaussian_counterexample_check(&g, 1.0 / 2f64.sqrt(), 200_000, 1).unwrap();
        assert!(r.moved(), "{r:?}");
        assert!(r.displacement > 0.2 && r.displacement < 0.4);
    }

    #[test]
    fn narrow_gaussians_barely_move() {
        let g = GaussMixModel::new(4, 2, 1.0, 1e-3).unwrap();
        let r = gaussian_counterexample_check(&g, 0.5, 50_000, 2).unwrap();
        assert!(r.displacement.abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn two_ball_is_a_fixed_point() {
        let m = TwoBallModel::new(4, 2).unwrap();
        let t: Theta<f64> = reference_theta(&m);
        let r = lloyd_displacement(&m, t.centers().unwrap(), &t.weights, 200_000, 3).unwrap();
        assert!(r.fixed(), "{r:?}");
    }

    #[test]
    fn alpha_out_of_range() {
        let g = GaussMixModel::new(4, 2, 1.0, 1.0).unwrap();
        assert!(gaussian_counterexample_check(&g, 0.9, 100, 0).is_err());
    }

    #[test]
    fn stationarity_r1() {
        let m = TwoBallModel::new(3, 1).unwrap();
        let cfg = StationarityConfig { s: 1.0, n_perturb: 30, mc_draws: 100_000, seed: 4, radius: 0.5 };
        let rep = verify_stationarity_two_ball(&m, &cfg).unwrap();
        assert_eq!(rep.weights, vec![1.0, 0.0, 0.0]);
        assert!(rep.passed, "{rep:?}");
        assert!(verify_stationarity_two_ball(&m, &StationarityConfig { s: 0.5, ..cfg }).is_err());
    }

    #[test]
    fn continuity_zero_radius() {
        let m = TwoBallModel::new(3, 1).unwrap();
        let t: Theta<f64> = reference_theta(&m);
        let rows = continuity_probe(&m, &t, &[0.0, 0.3], &ContinuityConfig { n_probe: 10, mc_draws: 20_000, seed: 5 })
            .unwrap();
        assert_eq!(rows[0].modulus, 0.0);
        assert!(rows[1].max_distance <= 0.3 + 1e-12);
        assert!(rows[1].modulus > 0.0);
    }
}
