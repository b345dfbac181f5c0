//! Seeded samplers for the generative models used in the experiments.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SkmError};
use crate::rng;
use crate::scalar::Scalar;
use crate::types::{CentroidSet, Dataset, DissimilarityTensor, Theta, WeightVector};

/// A distribution on `ℝᵖ` with a closed-form mean.
pub trait PointModel: Sync {
    fn p(&self) -> usize;
    /// `μ = E[X]`.
    fn mean(&self) -> Array1<f64>;
    /// Coordinate bound `M` with `|X_j| <= M` a.s., if the support is compact.
    fn bound(&self) -> Option<f64>;
    /// Write one draw into `out` (length `p`); returns the mixture component used.
    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> usize;

    /// `n` draws from the stream `(seed, tag, index)`, one row each.
    fn sample_rows(&self, n: usize, seed: u64, tag: &str, index: u64) -> Array2<f64> {
        let mut rng = rng::stream(seed, tag, index);
        let mut out = Array2::zeros((n, self.p()));
        for mut row in out.rows_mut() {
            self.sample_into(&mut rng, row.as_slice_mut().expect("contiguous"));
        }
        out
    }
}

/// Uniform distribution on the union of two `p`-balls of equal radius centered at
/// `a₁ = 0` and `a₂ = (1,…,1, 0,…,0)` (ones on the first `r` coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBallModel {
    p: usize,
    r: usize,
    radius: f64,
}

impl TwoBallModel {
    /// Radius defaults to `√r / 2`, where the two balls touch.
    pub fn new(p: usize, r: usize) -> Result<Self> {
        Self::with_radius(p, r, (r as f64).sqrt() / 2.0)
    }

    pub fn with_radius(p: usize, r: usize, radius: f64) -> Result<Self> {
        if r == 0 || r > p {
            return Err(SkmError::InvalidArgument(format!("need 1 <= r <= p, got r = {r}, p = {p}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SkmError::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { p, r, radius })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Center of ball `k ∈ {0, 1}`.
    pub fn center(&self, k: usize) -> Array1<f64> {
        let mut c = Array1::zeros(self.p);
        if k == 1 {
            c.slice_mut(ndarray::s![..self.r]).fill(1.0);
        }
        c
    }

    pub fn centers(&self) -> Array2<f64> {
        ndarray::stack![ndarray::Axis(0), self.center(0), self.center(1)]
    }

    /// `n` draws as a dataset with declared bound `1 + radius`.
    pub fn sample<F: Scalar>(&self, n: usize, seed: u64) -> Result<Dataset<F>> {
        let rows = self.sample_rows(n, seed, "two-ball", 0);
        Dataset::with_bound(rows.mapv(F::lit), F::lit(1.0 + self.radius))
    }
}

/// Uniform point in the `p`-ball: normalized Gaussian direction, radius `R · U^{1/p}`.
pub fn uniform_in_ball(rng: &mut ChaCha8Rng, radius: f64, out: &mut [f64]) {
    let p = out.len();
    let mut norm_sq = 0.0;
    while norm_sq == 0.0 {
        norm_sq = 0.0;
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
            norm_sq += *v * *v;
        }
    }
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / p as f64) / norm_sq.sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
}

impl PointModel for TwoBallModel {
    fn p(&self) -> usize {
        self.p
    }

    fn mean(&self) -> Array1<f64> {
        let mut m = Array1::zeros(self.p);
        m.slice_mut(ndarray::s![..self.r]).fill(0.5);
        m
    }

    fn bound(&self) -> Option<f64> {
        Some(1.0 + self.radius)
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> usize {
        let ball = usize::from(rng.random_bool(0.5));
        uniform_in_ball(rng, self.radius, out);
        if ball == 1 {
            out[..self.r].iter_mut().for_each(|v| *v += 1.0);
        }
        ball
    }
}

/// `½ N(0, σ²I) + ½ N(μ₂, σ²I)` with `μ₂ = (δ,…,δ, 0,…,0)` on the first `r` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussMixModel {
    p: usize,
    r: usize,
    delta: f64,
    sigma: f64,
}

impl GaussMixModel {
    pub fn new(p: usize, r: usize, delta: f64, sigma: f64) -> Result<Self> {
        if r == 0 || r > p {
            return Err(SkmError::InvalidArgument(format!("need 1 <= r <= p, got r = {r}, p = {p}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(SkmError::InvalidArgument(format!(
                "need delta >= 0 and sigma > 0, got delta = {delta}, sigma = {sigma}"
            )));
        }
        Ok(Self { p, r, delta, sigma })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn component_mean(&self, k: usize) -> Array1<f64> {
        let mut c = Array1::zeros(self.p);
        if k == 1 {
            c.slice_mut(ndarray::s![..self.r]).fill(self.delta);
        }
        c
    }

    /// `n` draws; the support is unbounded so no coordinate bound is declared.
    pub fn sample<F: Scalar>(&self, n: usize, seed: u64) -> Result<Dataset<F>> {
        let rows = self.sample_rows(n, seed, "gauss-mix", 0);
        Dataset::new(rows.mapv(F::lit))
    }
}

impl PointModel for GaussMixModel {
    fn p(&self) -> usize {
        self.p
    }

    fn mean(&self) -> Array1<f64> {
        let mut m = Array1::zeros(self.p);
        m.slice_mut(ndarray::s![..self.r]).fill(self.delta / 2.0);
        m
    }

    fn bound(&self) -> Option<f64> {
        None
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) -> usize {
        let comp = usize::from(rng.random_bool(0.5));
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = self.sigma * z;
        }
        if comp == 1 {
            out[..self.r].iter_mut().for_each(|v| *v += self.delta);
        }
        comp
    }
}

pub fn sample_two_ball<F: Scalar>(model: &TwoBallModel, n: usize, seed: u64) -> Result<Dataset<F>> {
    model.sample(n, seed)
}

pub fn sample_gauss_mix<F: Scalar>(model: &GaussMixModel, n: usize, seed: u64) -> Result<Dataset<F>> {
    model.sample(n, seed)
}

/// Closed-form `μ = E[X]`.
pub fn population_mean<M: PointModel + ?Sized>(model: &M) -> Array1<f64> {
    model.mean()
}

/// Stationary parameter of the two-ball model: `w = 𝟙_r / √r`, `A = {a₁, a₂}`.
///
/// The weight is the unit-norm member of the `α𝟙_r` family, so it sits on the
/// boundary `‖w‖₂ = 1` and needs `s >= √r`; its recorded budget is `√r`.
pub fn reference_theta<F: Scalar>(model: &TwoBallModel) -> Theta<F> {
    let r = model.r();
    let mut w = Array1::zeros(model.p());
    if r == 1 {
        w[0] = F::one();
    } else {
        let v = F::one() / F::from_count(r).sqrt();
        w.slice_mut(ndarray::s![..r]).fill(v);
    }
    let s = F::from_count(r).sqrt();
    let weights = WeightVector::new(w, s).expect("unit-norm block weight is feasible at s = √r");
    let centers = CentroidSet::new(model.centers().mapv(F::lit)).expect("finite centers");
    Theta::euclidean(weights, centers).expect("matching dimensions")
}

/// Finite distribution over `m` atoms with per-feature dissimilarity tables.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomModel {
    probs: Vec<f64>,
    // shape (p, m, m)
    tables: Array3<f64>,
    bound: f64,
}

impl AtomModel {
    pub fn new(probs: Vec<f64>, tables: Array3<f64>) -> Result<Self> {
        let (p, m, m2) = tables.dim();
        if m != m2 || m != probs.len() || m == 0 {
            return Err(SkmError::InvalidArgument(format!("tables must be p x m x m with m = {} atoms", probs.len())));
        }
        if probs.iter().any(|&q| q < 0.0 || !q.is_finite()) {
            return Err(SkmError::InvalidArgument("atom probabilities must be >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SkmError::InvalidArgument(format!("atom probabilities sum to {total}, not 1")));
        }
        let bound = tables.iter().fold(0.0f64, |b, &v| b.max(v));
        // reuse tensor validation for symmetry / zero diagonal
        DissimilarityTensor::new(tables.clone(), bound)?;
        let _ = p;
        Ok(Self { probs, tables, bound })
    }

    /// Atoms are points in `ℝᵖ` and `d_j` is the squared coordinate difference.
    pub fn from_points(points: &[Vec<f64>], probs: Vec<f64>) -> Result<Self> {
        let m = points.len();
        let p = points.first().map_or(0, Vec::len);
        let mut tables = Array3::zeros((p, m, m));
        for j in 0..p {
            for a in 0..m {
                for b in 0..m {
                    let diff = points[a][j] - points[b][j];
                    tables[[j, a, b]] = diff * diff;
                }
            }
        }
        Self::new(probs, tables)
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn p(&self) -> usize {
        self.tables.dim().0
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `d_j(atom a, atom b)`.
    pub fn table(&self, j: usize, a: usize, b: usize) -> f64 {
        self.tables[[j, a, b]]
    }

    /// Diameter bound `M`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `n` i.i.d. atom indices.
    pub fn sample_atoms(&self, n: usize, seed: u64) -> Vec<usize> {
        let mut rng = rng::stream(seed, "atoms", 0);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, &q) in self.probs.iter().enumerate() {
                    acc += q;
                    if u < acc {
                        return a;
                    }
                }
                self.probs.iter().rposition(|&q| q > 0.0).unwrap_or(0)
            })
            .collect()
    }

    /// Dissimilarity tensor of a sample given as atom indices.
    pub fn tensor<F: Scalar>(&self, atoms: &[usize]) -> Result<DissimilarityTensor<F>> {
        DissimilarityTensor::from_fn(atoms.len(), self.p(), F::lit(self.bound), |j, i, i2| {
            F::lit(self.tables[[j, atoms[i], atoms[i2]]])
        })
    }
}
