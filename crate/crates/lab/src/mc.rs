//! Chunked, seed-keyed Monte Carlo.
//!
//! Draws are split into fixed-size chunks; chunk `c` reads the stream
//! `(seed, tag, c)` and the chunk moments are merged in chunk order, so a
//! result depends only on `(seed, n_draws)` and never on the thread count.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use skm_core::{rng, Result, SkmError};

pub const CHUNK: usize = 8192;

/// Monte Carlo mean with its plug-in standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_draws: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// `value ± k·std_error` contains `target`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Running mean / sum of squared deviations for several outputs at once.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Moments {
    pub count: usize,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Moments {
    pub fn new(width: usize) -> Self {
        Self { count: 0, mean: vec![0.0; width], m2: vec![0.0; width] }
    }

    pub fn push(&mut self, xs: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn estimate(&self, i: usize, seed: u64) -> MCEstimate {
        let n = self.count as f64;
        let var = if self.count > 1 { self.m2[i] / (n - 1.0) } else { 0.0 };
        MCEstimate { value: self.mean[i], std_error: (var.max(0.0) / n).sqrt(), n_draws: self.count, seed }
    }
}

pub(crate) fn require_draws(n_draws: usize) -> Result<()> {
    if n_draws < 2 {
        return Err(SkmError::InvalidArgument(format!("Monte Carlo needs at least 2 draws, got {n_draws}")));
    }
    Ok(())
}

/// Run `n_draws` evaluations of `draw`, each writing `width` outputs.
/// `draw` receives the chunk's generator and must consume it deterministically.
pub(crate) fn run<G>(n_draws: usize, width: usize, seed: u64, tag: &str, draw: G) -> Moments
where
    G: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let chunks = n_draws.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, tag, c as u64);
            let len = CHUNK.min(n_draws - c * CHUNK);
            let mut m = Moments::new(width);
            let mut out = vec![0.0; width];
            for _ in 0..len {
                draw(&mut rng, &mut out);
                m.push(&out);
            }
            m
        })
        .collect();
    let mut total = Moments::new(width);
    parts.iter().for_each(|p| total.merge(p));
    total
}

/// Mean and standard error of independent per-task values, in index order.
pub(crate) fn summarize(values: &[f64], seed: u64) -> MCEstimate {
    let mut m = Moments::new(1);
    values.iter().for_each(|&v| m.push(&[v]));
    m.estimate(0, seed)
}
