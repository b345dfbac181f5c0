//! Weight step: maximize `Σ_j w_j b_j` over `{w ≥ 0, ‖w‖₂² ≤ 1, ‖w‖₁ ≤ s}`.
//!
//! The maximizer is `w = ST(b₊, Δ) / ‖ST(b₊, Δ)‖₂`, with `ST` coordinatewise
//! soft-thresholding and `Δ ≥ 0` the smallest threshold giving `‖w‖₁ ≤ s`.
//! When `s` is below `√m` (`m` = number of coordinates attaining `max b`),
//! no threshold reaches the budget; the L2 constraint is then slack and the
//! budget is spread evenly over the maximal coordinates.

use ndarray::Array1;

use crate::error::{Result, SkmError};
use crate::scalar::Scalar;
use crate::types::WeightVector;

const MAX_BISECTION_ITERS: usize = 200;
const BISECTION_WIDTH: f64 = 1e-12;

/// Per-feature gains `b_j` of the linear weight subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector<F>(Vec<F>);

impl<F: Scalar> GainVector<F> {
    pub fn new(b: Vec<F>) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(SkmError::NonFinite("gain vector"));
        }
        Ok(Self(b))
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: F) -> Self {
        Self(self.0.iter().map(|&v| v * c).collect())
    }

    pub fn into_vec(self) -> Vec<F> {
        self.0
    }
}

/// How the weight step was resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionTrace<F> {
    /// Soft-threshold level `Δ`; `max b` when the budget is spread over ties.
    pub threshold: F,
    pub iterations: usize,
    /// `(Δ, ‖w(Δ)‖₁)` at every bisection probe, in probe order.
    pub probes: Vec<(F, F)>,
    /// True when the L2 constraint is slack at the optimum.
    pub l2_slack: bool,
}

fn soft_threshold<F: Scalar>(b: &[F], delta: F) -> Vec<F> {
    b.iter().map(|&v| (v - delta).max(F::zero())).collect()
}

fn normalized<F: Scalar>(v: Vec<F>) -> Vec<F> {
    let norm = v.iter().map(|&x| x * x).sum::<F>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn l1_after_threshold<F: Scalar>(b: &[F], delta: F) -> F {
    let st = soft_threshold(b, delta);
    let l2 = st.iter().map(|&x| x * x).sum::<F>().sqrt();
    st.iter().copied().sum::<F>() / l2
}

fn solve<F: Scalar>(gains: &GainVector<F>, s: F) -> Result<(WeightVector<F>, BisectionTrace<F>)> {
    if !s.is_finite() || s < F::zero() {
        return Err(SkmError::InvalidSparsity(s.as_f64()));
    }
    let b = gains.as_slice();
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SkmError::NonFinite("gain vector"));
    }
    let p = b.len();
    let pos: Vec<F> = b.iter().map(|&v| v.max(F::zero())).collect();
    let bmax = pos.iter().fold(F::zero(), |m, &v| m.max(v));
    let mut trace = BisectionTrace { threshold: F::zero(), iterations: 0, probes: Vec::new(), l2_slack: false };
    if bmax == F::zero() || s == F::zero() {
        trace.l2_slack = true;
        return Ok((WeightVector::zeros(p, s), trace));
    }

    let at_zero = l1_after_threshold(&pos, F::zero());
    if at_zero <= s {
        let w = normalized(pos);
        return Ok((WeightVector::from_parts(Array1::from(w), s), trace));
    }

    let ties = pos.iter().filter(|&&v| v == bmax).count();
    let tie_l1 = F::from_count(ties).sqrt();
    let spread = |trace: BisectionTrace<F>| {
        // ‖w‖₁ cannot drop below √ties; put s/ties on every maximal coordinate.
        let share = (s / F::from_count(ties)).min(F::one() / tie_l1);
        let w = pos.iter().map(|&v| if v == bmax { share } else { F::zero() }).collect::<Vec<_>>();
        let l2_slack = s < tie_l1;
        (WeightVector::from_parts(Array1::from(w), s), BisectionTrace { threshold: bmax, l2_slack, ..trace })
    };
    if s <= tie_l1 {
        return Ok(spread(trace));
    }

    // ‖w(Δ)‖₁ is nonincreasing on [0, bmax): lo keeps ‖w‖₁ > s, hi keeps ‖w‖₁ ≤ s.
    let (mut lo, mut hi) = (F::zero(), bmax);
    let width = F::lit(BISECTION_WIDTH);
    while trace.iterations < MAX_BISECTION_ITERS && hi - lo > width {
        let mid = (lo + hi) / F::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        trace.iterations += 1;
        let l1 = l1_after_threshold(&pos, mid);
        trace.probes.push((mid, l1));
        if l1 > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi >= bmax {
        return Ok(spread(trace));
    }
    trace.threshold = hi;
    let w = normalized(soft_threshold(&pos, hi));
    Ok((WeightVector::from_parts(Array1::from(w), s), trace))
}

/// Exact maximizer of the linear weight subproblem.
pub fn solve_weights<F: Scalar>(gains: &GainVector<F>, s: F) -> Result<WeightVector<F>> {
    solve(gains, s).map(|(w, _)| w)
}

/// Threshold and bisection diagnostics for [`solve_weights`].
pub fn bisection_trace<F: Scalar>(gains: &GainVector<F>, s: F) -> Result<BisectionTrace<F>> {
    solve(gains, s).map(|(_, t)| t)
}
