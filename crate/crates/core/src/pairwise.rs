use crate::error::{Result, SkmError};
use crate::scalar::Scalar;
use crate::types::Partition;
use crate::weights::GainVector;

/// Per-feature bracket `(1/n) Σ_i Σ_i' d_{i,i',j} − Σ_k (1/n_k) Σ_{i,i' ∈ C_k} d_{i,i',j}`.
///
/// The Euclidean and general objectives both go through this loop so that
/// identical dissimilarities give identical bits.
pub(crate) fn pairwise_gains<F: Scalar>(
    part: &Partition,
    p: usize,
    d: impl Fn(usize, usize, usize) -> F,
) -> Result<GainVector<F>> {
    part.require_nonempty()?;
    let n = part.n();
    let k = part.k();
    let labels = part.labels();
    let sizes: Vec<F> = part.sizes().into_iter().map(F::from_count).collect();
    let nf = F::from_count(n);
    let mut gains = Vec::with_capacity(p);
    let mut within = vec![F::zero(); k];
    for j in 0..p {
        let mut total = F::zero();
        within.iter_mut().for_each(|v| *v = F::zero());
        for i in 0..n {
            let li = labels[i];
            for (i2, &l2) in labels.iter().enumerate() {
                let v = d(j, i, i2);
                total += v;
                if li == l2 {
                    within[li] += v;
                }
            }
        }
        let mut b = total / nf;
        for (w, &nk) in within.iter().zip(&sizes) {
            b -= *w / nk;
        }
        gains.push(b);
    }
    GainVector::new(gains)
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SkmError::DimensionMismatch { expected, found })
    }
}
