//! Weighted squared distances, Hausdorff distance and the parameter metric.

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Result, SkmError};
use crate::scalar::Scalar;
use crate::types::{Structure, Theta, WeightVector};

/// `Σ_j w_j (x_j − y_j)²` on raw slices; lengths must already agree.
#[inline]
pub fn wsq<F: Scalar>(x: &[F], y: &[F], w: &[F]) -> F {
    let mut acc = F::zero();
    for ((&a, &b), &wj) in x.iter().zip(y).zip(w) {
        let d = a - b;
        acc += wj * d * d;
    }
    acc
}

/// Weighted squared distance `‖x − y‖²_w`.
pub fn weighted_sqdist<F: Scalar>(x: ArrayView1<'_, F>, y: ArrayView1<'_, F>, w: &WeightVector<F>) -> Result<F> {
    check_dim(w.p(), x.len())?;
    check_dim(w.p(), y.len())?;
    Ok(x.iter().zip(y.iter()).zip(w.as_slice()).map(|((&a, &b), &wj)| wj * (a - b) * (a - b)).sum())
}

/// Nearest row of `set` to `x` under the weighted metric: `(index, squared distance)`.
/// Ties go to the lowest index.
pub fn nearest<F: Scalar>(x: &[F], set: ArrayView2<'_, F>, w: &[F]) -> (usize, F) {
    let mut best = (0, F::infinity());
    for (k, c) in set.rows().into_iter().enumerate() {
        let d = wsq(x, c.as_slice().expect("contiguous row"), w);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SkmError::DimensionMismatch { expected, found })
    }
}

fn resolve_weights<F: Scalar>(p: usize, w: Option<&WeightVector<F>>) -> Result<Vec<F>> {
    match w {
        Some(w) => {
            check_dim(p, w.p())?;
            Ok(w.as_slice().to_vec())
        }
        None => Ok(vec![F::one(); p]),
    }
}

/// `sup_{a ∈ A} d(a, B)`, unweighted Euclidean when `w` is `None`.
pub fn directed_hausdorff<F: Scalar>(
    a: ArrayView2<'_, F>,
    b: ArrayView2<'_, F>,
    w: Option<&WeightVector<F>>,
) -> Result<F> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(SkmError::EmptySet);
    }
    check_dim(a.ncols(), b.ncols())?;
    let w = resolve_weights(a.ncols(), w)?;
    let b = b.as_standard_layout();
    let mut worst = F::zero();
    for row in a.rows() {
        let row = row.to_vec();
        let (_, d) = nearest(&row, b.view(), &w);
        worst = worst.max(d);
    }
    Ok(worst.sqrt())
}

/// Hausdorff distance between two finite point sets (rows), the max of both directed distances.
pub fn hausdorff<F: Scalar>(a: ArrayView2<'_, F>, b: ArrayView2<'_, F>, w: Option<&WeightVector<F>>) -> Result<F> {
    Ok(directed_hausdorff(a, b, w)?.max(directed_hausdorff(b, a, w)?))
}

/// `max{‖w₁ − w₂‖₂, d_H(A₁, A₂)}` for two Euclidean-mode parameters.
pub fn theta_distance<F: Scalar>(t1: &Theta<F>, t2: &Theta<F>) -> Result<F> {
    let (Structure::Centroids(a1), Structure::Centroids(a2)) = (&t1.structure, &t2.structure) else {
        return Err(SkmError::ModeMismatch);
    };
    check_dim(t1.weights.p(), t2.weights.p())?;
    let dw =
        t1.weights.as_array().iter().zip(t2.weights.as_array()).map(|(&a, &b)| (a - b) * (a - b)).sum::<F>().sqrt();
    Ok(dw.max(hausdorff(a1.centers(), a2.centers(), None)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{CentroidSet, Partition};
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn w(v: &[f64]) -> WeightVector<f64> {
        WeightVector::new(ndarray::Array1::from(v.to_vec()), 10.0).unwrap()
    }

    #[test]
    fn sqdist_examples() {
        let x = array![0.3, -1.2];
        assert_eq!(weighted_sqdist(x.view(), x.view(), &w(&[0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(weighted_sqdist(array![1.0, 0.0].view(), array![0.0, 0.0].view(), &w(&[1.0, 0.0])).unwrap(), 1.0);
        // 0.5·1 + 0.5·4
        assert_eq!(weighted_sqdist(array![1.0, 2.0].view(), array![0.0, 0.0].view(), &w(&[0.5, 0.5])).unwrap(), 2.5);
        assert!(weighted_sqdist(array![1.0].view(), x.view(), &w(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = array![[1.0, 2.0]];
        assert_eq!(hausdorff(a.view(), a.view(), None).unwrap(), 0.0);
        assert_eq!(hausdorff(array![[0.0]].view(), array![[1.0]].view(), None).unwrap(), 1.0);
        // point-to-set distances: 0→{1}: 1, 2→{1}: 1, 1→{0,2}: 1
        assert_eq!(hausdorff(array![[0.0], [2.0]].view(), array![[1.0]].view(), None).unwrap(), 1.0);
        let empty = Array2::<f64>::zeros((0, 1));
        assert_eq!(hausdorff(empty.view(), array![[1.0]].view(), None), Err(SkmError::EmptySet));
    }

    #[test]
    fn directed_hausdorff_is_asymmetric() {
        let a = array![[0.0], [2.0]];
        let b = array![[0.0]];
        assert_eq!(directed_hausdorff(a.view(), b.view(), None).unwrap(), 2.0);
        assert_eq!(directed_hausdorff(b.view(), a.view(), None).unwrap(), 0.0);
    }

    fn theta(wv: &[f64], centers: &[Vec<f64>]) -> Theta<f64> {
        Theta::euclidean(w(wv), CentroidSet::from_rows(centers).unwrap()).unwrap()
    }

    #[test]
    fn theta_distance_examples() {
        let t = theta(&[0.6, 0.8], &[vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(theta_distance(&t, &t).unwrap(), 0.0);
        let t2 = theta(&[0.6, 0.5], &[vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert_relative_eq!(theta_distance(&t, &t2).unwrap(), 0.3, epsilon = 1e-15);
        let t3 = theta(&[0.6, 0.7], &[vec![0.0, 0.4], vec![1.0, 1.0]]);
        assert_relative_eq!(theta_distance(&t, &t3).unwrap(), 0.4, epsilon = 1e-15);
        let g = Theta::general(w(&[0.6, 0.8]), Partition::checked(vec![0, 1], 2).unwrap());
        assert_eq!(theta_distance(&t, &g), Err(SkmError::ModeMismatch));
    }

    fn point_set(max_pts: usize) -> impl Strategy<Value = Array2<f64>> {
        (1..=max_pts).prop_flat_map(|m| {
            proptest::collection::vec(-5.0..5.0f64, m * 2).prop_map(move |v| Array2::from_shape_vec((m, 2), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn hausdorff_metric_axioms(a in point_set(5), b in point_set(5), c in point_set(5)) {
            let ab = hausdorff(a.view(), b.view(), None).unwrap();
            let ba = hausdorff(b.view(), a.view(), None).unwrap();
            let bc = hausdorff(b.view(), c.view(), None).unwrap();
            let ac = hausdorff(a.view(), c.view(), None).unwrap();
            prop_assert_eq!(hausdorff(a.view(), a.view(), None).unwrap(), 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn sqdist_symmetric_and_monotone_in_weights(
            x in proptest::collection::vec(-3.0..3.0f64, 3),
            y in proptest::collection::vec(-3.0..3.0f64, 3),
            wv in proptest::collection::vec(0.0..0.5f64, 3),
            j in 0usize..3,
            bump in 0.0..0.1f64,
        ) {
            let (x, y) = (ndarray::Array1::from(x), ndarray::Array1::from(y));
            let wa = w(&wv);
            let mut wb = wv.clone();
            wb[j] += bump;
            let wb = w(&wb);
            let dxy = weighted_sqdist(x.view(), y.view(), &wa).unwrap();
            prop_assert_eq!(dxy, weighted_sqdist(y.view(), x.view(), &wa).unwrap());
            prop_assert!(dxy >= 0.0);
            prop_assert!(weighted_sqdist(x.view(), y.view(), &wb).unwrap() >= dxy);
        }
    }
}
