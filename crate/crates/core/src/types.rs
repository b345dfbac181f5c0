use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};

use crate::error::{Result, SkmError};
use crate::scalar::Scalar;

/// Slack allowed on the weight constraints; bisection output is never exactly on the boundary.
pub const TOL_FEAS: f64 = 1e-9;

/// `n x p` observation matrix with an optional declared coordinate bound `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    values: Array2<F>,
    bound: Option<F>,
}

impl<F: Scalar> Dataset<F> {
    /// Dataset without a declared bound.
    pub fn new(values: Array2<F>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SkmError::NonFinite("dataset"));
        }
        Ok(Self { values, bound: None })
    }

    /// Dataset whose entries must all satisfy `|x_ij| <= bound`.
    pub fn with_bound(values: Array2<F>, bound: F) -> Result<Self> {
        if !bound.is_finite() || bound < F::zero() {
            return Err(SkmError::InvalidArgument(format!(
                "coordinate bound must be finite and nonnegative, got {bound}"
            )));
        }
        let mut ds = Self::new(values)?;
        if let Some(((i, j), v)) = ds.values.indexed_iter().find(|(_, v)| v.abs() > bound) {
            return Err(SkmError::InvalidData(format!("entry ({i}, {j}) = {v} exceeds declared bound {bound}")));
        }
        ds.bound = Some(bound);
        Ok(ds)
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(SkmError::DimensionMismatch { expected: p, found: row.len() });
            }
            flat.extend_from_slice(row);
        }
        let values = Array2::from_shape_vec((rows.len(), p), flat).map_err(|e| SkmError::InvalidData(e.to_string()))?;
        Self::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn bound(&self) -> Option<F> {
        self.bound
    }

    pub fn values(&self) -> ArrayView2<'_, F> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, F> {
        self.values.row(i)
    }

    /// Column means `X̄`.
    pub fn mean(&self) -> Array1<F> {
        self.values.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(self.p()))
    }

    pub fn into_values(self) -> Array2<F> {
        self.values
    }
}

/// Feature weights `w` with the sparsity budget `s` they were solved under.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<F> {
    w: Array1<F>,
    s: F,
}

impl<F: Scalar> WeightVector<F> {
    /// Checked constructor: `w >= 0`, `‖w‖₂² <= 1`, `‖w‖₁ <= s`, all within [`TOL_FEAS`]
    /// (or a few ulps for `f32`).
    pub fn new(w: Array1<F>, s: F) -> Result<Self> {
        if !s.is_finite() || s < F::zero() {
            return Err(SkmError::InvalidSparsity(s.as_f64()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(SkmError::NonFinite("weights"));
        }
        let out = Self { w, s };
        if !out.is_feasible() {
            return Err(SkmError::InvalidArgument(format!(
                "weights infeasible: min = {}, ‖w‖₂² = {}, ‖w‖₁ = {}, s = {}",
                out.w.iter().fold(F::infinity(), |m, &v| m.min(v)),
                out.l2_sq(),
                out.l1(),
                s
            )));
        }
        Ok(out)
    }

    /// Unchecked constructor for values the solver has already certified.
    pub(crate) fn from_parts(w: Array1<F>, s: F) -> Self {
        Self { w, s }
    }

    pub fn zeros(p: usize, s: F) -> Self {
        Self { w: Array1::zeros(p), s }
    }

    /// `w_j = 1` for every `j`; used only as an unconstrained metric (e.g. plain Euclidean).
    pub fn unit(p: usize) -> Self {
        Self { w: Array1::from_elem(p, F::one()), s: F::from_count(p) }
    }

    pub fn p(&self) -> usize {
        self.w.len()
    }

    pub fn s(&self) -> F {
        self.s
    }

    pub fn as_array(&self) -> &Array1<F> {
        &self.w
    }

    pub fn as_slice(&self) -> &[F] {
        self.w.as_slice().expect("weights are contiguous")
    }

    pub fn l1(&self) -> F {
        self.w.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_sq(&self) -> F {
        self.w.iter().map(|&v| v * v).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|v| v.is_zero())
    }

    pub fn is_feasible(&self) -> bool {
        // f32 cannot resolve 1e-9 around 1
        let tol = F::lit(TOL_FEAS).max(F::epsilon() * F::lit(16.0));
        self.w.iter().all(|&v| v >= F::zero()) && self.l2_sq() <= F::one() + tol && self.l1() <= self.s + tol
    }

    /// Linear objective `Σ_j w_j b_j`.
    pub fn dot(&self, gains: &[F]) -> F {
        self.w.iter().zip(gains).map(|(&w, &b)| w * b).sum()
    }
}

/// Ordered list of `K` centers; set semantics only matter for Hausdorff and reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet<F> {
    centers: Array2<F>,
}

impl<F: Scalar> CentroidSet<F> {
    pub fn new(centers: Array2<F>) -> Result<Self> {
        if centers.nrows() == 0 {
            return Err(SkmError::EmptySet);
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(SkmError::NonFinite("centers"));
        }
        Ok(Self { centers })
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let ds = Dataset::from_rows(rows)?;
        Self::new(ds.into_values())
    }

    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    pub fn p(&self) -> usize {
        self.centers.ncols()
    }

    pub fn center(&self, k: usize) -> ArrayView1<'_, F> {
        self.centers.row(k)
    }

    pub fn centers(&self) -> ArrayView2<'_, F> {
        self.centers.view()
    }

    pub fn centers_mut(&mut self) -> &mut Array2<F> {
        &mut self.centers
    }

    /// True when two stored centers coincide exactly.
    pub fn has_duplicates(&self) -> bool {
        let k = self.k();
        (0..k).any(|a| (a + 1..k).any(|b| self.centers.row(a) == self.centers.row(b)))
    }
}

/// Assignment of `n` items to `K` clusters, labels `0..K` internally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Labels must be in range; clusters may be empty (see [`Partition::require_nonempty`]).
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(SkmError::InvalidArgument("K must be at least 1".into()));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(SkmError::LabelOutOfRange { label, k });
        }
        Ok(Self { labels, k })
    }

    /// Range-checked and every cluster nonempty.
    pub fn checked(labels: Vec<usize>, k: usize) -> Result<Self> {
        let part = Self::new(labels, k)?;
        part.require_nonempty()?;
        Ok(part)
    }

    pub(crate) fn from_raw(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l < k));
        Self { labels, k }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn first_empty(&self) -> Option<usize> {
        self.sizes().iter().position(|&c| c == 0)
    }

    pub fn require_nonempty(&self) -> Result<()> {
        match self.first_empty() {
            Some(k) => Err(SkmError::EmptyCluster(k)),
            None => Ok(()),
        }
    }

    pub fn members(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, &l)| l == k).map(|(i, _)| i)
    }

    /// Relabel clusters in order of first appearance; equal as set partitions iff canonical forms match.
    pub fn canonical(&self) -> Partition {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Partition { labels, k: self.k }
    }

    pub fn same_clustering(&self, other: &Partition) -> bool {
        self.k == other.k && self.canonical() == other.canonical()
    }
}

/// Per-feature pairwise dissimilarities `d[i, i', j]`, stored feature-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityTensor<F> {
    // shape (p, n, n)
    d: Array3<F>,
    bound: F,
}

impl<F: Scalar> DissimilarityTensor<F> {
    /// `d` has shape `(p, n, n)`; must be symmetric, zero on the diagonal and within `[0, bound]`.
    pub fn new(d: Array3<F>, bound: F) -> Result<Self> {
        if !bound.is_finite() || bound < F::zero() {
            return Err(SkmError::InvalidArgument(format!(
                "diameter bound must be finite and nonnegative, got {bound}"
            )));
        }
        let (p, n, n2) = d.dim();
        if n != n2 {
            return Err(SkmError::DimensionMismatch { expected: n, found: n2 });
        }
        for j in 0..p {
            for i in 0..n {
                if d[[j, i, i]] != F::zero() {
                    return Err(SkmError::InvalidData(format!(
                        "nonzero diagonal at item {}, feature {}",
                        i + 1,
                        j + 1
                    )));
                }
                for i2 in i + 1..n {
                    let v = d[[j, i, i2]];
                    if !v.is_finite() {
                        return Err(SkmError::NonFinite("dissimilarity tensor"));
                    }
                    if v != d[[j, i2, i]] {
                        return Err(SkmError::InvalidData(format!(
                            "asymmetric entry ({}, {}, {})",
                            i + 1,
                            i2 + 1,
                            j + 1
                        )));
                    }
                    if v < F::zero() || v > bound {
                        return Err(SkmError::InvalidData(format!(
                            "entry ({}, {}, {}) = {v} outside [0, {bound}]",
                            i + 1,
                            i2 + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(Self { d, bound })
    }

    /// Build from a per-feature dissimilarity function `f(j, i, i')` evaluated for `i < i'`.
    pub fn from_fn(n: usize, p: usize, bound: F, mut f: impl FnMut(usize, usize, usize) -> F) -> Result<Self> {
        let mut d = Array3::zeros((p, n, n));
        for j in 0..p {
            for i in 0..n {
                for i2 in i + 1..n {
                    let v = f(j, i, i2);
                    d[[j, i, i2]] = v;
                    d[[j, i2, i]] = v;
                }
            }
        }
        Self::new(d, bound)
    }

    /// Squared coordinate differences `(x_ij − x_i'j)²`; bound is the largest entry.
    pub fn squared_euclidean(data: &Dataset<F>) -> Self {
        let x = data.values();
        let (n, p) = x.dim();
        let mut d = Array3::zeros((p, n, n));
        let mut bound = F::zero();
        for j in 0..p {
            for i in 0..n {
                for i2 in i + 1..n {
                    let diff = x[[i, j]] - x[[i2, j]];
                    let v = diff * diff;
                    bound = bound.max(v);
                    d[[j, i, i2]] = v;
                    d[[j, i2, i]] = v;
                }
            }
        }
        Self { d, bound }
    }

    pub fn n(&self) -> usize {
        self.d.dim().1
    }

    pub fn p(&self) -> usize {
        self.d.dim().0
    }

    pub fn bound(&self) -> F {
        self.bound
    }

    #[inline]
    pub fn get(&self, i: usize, i2: usize, j: usize) -> F {
        self.d[[j, i, i2]]
    }

    /// `n x n` slice of feature `j`.
    pub fn feature(&self, j: usize) -> ArrayView2<'_, F> {
        self.d.index_axis(Axis(0), j)
    }

    /// `Σ_j w_j d[·, ·, j]` as a dense matrix.
    pub fn weighted(&self, w: &WeightVector<F>) -> Array2<F> {
        let n = self.n();
        let mut out = Array2::zeros((n, n));
        for (j, &wj) in w.as_slice().iter().enumerate() {
            if wj != F::zero() {
                out.scaled_add(wj, &self.feature(j));
            }
        }
        out
    }
}

/// Cluster structure of a parameter: centers in Euclidean mode, a partition in general mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure<F> {
    Centroids(CentroidSet<F>),
    Partition(Partition),
}

/// Parameter `θ = (w, structure)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta<F> {
    pub weights: WeightVector<F>,
    pub structure: Structure<F>,
}

impl<F: Scalar> Theta<F> {
    pub fn euclidean(weights: WeightVector<F>, centers: CentroidSet<F>) -> Result<Self> {
        if weights.p() != centers.p() {
            return Err(SkmError::DimensionMismatch { expected: weights.p(), found: centers.p() });
        }
        Ok(Self { weights, structure: Structure::Centroids(centers) })
    }

    pub fn general(weights: WeightVector<F>, partition: Partition) -> Self {
        Self { weights, structure: Structure::Partition(partition) }
    }

    pub fn centers(&self) -> Option<&CentroidSet<F>> {
        match &self.structure {
            Structure::Centroids(c) => Some(c),
            Structure::Partition(_) => None,
        }
    }

    pub fn partition(&self) -> Option<&Partition> {
        match &self.structure {
            Structure::Partition(p) => Some(p),
            Structure::Centroids(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dataset_rejects_out_of_bound_entries() {
        let x = array![[0.5, -2.0]];
        assert!(Dataset::with_bound(x.clone(), 1.0).is_err());
        assert!(Dataset::with_bound(x, 2.0).is_ok());
        assert!(Dataset::new(array![[f64::NAN]]).is_err());
    }

    #[test]
    fn weight_constraints() {
        assert!(WeightVector::new(array![0.6, 0.8], 1.4).is_ok());
        assert!(WeightVector::new(array![0.6, 0.8], 1.3).is_err());
        assert!(WeightVector::new(array![1.0, 0.1], 2.0).is_err());
        assert!(WeightVector::new(array![-0.1, 0.1], 2.0).is_err());
        assert!(WeightVector::new(array![0.5], -1.0).is_err());
        // within tolerance
        assert!(WeightVector::new(array![1.0 + 1e-10], 1.0).is_ok());
    }

    #[test]
    fn partition_validation_and_canonical_form() {
        assert!(Partition::new(vec![0, 2], 2).is_err());
        assert_eq!(Partition::checked(vec![0, 0], 2), Err(SkmError::EmptyCluster(1)));
        let a = Partition::checked(vec![1, 1, 0], 2).unwrap();
        let b = Partition::checked(vec![0, 0, 1], 2).unwrap();
        assert!(a.same_clustering(&b));
        assert_eq!(a.sizes(), vec![1, 2]);
        assert_eq!(a.members(1).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn tensor_validation() {
        let mut d = Array3::<f64>::zeros((1, 2, 2));
        d[[0, 0, 1]] = 1.0;
        assert!(DissimilarityTensor::new(d.clone(), 2.0).is_err());
        d[[0, 1, 0]] = 1.0;
        assert!(DissimilarityTensor::new(d.clone(), 2.0).is_ok());
        assert!(DissimilarityTensor::new(d.clone(), 0.5).is_err());
        d[[0, 0, 0]] = 0.1;
        assert!(DissimilarityTensor::new(d, 2.0).is_err());
    }

    #[test]
    fn centroid_duplicates_are_reported() {
        let c = CentroidSet::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(c.has_duplicates());
        let c = CentroidSet::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(!c.has_duplicates());
    }
}
