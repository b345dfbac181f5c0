//! Closed-form right-hand sides of the excess-risk bounds.

use serde::Serialize;
use skm_core::{Result, SkmError};

/// An evaluated bound with its itemized terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_total: f64,
    /// Named terms in the order they appear in the bound; they sum to `bound_total`.
    pub components: Vec<(&'static str, f64)>,
    pub t: f64,
    /// Side condition of the bound; always true when there is none.
    pub feasible: bool,
    pub confidence_label: &'static str,
}

impl BoundReport {
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

/// `√(2/n) · s · M² · (√K + 5K)`.
pub fn rc_bound_euclid(s: f64, m: f64, k: usize, n: usize) -> f64 {
    let k = k as f64;
    (2.0 / n as f64).sqrt() * s * m * m * (k.sqrt() + 5.0 * k)
}

/// `4·RC + 8sM²√(2 log(1/t)/n) + 2sM² log(p/t)/n` with the Rademacher term bounded
/// by [`rc_bound_euclid`]. Holds with probability at least `1 − 3t`.
pub fn thm1_bound(s: f64, m: Option<f64>, k: usize, n: usize, p: usize, t: f64) -> Result<BoundReport> {
    let m = m.ok_or(SkmError::UnknownBound)?;
    if !(t > 0.0 && t < 1.0 / 3.0) {
        return Err(SkmError::InvalidArgument(format!("confidence parameter must lie in (0, 1/3), got {t}")));
    }
    if !(m.is_finite() && m > 0.0) || s < 0.0 || n == 0 || p == 0 || k == 0 {
        return Err(SkmError::InvalidArgument(format!(
            "bound needs M > 0, s >= 0 and positive n, p, K (M = {m}, s = {s}, n = {n}, p = {p}, K = {k})"
        )));
    }
    let nf = n as f64;
    let sm2 = s * m * m;
    let rc = 4.0 * rc_bound_euclid(s, m, k, n);
    let hoeffding = 8.0 * sm2 * (2.0 * (1.0 / t).ln() / nf).sqrt();
    let mean_shift = 2.0 * sm2 * (p as f64 / t).ln() / nf;
    Ok(BoundReport {
        bound_total: rc + hoeffding + mean_shift,
        components: vec![("rc", rc), ("hoeffding", hoeffding), ("mean_shift", mean_shift)],
        t,
        feasible: true,
        confidence_label: "1-3t",
    })
}

/// Inputs of the general-dissimilarity bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm4Inputs {
    pub s: f64,
    /// Dissimilarity bound `M`.
    pub m: f64,
    pub k: usize,
    /// Minimum cell mass `δ`.
    pub delta: f64,
    pub t: f64,
    pub n: usize,
    pub rc: f64,
    pub rcj_max: f64,
}

/// With `L = √((2/n) log(1/t))`:
/// `2sM·L + (4sKM/δ²)(2RC + L) + (2sK/δ)(2RC_j + M·L)`,
/// valid when `2RC + L <= δ/2`. An unmet side condition is reported, not raised.
pub fn thm4_bound(x: &Thm4Inputs) -> BoundReport {
    let k = x.k as f64;
    let l = ((2.0 / x.n as f64) * (1.0 / x.t).ln()).sqrt();
    let mean_term = 2.0 * x.s * x.m * l;
    let cell_term = 4.0 * x.s * k * x.m / (x.delta * x.delta) * (2.0 * x.rc + l);
    let pair_term = 2.0 * x.s * k / x.delta * (2.0 * x.rcj_max + x.m * l);
    BoundReport {
        bound_total: mean_term + cell_term + pair_term,
        components: vec![("mean", mean_term), ("cell_mass", cell_term), ("pair", pair_term)],
        t: x.t,
        feasible: 2.0 * x.rc + l <= x.delta / 2.0,
        confidence_label: "1-4pt",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn rc_bound_arithmetic() {
        assert!(close(rc_bound_euclid(1.0, 1.0, 2, 2), 2f64.sqrt() + 10.0));
        let base = rc_bound_euclid(1.3, 0.7, 3, 50);
        assert!(close(rc_bound_euclid(1.3, 0.7, 3, 200), base / 2.0));
        assert!(close(rc_bound_euclid(2.6, 0.7, 3, 50), 2.0 * base));
    }

    #[test]
    fn euclidean_bound_arithmetic() {
        let r = thm1_bound(1.0, Some(1.0), 1, 8, 2, 0.1).unwrap();
        // √(1/4)·6 = 3, times 4
        assert!(close(r.component("rc").unwrap(), 12.0));
        assert!(close(r.component("hoeffding").unwrap(), 8.0 * (10f64.ln() / 4.0).sqrt()));
        assert!(close(r.component("mean_shift").unwrap(), 2.0 * 20f64.ln() / 8.0));
        assert!((r.bound_total - 18.818).abs() < 1e-3);
        assert_eq!(r.confidence_label, "1-3t");
    }

    #[test]
    fn euclidean_bound_monotonicity() {
        let at = |t: f64| thm1_bound(1.0, Some(1.0), 2, 100, 5, t).unwrap().bound_total;
        assert!(at(0.01) > at(0.1));
        let a = thm1_bound(1.0, Some(1.0), 2, 100, 5, 0.1).unwrap();
        let b = thm1_bound(1.0, Some(1.0), 2, 100, 25, 0.1).unwrap();
        assert!(close(a.component("rc").unwrap(), b.component("rc").unwrap()));
        assert!(close(
            b.component("mean_shift").unwrap() - a.component("mean_shift").unwrap(),
            2.0 * 5f64.ln() / 100.0
        ));
        for (s, m, n) in [(1.0, 1.0, 100), (1.5, 1.0, 100), (1.0, 1.2, 100), (1.0, 1.0, 80)] {
            let lo = thm1_bound(s, Some(m), 2, n, 5, 0.1).unwrap().bound_total;
            assert!(lo >= at(0.1) - 1e-12);
        }
    }

    #[test]
    fn euclidean_bound_refuses_bad_input() {
        assert_eq!(thm1_bound(1.0, None, 2, 10, 2, 0.1), Err(SkmError::UnknownBound));
        assert!(thm1_bound(1.0, Some(1.0), 2, 10, 2, 0.34).is_err());
        assert!(thm1_bound(1.0, Some(1.0), 2, 10, 2, 0.0).is_err());
    }

    #[test]
    fn general_bound_arithmetic() {
        let x = Thm4Inputs { s: 1.0, m: 1.0, k: 1, delta: 1.0, t: 0.1, n: 8, rc: 0.0, rcj_max: 0.0 };
        let r = thm4_bound(&x);
        let l = (10f64.ln() / 4.0).sqrt();
        assert!(close(r.component("mean").unwrap(), 2.0 * l));
        assert!(close(r.component("cell_mass").unwrap(), 4.0 * l));
        assert!(close(r.component("pair").unwrap(), 2.0 * l));
        assert!(close(r.bound_total, 8.0 * l));
        assert!((r.bound_total - 6.0697).abs() < 1e-4);
        // L ≈ 0.759 > δ/2
        assert!(!r.feasible);
        assert_eq!(r.confidence_label, "1-4pt");

        let half = thm4_bound(&Thm4Inputs { delta: 0.5, ..x });
        assert!(close(half.component("cell_mass").unwrap(), 4.0 * r.component("cell_mass").unwrap()));
        assert!(close(half.component("pair").unwrap(), 2.0 * r.component("pair").unwrap()));
    }

    #[test]
    fn general_bound_feasibility_flag() {
        let base = Thm4Inputs { s: 1.0, m: 1.0, k: 2, delta: 0.5, t: 0.1, n: 10_000, rc: 0.05, rcj_max: 0.01 };
        // L ≈ 0.0215, 2RC + L ≈ 0.1215 <= 0.25
        assert!(thm4_bound(&base).feasible);
        assert!(!thm4_bound(&Thm4Inputs { rc: 0.12, ..base }).feasible);
    }
}
