//! Monte Carlo experiments around sparse K-means consistency: population risks,
//! excess-risk curves, Rademacher complexity estimates, closed-form bounds,
//! inequality audits and stationarity / continuity probes.

pub mod audits;
pub mod bounds;
pub mod mc;
pub mod probes;
pub mod rademacher;
pub mod risk;

pub use audits::{
    hoeffding_coverage, lemma5_check, peter_paul_check, set_peter_paul_check, AuditReport, CoverageReport,
};
pub use bounds::{rc_bound_euclid, thm1_bound, thm4_bound, BoundReport, Thm4Inputs};
pub use mc::MCEstimate;
pub use probes::{
    continuity_probe, gaussian_counterexample_check, lloyd_displacement, modulus_nonincreasing, repair_toward,
    verify_stationarity_two_ball, ContinuityConfig, ContinuityRow, DisplacementReport, PerturbCheck,
    StationarityConfig, StationarityReport, ROUNDING_RTOL,
};
pub use rademacher::{rc_mc_euclid, rc_mc_partition, rcj_mc, RcEuclidConfig};
pub use risk::{
    atom_risk_gap_experiment, atom_theta_star, compare_risks, find_theta_star, population_gains,
    population_risk_general, population_risk_mc, quantile, risk_gap_experiment, AtomGapResult, AtomGapRow, AtomOptimum,
    GapSummary, RiskComparison, RiskGapConfig, RiskGapResult, RiskGapRow, ThetaStar,
};
