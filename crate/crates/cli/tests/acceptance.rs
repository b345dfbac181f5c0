//! Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.
//! Tests hold a shared lock so their wall-clock budgets are measured without contention.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use ndarray::Array3;
use rand::Rng;
use skm_core::{
    empirical_risk_general, exhaustive_joint_oracle, exhaustive_partition_oracle, fit_general, objective_general,
    reference_theta, rng, solve_weights, DissimilarityTensor, GainVector, GeneralFitOptions, Theta, TwoBallModel,
};
use skm_lab::{lloyd_displacement, thm4_bound, Thm4Inputs};
use skmlab::commands::{self, Command, Ctx, StarReport, StationaritySummary};
use skmlab::Config;

#[path = "../../core/tests/support/weight_grid.rs"]
mod weight_grid;

static SERIAL: Mutex<()> = Mutex::new(());

fn config(rel: &str) -> Config {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(rel);
    Config::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn ctx(cfg: &Config, command: Command) -> Ctx<'_> {
    Ctx { cfg, seed: None, command }
}

/// Print the criterion line, then fail the test if it did not pass.
fn report(id: u32, name: &str, passed: bool, elapsed: Duration, budget_s: u64, detail: String) {
    let in_time = elapsed.as_secs() <= budget_s;
    let ok = passed && in_time;
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id:>2} [{name}]: {verdict} ({detail}; {:.1}s of {budget_s}s)",
        elapsed.as_secs_f64()
    );
    assert!(passed, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its {budget_s}s budget");
}

#[test]
fn criterion_01_objective_identity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let cfg = config("equiv_check.json");
    let run = commands::equiv_check(&ctx(&cfg, Command::EquivCheck)).unwrap();
    let r = &run.output.result;
    let e = &run.output.config.experiment.params;
    let sized = e.instances == 100
        && e.n_max <= 50
        && e.p_max <= 10
        && e.k_max <= 4
        && e.exhaustive_instances == 20
        && e.exhaustive_n_max <= 10
        && e.tol <= 1e-9;
    let passed = sized
        && r.identity_failures == 0
        && r.argmax_disagreements == 0
        && r.instances == 120
        && r.exhaustive_instances == 20;
    report(
        1,
        "objective identity",
        passed,
        t0.elapsed(),
        60,
        format!(
            "{} identity instances, worst rel err {:.2e}; {} exhaustive argmax disagreements of {}",
            r.instances, r.max_identity_rel_err, r.argmax_disagreements, r.exhaustive_instances
        ),
    );
}

#[test]
fn criterion_02_weight_solver_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let mut rng = rng::stream(2, "acceptance-weights", 0);
    let (mut worst_gap, mut worst_infeas, mut failures) = (0.0f64, 0.0f64, 0);
    for case in 0..200 {
        let p = 2 + case % 2;
        let b: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..3.0)).collect();
        let s = rng.random_range(0.3..2.0);
        let w = solve_weights(&GainVector::new(b.clone()).unwrap(), s).unwrap();
        let infeas = [w.l2_sq() - 1.0, w.l1() - s, -w.as_slice().iter().copied().fold(f64::INFINITY, f64::min)]
            .into_iter()
            .fold(0.0, f64::max);
        let gap = (w.dot(&b) - weight_grid::grid_oracle(&b, s)).abs();
        worst_gap = worst_gap.max(gap);
        worst_infeas = worst_infeas.max(infeas);
        failures += usize::from(gap > 1e-6 || infeas > 1e-9);
    }
    report(
        2,
        "weight solver vs grid oracle",
        failures == 0,
        t0.elapsed(),
        60,
        format!("200 cases, worst |solver - grid| {worst_gap:.2e}, worst infeasibility {worst_infeas:.2e}"),
    );
}

#[test]
fn criterion_03_risk_consistency() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let cfg = config("acceptance/risk_gap.json");
    let run = commands::risk_gap(&ctx(&cfg, Command::RiskGap)).unwrap();
    let r = &run.output.result;
    let e = &run.output.config.experiment.params;
    let setup = e.n_grid == [50, 200, 800, 3200] && e.reps == 20 && e.t == 0.05;
    let within = r.within_bound_fraction.unwrap_or(0.0);
    let passed = setup && r.strictly_decreasing && r.final_ratio <= 0.2 && within >= 0.85;
    let medians: Vec<String> = r.summary.iter().map(|s| format!("{:.2e}", s.median)).collect();
    let source = match &r.theta_star {
        StarReport::Point(t) => t.source,
        StarReport::Atoms(_) => "atoms",
    };
    report(
        3,
        "risk consistency",
        passed,
        t0.elapsed(),
        600,
        format!(
            "medians [{}], decreasing {}, final/first {:.3}, within bound {:.0}%, theta* from {source}",
            medians.join(", "),
            r.strictly_decreasing,
            r.final_ratio,
            100.0 * within
        ),
    );
}

#[test]
fn criterion_04_rademacher_bound() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let cfg = config("acceptance/rademacher.json");
    let run = commands::rademacher(&ctx(&cfg, Command::Rademacher)).unwrap();
    let r = &run.output.result;
    let setup = r.n == 100 && r.estimate.n_draws == 1000;
    report(
        4,
        "Rademacher estimate under bound",
        setup && r.within_bound,
        t0.elapsed(),
        300,
        format!("estimate {:.4} (se {:.4}) vs bound {:.4}", r.estimate.value, r.estimate.std_error, r.bound),
    );
}

#[test]
fn criterion_05_stationarity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let cfg = config("acceptance/stationarity.json");
    let run = commands::stationarity(&ctx(&cfg, Command::Stationarity)).unwrap();
    let StationaritySummary::TwoBall(r) = &run.output.result else { panic!("two-ball config expected") };
    let setup = r.centroid.n_perturb == 200 && r.lloyd.n_mc == 1_000_000;
    let passed = setup && r.centroid.passed && r.weight.passed && r.lloyd.fixed() && r.passed;
    report(
        5,
        "two-ball stationarity",
        passed,
        t0.elapsed(),
        300,
        format!(
            "centroid worst z {:.2}, weight worst diff {:.1e} (se {:.1e}, floor {:.1e}), Lloyd displacement {:.1e} (se {:.1e})",
            r.centroid.worst_z, r.weight.worst_diff, r.weight.worst_se, r.rounding_floor, r.lloyd.displacement, r.lloyd.std_error
        ),
    );
}

#[test]
fn criterion_06_gaussian_counterexample() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let cfg = config("acceptance/stationarity_gauss.json");
    let run = commands::stationarity(&ctx(&cfg, Command::Stationarity)).unwrap();
    let StationaritySummary::GaussMix { lloyd: g, moved } = &run.output.result else {
        panic!("gauss_mix config expected")
    };
    let model = TwoBallModel::new(4, 2).unwrap();
    let t: Theta<f64> = reference_theta(&model);
    let b = lloyd_displacement(&model, t.centers().unwrap(), &t.weights, 1_000_000, 6).unwrap();
    let passed = g.n_mc == 1_000_000 && *moved && b.fixed();
    report(
        6,
        "Gaussian counterexample",
        passed,
        t0.elapsed(),
        180,
        format!(
            "Gaussian displacement {:.4} (se {:.1e}); two-ball displacement {:.1e} (se {:.1e})",
            g.displacement, g.std_error, b.displacement, b.std_error
        ),
    );
}

fn random_tensor(seed: u64, index: u64, n: usize, p: usize) -> DissimilarityTensor<f64> {
    let mut rng = rng::stream(seed, "acceptance-tensor", index);
    let mut d = Array3::zeros((p, n, n));
    for j in 0..p {
        for i in 0..n {
            for i2 in i + 1..n {
                let v: f64 = rng.random();
                d[[j, i, i2]] = v;
                d[[j, i2, i]] = v;
            }
        }
    }
    DissimilarityTensor::new(d, 1.0).unwrap()
}

/// Hand evaluation of the general bound, term by term.
fn general_bound_by_hand(x: &Thm4Inputs) -> ([f64; 3], bool) {
    let l = (2.0 / x.n as f64 * (1.0 / x.t).ln()).sqrt();
    let k = x.k as f64;
    let mean = 2.0 * x.s * x.m * l;
    let cell = 4.0 * x.s * k * x.m / (x.delta * x.delta) * (2.0 * x.rc + l);
    let pair = 2.0 * x.s * k / x.delta * (2.0 * x.rcj_max + x.m * l);
    ([mean, cell, pair], 2.0 * x.rc + l <= x.delta / 2.0)
}

#[test]
fn criterion_07_general_dissimilarity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let (mut matched, mut joint_matched, mut worst_identity) = (0, 0, 0.0f64);
    for i in 0..50 {
        let d = random_tensor(7, i, 10, 3);
        let opts = GeneralFitOptions { n_starts: 20, seed: i, ..GeneralFitOptions::default() };
        let f = fit_general(&d, 2, 1.5, &opts).unwrap();
        let (_, best) = exhaustive_partition_oracle(&d, &f.theta.weights, 2).unwrap();
        let (_, joint) = exhaustive_joint_oracle(&d, 1.5, 2).unwrap();
        matched += usize::from((best - f.objective).abs() <= 1e-9 * best.abs());
        joint_matched += usize::from((joint - f.objective).abs() <= 1e-9 * joint.abs());
        let obj = objective_general(&d, f.partition(), &f.theta.weights).unwrap();
        let risk = empirical_risk_general(&d, f.partition(), &f.theta.weights).unwrap();
        worst_identity = worst_identity.max((9.0 * risk + obj).abs() / obj.abs());
    }

    let cfg = config("acceptance/risk_gap_atoms.json");
    let run = commands::risk_gap(&ctx(&cfg, Command::RiskGap)).unwrap();
    let r = &run.output.result;
    let StarReport::Atoms(star) = &r.theta_star else { panic!("atom config expected") };
    let gap_ok = r.summary.len() == 2 && r.summary[0].n == 100 && r.summary[1].n == 2000 && r.final_ratio <= 0.25;

    let cases = [
        Thm4Inputs { s: 1.0, m: 1.0, k: 1, delta: 1.0, t: 0.1, n: 8, rc: 0.0, rcj_max: 0.0 },
        Thm4Inputs { s: 1.0, m: 1.0, k: 1, delta: 0.5, t: 0.1, n: 8, rc: 0.0, rcj_max: 0.0 },
        Thm4Inputs { s: 1.5, m: 2.0, k: 3, delta: 0.25, t: 0.05, n: 100_000, rc: 0.01, rcj_max: 0.02 },
        Thm4Inputs {
            s: 1.0,
            m: star.min_cell_mass.max(1.0),
            k: 2,
            delta: star.min_cell_mass,
            t: 0.05,
            n: 2000,
            rc: 0.05,
            rcj_max: 0.05,
        },
    ];
    let mut arith_err = 0.0f64;
    let mut flags_ok = true;
    for x in &cases {
        let b = thm4_bound(x);
        let (parts, feasible) = general_bound_by_hand(x);
        flags_ok &= b.feasible == feasible && b.confidence_label == "1-4pt";
        for (name, want) in ["mean", "cell_mass", "pair"].into_iter().zip(parts) {
            arith_err = arith_err.max((b.component(name).unwrap() - want).abs() / want.abs());
        }
        let total: f64 = parts.iter().sum();
        arith_err = arith_err.max((b.bound_total - total).abs() / total.abs());
    }
    flags_ok &= !thm4_bound(&cases[0]).feasible && thm4_bound(&cases[2]).feasible;

    let passed = matched >= 45 && worst_identity <= 1e-12 && gap_ok && arith_err <= 1e-12 && flags_ok;
    report(
        7,
        "general dissimilarity suite",
        passed,
        t0.elapsed(),
        600,
        format!(
            "oracle value matched {matched}/50 (joint optimum {joint_matched}/50), scaling rel err {worst_identity:.1e}, \
             atom gap medians {:.2e} -> {:.2e} (ratio {:.3}, delta {}), bound arithmetic rel err {arith_err:.1e}",
            r.summary[0].median, r.summary[1].median, r.final_ratio, star.min_cell_mass
        ),
    );
}

#[test]
fn criterion_08_inequality_audits() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let cfg = config("acceptance/concentration.json");
    let run = commands::concentration(&ctx(&cfg, Command::Concentration)).unwrap();
    let r = &run.output.result;
    let audits = [&r.peter_paul, &r.set_peter_paul, &r.hausdorff_split];
    let setup = audits.iter().all(|a| a.cases == 100_000) && r.coverage.reps == 1000 && r.coverage.t == 0.05;
    let violations: usize = audits.iter().map(|a| a.violations).sum();
    report(
        8,
        "inequality audits",
        setup && violations == 0 && r.coverage_ok,
        t0.elapsed(),
        180,
        format!("{violations} violations over 3 x 100000 cases, coverage {:.3}", r.coverage.coverage),
    );
}

#[test]
fn criterion_09_continuity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let cfg = config("acceptance/continuity.json");
    let run = commands::continuity(&ctx(&cfg, Command::Continuity)).unwrap();
    let r = &run.output.result;
    let radii: Vec<f64> = r.rows.iter().map(|row| row.radius).collect();
    let moduli: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row.modulus)).collect();
    report(
        9,
        "continuity modulus",
        radii == [0.5, 0.25, 0.125, 0.0625] && r.nonincreasing && r.halves,
        t0.elapsed(),
        300,
        format!("moduli [{}] at radii {radii:?}", moduli.join(", ")),
    );
}

fn run_all(dir: &Path, threads: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut files = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(&configs)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    for cfg in entries {
        let stem = cfg.file_stem().unwrap().to_str().unwrap().to_owned();
        let sub = Command::ALL
            .iter()
            .map(|c| c.name())
            .filter(|name| stem.replace('_', "-").starts_with(name))
            .max_by_key(|name| name.len())
            .unwrap_or_else(|| panic!("no subcommand for {stem}"));
        let out = dir.join(&stem);
        let o = Proc::new(env!("CARGO_BIN_EXE_skmlab"))
            .args([sub, "--config", cfg.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap()])
            .env_remove("SKMLAB_OUT")
            .output()
            .unwrap();
        assert!(o.status.success(), "{sub} {stem}: {}", String::from_utf8_lossy(&o.stderr));
        let mut written: Vec<PathBuf> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        written.sort();
        for p in written {
            let rel = p.strip_prefix(dir).unwrap().to_path_buf();
            files.push((rel, fs::read(&p).unwrap()));
        }
    }
    files
}

#[test]
fn criterion_10_reproducibility() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let first = run_all(&tmp.path().join("a"), "1");
    let again = run_all(&tmp.path().join("b"), "1");
    let wide = run_all(&tmp.path().join("c"), "4");
    let subcommands: std::collections::BTreeSet<&str> = first
        .iter()
        .filter_map(|(p, _)| p.to_str())
        .filter(|p| p.ends_with("_summary.json"))
        .map(|p| p.split('/').next().unwrap())
        .collect();
    let differing: Vec<String> = first
        .iter()
        .zip(again.iter().zip(&wide))
        .filter(|((_, a), ((_, b), (_, c)))| a != b || a != c)
        .map(|((p, _), _)| p.display().to_string())
        .collect();
    let names_match = first.iter().map(|f| &f.0).eq(again.iter().map(|f| &f.0))
        && first.iter().map(|f| &f.0).eq(wide.iter().map(|f| &f.0));
    let covered = Command::ALL.iter().all(|c| subcommands.iter().any(|s| s.replace('_', "-").starts_with(c.name())));
    report(
        10,
        "reproducibility",
        names_match && differing.is_empty() && covered,
        t0.elapsed(),
        600,
        format!(
            "{} files from {} configs compared across two --threads 1 runs and one --threads 4 run; {} differ",
            first.len(),
            subcommands.len(),
            differing.len()
        ),
    );
}
