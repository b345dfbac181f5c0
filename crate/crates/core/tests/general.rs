use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skm_core::{
    empirical_risk_general, exhaustive_joint_oracle, exhaustive_partition_oracle, fit_general, objective_general,
    objective_pairwise, voronoi_partition_family, Dataset, DissimilarityTensor, GeneralFitOptions, Partition,
    WeightVector,
};

fn random_tensor(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DissimilarityTensor<f64> {
    let mut vals = vec![0.0; p * n * n];
    for j in 0..p {
        for i in 0..n {
            for i2 in (i + 1)..n {
                let v = rng.random_range(0.0..1.0);
                vals[j * n * n + i * n + i2] = v;
                vals[j * n * n + i2 * n + i] = v;
            }
        }
    }
    DissimilarityTensor::from_fn(n, p, 1.0, |j, i, i2| vals[j * n * n + i * n + i2]).unwrap()
}

#[test]
fn fit_general_reaches_joint_optimum_mostly() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut hits = 0;
    for case in 0..15 {
        let d = random_tensor(&mut rng, 9, 3);
        let opts = GeneralFitOptions { seed: case, ..GeneralFitOptions::default() };
        let f = fit_general(&d, 2, 1.4, &opts).unwrap();
        let (_, best) = exhaustive_joint_oracle(&d, 1.4, 2).unwrap();
        assert!(f.objective <= best + 1e-9);
        if f.objective >= best - 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 13, "{hits}/15");
}

#[test]
fn partition_oracle_dominates_every_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let d = random_tensor(&mut rng, 6, 2);
    let w = WeightVector::new(vec![0.6, 0.8].into(), 1.4).unwrap();
    let (best_part, best) = exhaustive_partition_oracle(&d, &w, 2).unwrap();
    assert_eq!(objective_general(&d, &best_part, &w).unwrap(), best);
    for _ in 0..200 {
        let labels: Vec<usize> = (0..6).map(|_| rng.random_range(0..2)).collect();
        if let Ok(part) = Partition::checked(labels, 2) {
            assert!(objective_general(&d, &part, &w).unwrap() <= best);
        }
    }
}

#[test]
fn scaled_risk_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let n = rng.random_range(3..12);
        let d = random_tensor(&mut rng, n, 3);
        let w = WeightVector::new(vec![0.5, 0.5, 0.5].into(), 1.5).unwrap();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let part = Partition::new(labels, 2).unwrap();
        let obj = objective_general(&d, &part, &w).unwrap();
        let risk = empirical_risk_general(&d, &part, &w).unwrap();
        assert!((risk * (n as f64 - 1.0) + obj).abs() <= 1e-12 * obj.abs().max(1.0));
    }
}

#[test]
fn euclidean_tensor_reproduces_euclidean_objective_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let rows: Vec<Vec<f64>> = (0..10).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let x = Dataset::from_rows(&rows).unwrap();
    let d = DissimilarityTensor::squared_euclidean(&x);
    let part = Partition::new(vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0], 3).unwrap();
    let w = WeightVector::new(vec![0.3, 0.4, 0.5].into(), 1.2).unwrap();
    assert_eq!(objective_general(&d, &part, &w).unwrap(), objective_pairwise(&x, &part, &w).unwrap());
}

#[test]
fn voronoi_family_is_distinct_and_nonempty() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
    let x = Dataset::from_rows(&rows).unwrap();
    let fam = voronoi_partition_family(&x, 2, 50, 3).unwrap();
    assert!(!fam.is_empty());
    for (a, p) in fam.iter().enumerate() {
        assert!(p.first_empty().is_none());
        for q in &fam[a + 1..] {
            assert!(!p.same_clustering(q));
        }
    }
}
