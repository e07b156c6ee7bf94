use std::fs;

use aakmeans::harness::{
    bench_compare, gen_synthetic, load_dataset, run, write_dataset_file, RunSpec, SolverKind,
    SynthKind, SynthParams,
};
use aakmeans::{AAConfig, EmptyClusterPolicy, Error, SeedKind};

fn mixture_file(dir: &tempfile::TempDir, name: &str, seed: u64) -> std::path::PathBuf {
    let synth = gen_synthetic(&SynthParams {
        kind: SynthKind::GaussianMixture,
        n: 600,
        dim: 3,
        components: 4,
        spread: 10.0,
        jitter: 1.0,
        seed,
    })
    .unwrap();
    let path = dir.path().join(name);
    write_dataset_file(&synth.data, &path).unwrap();
    path
}

#[test]
fn toy_run_with_file_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.txt");
    let init = dir.path().join("init.txt");
    fs::write(&data, "x\n0\n1\n4\n5\n").unwrap();
    fs::write(&init, "0\n5\n").unwrap();
    let spec = RunSpec::new(&data, 2, SolverKind::Lloyd, SeedKind::File(init));
    let recs = run(&spec).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].mse, 0.25);
    assert!(recs[0].converged);
    assert_eq!(recs[0].total_iters, 2);
    assert_eq!(recs[0].dataset, "toy");
}

#[test]
fn fixed_depth_zero_matches_lloyd_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = mixture_file(&dir, "mix.csv", 4);
    let mut lloyd = RunSpec::new(&path, 4, SolverKind::Lloyd, SeedKind::KMeansPlusPlus);
    lloyd.seeds = vec![1, 2, 3];
    let mut fixed = lloyd.clone();
    fixed.solver = SolverKind::AaFixed;
    fixed.aa = AAConfig::fixed(0);
    let a = run(&lloyd).unwrap();
    let b = run(&fixed).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.seed, y.seed);
        assert_eq!(x.total_iters, y.total_iters);
        assert_eq!(x.accepted_iters, y.accepted_iters);
        assert_eq!(x.mse, y.mse);
        assert_eq!(x.init_digest, y.init_digest);
    }
}

#[test]
fn identical_specs_compare_as_equal() {
    let dir = tempfile::tempdir().unwrap();
    let path = mixture_file(&dir, "mix.csv", 5);
    let mut spec = RunSpec::new(&path, 4, SolverKind::AaDynamic, SeedKind::KMeansPlusPlus);
    spec.seeds = vec![10, 11];
    let cmp = bench_compare(&[spec.clone(), spec]).unwrap();
    assert_eq!(cmp.summary.len(), 1);
    assert_eq!(cmp.summary[0].pairs, 2);
    assert_eq!(cmp.summary[0].mean_iter_reduction, 0.0);
    assert_eq!(cmp.summary[0].median_iter_reduction, 0.0);
    assert_eq!(cmp.max_rel_mse_discrepancy, 0.0);
    assert_eq!(cmp.summary[0].iter_wins, 0);
}

#[test]
fn pairs_share_initial_centroids() {
    let dir = tempfile::tempdir().unwrap();
    let path = mixture_file(&dir, "mix.csv", 6);
    let mut lloyd = RunSpec::new(&path, 5, SolverKind::Lloyd, SeedKind::Random);
    lloyd.seeds = vec![1, 2, 3];
    let mut aa = lloyd.clone();
    aa.solver = SolverKind::AaDynamic;
    let cmp = bench_compare(&[lloyd, aa]).unwrap();
    assert_eq!(cmp.records.len(), 6);
    for pair in cmp.records.chunks(2) {
        assert_eq!(pair[0].seed, pair[1].seed);
        assert_eq!(pair[0].init_digest, pair[1].init_digest);
    }
    assert_ne!(cmp.records[0].init_digest, cmp.records[2].init_digest);
}

#[test]
fn mismatched_specs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = mixture_file(&dir, "a.csv", 1);
    let b = mixture_file(&dir, "b.csv", 2);
    let base = RunSpec::new(&a, 3, SolverKind::Lloyd, SeedKind::KMeansPlusPlus);
    let mut other = RunSpec::new(&b, 3, SolverKind::AaDynamic, SeedKind::KMeansPlusPlus);
    assert!(matches!(
        bench_compare(&[base.clone(), other.clone()]),
        Err(Error::InvalidInput(_))
    ));
    other.dataset = a.clone();
    other.k = 4;
    assert!(bench_compare(&[base.clone(), other]).is_err());
    assert!(bench_compare(&[base]).is_err());
}

#[test]
fn invalid_specs_fail_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let path = mixture_file(&dir, "mix.csv", 3);
    let mut spec = RunSpec::new(&path, 0, SolverKind::Lloyd, SeedKind::KMeansPlusPlus);
    assert!(matches!(run(&spec), Err(Error::InvalidInput(_))));
    spec.k = 601;
    assert!(run(&spec).is_err());
    spec.k = 3;
    spec.seeds.clear();
    assert!(run(&spec).is_err());
    spec.seeds = vec![0];
    spec.aa.eps1 = 0.9;
    spec.solver = SolverKind::AaDynamic;
    assert!(run(&spec).is_err());
}

#[test]
fn reseeding_policy_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = mixture_file(&dir, "mix.csv", 8);
    let mut spec = RunSpec::new(&path, 8, SolverKind::AaDynamic, SeedKind::Random);
    spec.solver_cfg.empty_cluster = EmptyClusterPolicy::ReseedFarthest;
    spec.seeds = vec![0, 1, 2];
    for r in run(&spec).unwrap() {
        assert!(r.converged);
        assert!(r.mse.is_finite());
    }
}

#[test]
fn normalized_columns_have_zero_mean_unit_variance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cols.csv");
    fs::write(&path, "a,b,c\n1,10,7\n2,30,7\n4,50,7\n9,-20,7\n").unwrap();
    let data = load_dataset(&path, true).unwrap();
    for c in 0..3 {
        let col: Vec<f64> = data.rows().map(|r| r[c]).collect();
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() <= 1e-12);
        let want = if c == 2 { 0.0 } else { 1.0 };
        assert!((var - want).abs() <= 1e-12, "column {c}: variance {var}");
    }
}

#[test]
fn mixture_means_are_recoverable() {
    let synth = gen_synthetic(&SynthParams {
        kind: SynthKind::GaussianMixture,
        n: 4000,
        dim: 2,
        components: 4,
        spread: 10.0,
        jitter: 0.5,
        seed: 12,
    })
    .unwrap();
    // Sample i belongs to component i % components.
    for (j, mean) in synth.means.iter().enumerate() {
        let members: Vec<&[f64]> = synth.data.rows().skip(j).step_by(4).collect();
        for (c, &mu) in mean.iter().enumerate() {
            let avg = members.iter().map(|r| r[c]).sum::<f64>() / members.len() as f64;
            let se = 0.5 / (members.len() as f64).sqrt();
            assert!((avg - mu).abs() <= 3.0 * se, "component {j} coordinate {c}");
        }
    }
}
