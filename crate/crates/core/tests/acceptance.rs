//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; run
//! with `cargo test --test acceptance -- --nocapture` to see them.

use std::process::Command;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use aakmeans::harness::{gen_synthetic, SynthKind, SynthParams};
use aakmeans::*;

type Outcome = std::result::Result<String, String>;

fn mixture(
    n: usize,
    dim: usize,
    components: usize,
    spread: f64,
    jitter: f64,
    seed: u64,
) -> Dataset {
    gen_synthetic(&SynthParams {
        kind: SynthKind::GaussianMixture,
        n,
        dim,
        components,
        spread,
        jitter,
        seed,
    })
    .unwrap()
    .data
}

fn monotone(trace: &[Energy]) -> bool {
    trace
        .windows(2)
        .all(|w| w[1].total <= w[0].total + 1e-9 * w[0].total.abs())
}

fn monotone_energy() -> (Outcome, Outcome) {
    let mut rng = rng_from_seed(0xA11CE);
    let mut bad_trace = Vec::new();
    let mut bad_m = Vec::new();
    let aa = AAConfig::default();
    for run in 0..50u64 {
        let dim = [2, 8, 32][rng.random_range(0..3)];
        let k = [5, 10][rng.random_range(0..2)];
        let n = rng.random_range(500..=10_000);
        let components = rng.random_range(2..=15);
        let jitter = rng.random_range(0.3..3.0);
        let data = mixture(n, dim, components, 10.0, jitter, run);
        let init = init_kmeanspp(&data, k, run).unwrap();
        let r = aa_kmeans_solve(&data, &init, &SolverConfig::default(), &aa).unwrap();
        if !monotone(&r.energy_trace) {
            bad_trace.push(run);
        }
        if r.m_trace.iter().any(|&m| m > aa.m_max) {
            bad_m.push(run);
        }
    }
    let trace = if bad_trace.is_empty() {
        Ok("50/50 accepted traces non-increasing".into())
    } else {
        Err(format!("non-monotone runs {bad_trace:?}"))
    };
    let m = if bad_m.is_empty() {
        Ok("m within [0, 30] on every iteration of 50 runs".into())
    } else {
        Err(format!("m out of range in runs {bad_m:?}"))
    };
    (trace, m)
}

fn lloyd_degeneracy() -> Outcome {
    let cfg = SolverConfig {
        record_centroids: true,
        ..SolverConfig::default()
    };
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let dim = 1 + (seed as usize % 6);
        let data = mixture(300 + 50 * seed as usize, dim, 4, 6.0, 1.5, 500 + seed);
        let init = init_random(&data, 3 + seed as usize % 5, seed).unwrap();
        let l = lloyd_solve(&data, &init, &cfg).unwrap();
        let a = aa_kmeans_solve(&data, &init, &cfg, &AAConfig::fixed(0)).unwrap();
        if l.centroid_trace.len() != a.centroid_trace.len() {
            return Err(format!(
                "seed {seed}: {} vs {} iterates",
                l.centroid_trace.len(),
                a.centroid_trace.len()
            ));
        }
        for (x, y) in l.centroid_trace.iter().zip(&a.centroid_trace) {
            for (p, q) in x.as_flat().iter().zip(y.as_flat()) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("20 instances, max centroid difference {worst:e}"))
    } else {
        Err(format!("max centroid difference {worst:e}"))
    }
}

fn assignment_oracle() -> Outcome {
    let mut rng = rng_from_seed(0xB0B);
    let mut steps = 0;
    for inst in 0..100 {
        let n = rng.random_range(1..=2000);
        let dim = rng.random_range(1..=16);
        let k = rng.random_range(1..=32usize.min(n));
        let points: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let data = Dataset::new(points, dim).unwrap();
        let mut centers: Vec<f64> = (0..k * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut state = BoundsState::new();
        for step in 0..12 {
            let cents = CentroidSet::new(centers.clone(), dim).unwrap();
            let bounded = assign_bounded(&data, &cents, &mut state).unwrap();
            let naive = assign_naive(&data, &cents).unwrap();
            if bounded.labels() != naive.labels() {
                return Err(format!("instance {inst} step {step}: labels differ"));
            }
            steps += 1;
            // Mix small drifts with extrapolation-sized jumps.
            let scale = match step % 4 {
                0 => 20.0,
                1 => 0.01,
                2 => 0.0,
                _ => 1.0,
            };
            for c in centers.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *c += scale * z;
            }
        }
    }
    Ok(format!(
        "100 instances, {steps} assignments, labels identical"
    ))
}

fn least_squares_oracle() -> Outcome {
    let mut rng = rng_from_seed(0xC0FFEE);
    let mut worst = 0.0f64;
    let mut made = 0;
    while made < 200 {
        let m = rng.random_range(1..=5);
        let len = rng.random_range(m.max(2)..=64);
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let f: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let a = DMatrix::from_fn(len, m, |i, j| cols[j][i]);
        let sv = a.singular_values();
        if sv.max() / sv.min() > 100.0 {
            continue;
        }
        made += 1;
        let pinv = a.clone().pseudo_inverse(1e-14).unwrap();
        let oracle = pinv * DMatrix::from_column_slice(len, 1, &f);
        // Unregularized, so the result is the exact least-squares solution.
        let theta = solve_theta(&f, &cols, 0.0).unwrap();
        let diff: f64 = theta
            .iter()
            .zip(oracle.iter())
            .map(|(t, o)| (t - o).powi(2))
            .sum::<f64>()
            .sqrt();
        let rel = diff / oracle.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    if worst <= 1e-8 {
        Ok(format!("200 systems, max relative error {worst:e}"))
    } else {
        Err(format!("max relative error {worst:e}"))
    }
}

struct Pair {
    lloyd_iters: usize,
    aa_iters: usize,
    lloyd_mse: f64,
    aa_mse: f64,
}

fn paired_runs() -> Vec<Pair> {
    let cfg = SolverConfig::default();
    let aa = AAConfig::default();
    let mut pairs = Vec::new();
    for dim in [2, 8, 32] {
        for seed in 0..10u64 {
            let data = mixture(10_000, dim, 10, 10.0, 1.0, seed);
            let init = init_kmeanspp(&data, 10, seed + 100).unwrap();
            let l = lloyd_solve(&data, &init, &cfg).unwrap();
            let a = aa_kmeans_solve(&data, &init, &cfg, &aa).unwrap();
            pairs.push(Pair {
                lloyd_iters: l.total_iters,
                aa_iters: a.total_iters,
                lloyd_mse: l.final_energy.mse,
                aa_mse: a.final_energy.mse,
            });
        }
    }
    pairs
}

fn iteration_reduction(pairs: &[Pair]) -> Outcome {
    let wins = pairs.iter().filter(|p| p.aa_iters < p.lloyd_iters).count();
    let mut red: Vec<f64> = pairs
        .iter()
        .map(|p| (p.lloyd_iters as f64 - p.aa_iters as f64) / p.lloyd_iters as f64)
        .collect();
    red.sort_by(f64::total_cmp);
    let n = red.len();
    let median = 0.5 * (red[(n - 1) / 2] + red[n / 2]);
    let msg = format!(
        "{wins}/{n} pairs won, median iteration reduction {:.1}%",
        100.0 * median
    );
    if wins as f64 >= 0.7 * n as f64 && median >= 0.2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn solution_quality(pairs: &[Pair]) -> Outcome {
    let close = pairs
        .iter()
        .filter(|p| ((p.aa_mse - p.lloyd_mse) / p.lloyd_mse).abs() <= 0.01)
        .count();
    let msg = format!("{close}/{} pairs with MSE within 1%", pairs.len());
    if close as f64 >= 0.9 * pairs.len() as f64 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn kmeanspp_distribution() -> Outcome {
    let data = Dataset::from_rows(vec![vec![0.0], vec![0.0], vec![10.0]]).unwrap();
    let mut rng = rng_from_seed(8);
    let trials = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..trials {
        let idx = kmeanspp_indices(&data, 2, &mut rng, Some(2)).unwrap();
        counts[idx[1]] += 1;
    }
    let expected = trials as f64 / 2.0;
    let chi2: f64 = counts[..2]
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let msg = format!("counts {counts:?}, chi-square {chi2:.3} (critical 10.828)");
    if counts[2] == 0 && chi2 < 10.828 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn global_minimum(data: &Dataset, k: usize) -> f64 {
    let n = data.n();
    let dim = data.dim();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(data.row(i)) {
                *s += x;
            }
        }
        let mut e = 0.0;
        for (i, &l) in labels.iter().enumerate() {
            for (x, s) in data.row(i).iter().zip(&sums[l * dim..(l + 1) * dim]) {
                let d = x - s / counts[l] as f64;
                e += d * d;
            }
        }
        best = best.min(e);
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

fn brute_force_optimality() -> Outcome {
    let mut rng = rng_from_seed(0xD00D);
    let cfg = SolverConfig::default();
    for inst in 0..50 {
        let n = rng.random_range(2..=8);
        let k = rng.random_range(1..=3usize.min(n));
        let dim = rng.random_range(1..=3);
        let points: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let data = Dataset::new(points, dim).unwrap();
        let init = init_random(&data, k, inst).unwrap();
        let best = global_minimum(&data, k);
        let reports = [
            ("lloyd", lloyd_solve(&data, &init, &cfg).unwrap()),
            (
                "aa",
                aa_kmeans_solve(&data, &init, &cfg, &AAConfig::default()).unwrap(),
            ),
        ];
        for (name, r) in reports {
            if r.final_energy.total < best - 1e-12 * best.max(1.0) {
                return Err(format!(
                    "instance {inst} {name}: energy below global minimum"
                ));
            }
            let mut assigner = Assigner::new(Engine::Naive);
            let (_, again) =
                g_map(&data, &r.final_centroids, &mut assigner, cfg.empty_cluster).unwrap();
            if !r.converged || again.labels() != r.final_assignment.labels() {
                return Err(format!(
                    "instance {inst} {name}: final assignment is not a fixed point"
                ));
            }
        }
    }
    Ok("50 instances, both solvers at fixed points no lower than the global minimum".into())
}

fn toy_cli() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("toy.csv");
    let init = dir.path().join("init.csv");
    std::fs::write(&data, "0\n1\n4\n5\n").unwrap();
    std::fs::write(&init, "0\n5\n").unwrap();
    let run = |format: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_aakmeans"))
            .args([
                "run", "--solver", "lloyd", "--k", "2", "--format", format, "--data",
            ])
            .arg(&data)
            .arg(format!("--init=file:{}", init.display()))
            .output()
            .unwrap();
        (out.status.success(), String::from_utf8(out.stdout).unwrap())
    };

    let (ok, json) = run("json");
    if !ok {
        return Err("json run failed".into());
    }
    let v: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let rec = &v["records"][0];
    if rec["mse"].as_f64() != Some(0.25) || rec["converged"].as_bool() != Some(true) {
        return Err(format!("json record {rec}"));
    }

    let (ok, csv) = run("csv");
    if !ok {
        return Err("csv run failed".into());
    }
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .and_then(|i| row.get(i).copied())
    };
    if col("mse") != Some("0.25") || col("converged") != Some("true") {
        return Err(format!("csv row {row:?}"));
    }
    Ok("mse = 0.25 and converged = true in JSON and CSV".into())
}

fn adjust_m_pins() -> Outcome {
    let cfg = AAConfig::default();
    // Previous decrease of 1.0, so the ratio equals the current decrease.
    let cases = [
        (0.01, 5, 4),
        (0.3, 5, 5),
        (0.6, 5, 6),
        (0.01, 0, 0),
        (0.6, 30, 30),
    ];
    for (r, m, want) in cases {
        let got = adjust_m(10.0 - r, 10.0, 11.0, m, &cfg);
        if got != want {
            return Err(format!("r = {r}, m = {m}: got {got}, expected {want}"));
        }
    }
    Ok("r = 0.01 / 0.3 / 0.6 and m = 0 / 30 boundaries behave as pinned".into())
}

#[test]
fn acceptance_criteria() {
    let (monotone, m_bounds) = monotone_energy();
    let pairs = paired_runs();
    let m_check = match (m_bounds, adjust_m_pins()) {
        (Ok(a), Ok(b)) => Ok(format!("{a}; {b}")),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    let results = [
        ("1 monotone energy", monotone),
        ("2 lloyd degeneracy", lloyd_degeneracy()),
        ("3 assignment oracle", assignment_oracle()),
        ("4 least-squares oracle", least_squares_oracle()),
        ("5 iteration reduction", iteration_reduction(&pairs)),
        ("6 solution quality", solution_quality(&pairs)),
        ("7 dynamic m bounds", m_check),
        ("8 k-means++ distribution", kmeanspp_distribution()),
        ("9 brute-force optimality", brute_force_optimality()),
        ("10 toy end-to-end", toy_cli()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
