//! Benchmark harness: dataset loading, single runs, paired comparisons.

pub mod report;
pub mod synth;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anderson::{aa_kmeans_solve, AAConfig};
use crate::init::{SeedKind, Seeder};
use crate::io::read_matrix;
use crate::lloyd::{lloyd_solve, SolverConfig, SolverReport};
use crate::model::{CentroidSet, Dataset};
use crate::{Error, Result};

pub use report::{Comparison, PairSummary, REPORT_FORMAT};
pub use synth::{
    gen_synthetic, write_dataset, write_dataset_file, SynthKind, SynthParams, Synthetic,
};

/// Reads a numeric matrix as a dataset, optionally z-scoring every column.
/// Constant columns are centred but not scaled.
pub fn load_dataset(path: &Path, normalize: bool) -> Result<Dataset> {
    let m = read_matrix(path)?;
    let mut values = m.values;
    if normalize {
        zscore(&mut values, m.rows, m.cols);
    }
    Dataset::new(values, m.cols)
}

fn zscore(values: &mut [f64], rows: usize, cols: usize) {
    for c in 0..cols {
        let mean = (0..rows).map(|r| values[r * cols + c]).sum::<f64>() / rows as f64;
        let var = (0..rows)
            .map(|r| (values[r * cols + c] - mean).powi(2))
            .sum::<f64>()
            / rows as f64;
        let sd = var.sqrt();
        for r in 0..rows {
            let v = &mut values[r * cols + c];
            *v -= mean;
            if sd > 0.0 {
                *v /= sd;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Lloyd,
    AaFixed,
    AaDynamic,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Lloyd => "lloyd",
            SolverKind::AaFixed => "aa-fixed",
            SolverKind::AaDynamic => "aa-dynamic",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lloyd" => Ok(SolverKind::Lloyd),
            "aa-fixed" => Ok(SolverKind::AaFixed),
            "aa-dynamic" => Ok(SolverKind::AaDynamic),
            _ => Err(Error::invalid(format!(
                "unknown solver `{s}` (expected lloyd, aa-fixed or aa-dynamic)"
            ))),
        }
    }
}

/// Runs one solver from the given centroids.
pub fn solve(
    kind: SolverKind,
    data: &Dataset,
    init: &CentroidSet,
    cfg: &SolverConfig,
    aa: &AAConfig,
) -> Result<SolverReport> {
    match kind {
        SolverKind::Lloyd => lloyd_solve(data, init, cfg),
        SolverKind::AaFixed => aa_kmeans_solve(
            data,
            init,
            cfg,
            &AAConfig {
                dynamic: false,
                ..*aa
            },
        ),
        SolverKind::AaDynamic => aa_kmeans_solve(
            data,
            init,
            cfg,
            &AAConfig {
                dynamic: true,
                ..*aa
            },
        ),
    }
}

/// One benchmark job: a dataset, a solver and the seeds to repeat it with.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub dataset: PathBuf,
    pub k: usize,
    pub solver: SolverKind,
    pub init: SeedKind,
    /// Depth and threshold parameters; `dynamic` is taken from `solver`.
    pub aa: AAConfig,
    pub normalize: bool,
    /// One repetition per seed.
    pub seeds: Vec<u64>,
    pub solver_cfg: SolverConfig,
    pub trace: bool,
}

impl RunSpec {
    pub fn new(dataset: impl Into<PathBuf>, k: usize, solver: SolverKind, init: SeedKind) -> Self {
        Self {
            dataset: dataset.into(),
            k,
            solver,
            init,
            aa: AAConfig::default(),
            normalize: false,
            seeds: vec![0],
            solver_cfg: SolverConfig::default(),
            trace: false,
        }
    }

    pub fn repetitions(&self) -> usize {
        self.seeds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one repetition is required"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        self.solver_cfg.validate()?;
        self.aa.validate()
    }

    fn dataset_id(&self) -> String {
        self.dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.dataset.display().to_string())
    }
}

/// Seeds `base, base + 1, ...` for `reps` repetitions, unless explicit seeds
/// are given, in which case their count must match `reps` when both are set.
pub fn seed_list(base: u64, reps: Option<usize>, explicit: Option<Vec<u64>>) -> Result<Vec<u64>> {
    match (explicit, reps) {
        (Some(s), Some(r)) if s.len() != r => Err(Error::invalid(format!(
            "{} seeds given for {r} repetitions",
            s.len()
        ))),
        (Some(s), _) if s.is_empty() => Err(Error::invalid("empty seed list")),
        (Some(s), _) => Ok(s),
        (None, Some(0)) => Err(Error::invalid("repetitions must be at least 1")),
        (None, r) => Ok((0..r.unwrap_or(1) as u64)
            .map(|i| base.wrapping_add(i))
            .collect()),
    }
}

/// One row of a benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub dataset: String,
    pub solver: SolverKind,
    pub m0: usize,
    pub seed: u64,
    pub accepted_iters: usize,
    pub total_iters: usize,
    /// Wall-clock time of the solve alone, rounded to milliseconds.
    pub elapsed_seconds: f64,
    pub mse: f64,
    pub converged: bool,
    /// Digest of the initial centroids.
    pub init_digest: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub energy_trace: Option<Vec<f64>>,
}

/// Short SHA-256 digest of the exact bits of a centroid set.
pub fn centroid_digest(c: &CentroidSet) -> String {
    let mut h = Sha256::new();
    h.update((c.k() as u64).to_le_bytes());
    h.update((c.dim() as u64).to_le_bytes());
    for v in c.as_flat() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn record(spec: &RunSpec, seed: u64, digest: &str, rep: &SolverReport) -> BenchRecord {
    BenchRecord {
        dataset: spec.dataset_id(),
        solver: spec.solver,
        m0: if spec.solver == SolverKind::Lloyd {
            0
        } else {
            spec.aa.m0
        },
        seed,
        accepted_iters: rep.accepted_iters,
        total_iters: rep.total_iters,
        elapsed_seconds: (rep.elapsed_seconds * 1000.0).round() / 1000.0,
        mse: rep.final_energy.mse,
        converged: rep.converged,
        init_digest: digest.to_owned(),
        energy_trace: spec
            .trace
            .then(|| rep.energy_trace.iter().map(|e| e.total).collect()),
    }
}

fn seeder(spec: &RunSpec, seed: u64) -> Seeder {
    Seeder {
        kind: spec.init.clone(),
        seed,
    }
}

/// Runs `spec` once per seed. Timing covers the solve only.
pub fn run(spec: &RunSpec) -> Result<Vec<BenchRecord>> {
    spec.validate()?;
    let data = load_dataset(&spec.dataset, spec.normalize)?;
    run_on(spec, &data)
}

/// Like [`run`] on an already loaded dataset.
pub fn run_on(spec: &RunSpec, data: &Dataset) -> Result<Vec<BenchRecord>> {
    spec.validate()?;
    spec.seeds
        .iter()
        .map(|&seed| {
            let init = seeder(spec, seed).seed_centroids(data, spec.k)?;
            let digest = centroid_digest(&init);
            let rep = solve(spec.solver, data, &init, &spec.solver_cfg, &spec.aa)?;
            Ok(record(spec, seed, &digest, &rep))
        })
        .collect()
}

/// Runs every spec from the same initial centroids per seed and summarises
/// each solver against the first spec.
pub fn bench_compare(specs: &[RunSpec]) -> Result<Comparison> {
    let base = specs
        .first()
        .filter(|_| specs.len() >= 2)
        .ok_or_else(|| Error::invalid("a comparison needs at least two specs"))?;
    for s in specs {
        s.validate()?;
        if s.dataset != base.dataset || s.normalize != base.normalize {
            return Err(Error::invalid(format!(
                "specs use different datasets: {} vs {}",
                base.dataset.display(),
                s.dataset.display()
            )));
        }
        if s.k != base.k || s.init != base.init || s.seeds != base.seeds {
            return Err(Error::invalid("specs must share k, initializer and seeds"));
        }
    }
    let data = load_dataset(&base.dataset, base.normalize)?;
    bench_compare_on(specs, &data)
}

/// Like [`bench_compare`] on an already loaded dataset.
pub fn bench_compare_on(specs: &[RunSpec], data: &Dataset) -> Result<Comparison> {
    if specs.len() < 2 {
        return Err(Error::invalid("a comparison needs at least two specs"));
    }
    let base = &specs[0];
    let mut records = Vec::with_capacity(specs.len() * base.seeds.len());
    for &seed in &base.seeds {
        let init = seeder(base, seed).seed_centroids(data, base.k)?;
        let digest = centroid_digest(&init);
        for s in specs {
            let rep = solve(s.solver, data, &init, &s.solver_cfg, &s.aa)?;
            records.push(record(s, seed, &digest, &rep));
        }
    }
    Ok(Comparison::from_records(records, specs.len()))
}
