//! Synthetic datasets for benchmarks and tests.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::init::rng_from_seed;
use crate::model::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Isotropic Gaussians around means drawn uniformly from `[0, spread]^d`.
    GaussianMixture,
    /// Isotropic Gaussians centred on a regular lattice with spacing `spread`.
    Grid,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-mixture" => Ok(SynthKind::GaussianMixture),
            "grid" => Ok(SynthKind::Grid),
            _ => Err(Error::invalid(format!(
                "unknown dataset kind `{s}` (expected gaussian-mixture or grid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub kind: SynthKind,
    pub n: usize,
    pub dim: usize,
    pub components: usize,
    pub spread: f64,
    /// Standard deviation of every component.
    pub jitter: f64,
    pub seed: u64,
}

/// A generated dataset plus the component means it was drawn around.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: Dataset,
    pub means: Vec<Vec<f64>>,
}

fn lattice_point(mut index: usize, side: usize, dim: usize, spacing: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let digit = index % side;
            index /= side;
            digit as f64 * spacing
        })
        .collect()
}

/// Sample `i` belongs to component `i % components`.
pub fn gen_synthetic(p: &SynthParams) -> Result<Synthetic> {
    if p.dim == 0 || p.components == 0 || p.n < p.components {
        return Err(Error::invalid(format!(
            "need n >= components >= 1 and d >= 1, got n = {}, components = {}, d = {}",
            p.n, p.components, p.dim
        )));
    }
    if !(p.spread.is_finite() && p.spread >= 0.0 && p.jitter.is_finite() && p.jitter >= 0.0) {
        return Err(Error::invalid(
            "spread and jitter must be finite and nonnegative",
        ));
    }
    let mut rng = rng_from_seed(p.seed);
    let means: Vec<Vec<f64>> = match p.kind {
        SynthKind::GaussianMixture => (0..p.components)
            .map(|_| (0..p.dim).map(|_| rng.random::<f64>() * p.spread).collect())
            .collect(),
        SynthKind::Grid => {
            let mut side: usize = 1;
            while side
                .checked_pow(p.dim as u32)
                .is_some_and(|c| c < p.components)
            {
                side += 1;
            }
            (0..p.components)
                .map(|c| lattice_point(c, side, p.dim, p.spread))
                .collect()
        }
    };
    let mut points = Vec::with_capacity(p.n * p.dim);
    for i in 0..p.n {
        for &m in &means[i % p.components] {
            let noise: f64 = if p.jitter > 0.0 {
                StandardNormal.sample(&mut rng)
            } else {
                0.0
            };
            points.push(m + p.jitter * noise);
        }
    }
    Ok(Synthetic {
        data: Dataset::new(points, p.dim)?,
        means,
    })
}

pub fn write_dataset(data: &Dataset, out: &mut impl Write) -> std::io::Result<()> {
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_dataset_file(data: &Dataset, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    write_dataset(data, &mut f).map_err(io_err)?;
    f.flush().map_err(io_err)
}
