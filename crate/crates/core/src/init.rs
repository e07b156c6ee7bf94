//! Centroid seeding.
//!
//! Random seeders draw from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, so a seed reproduces the same centroids with this crate.

use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::read_matrix;
use crate::model::{sq_dist, CentroidSet, Dataset};
use crate::{Error, Result};

pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_k(data: &Dataset, k: usize) -> Result<()> {
    if k == 0 || k > data.n() {
        return Err(Error::invalid(format!(
            "k = {k} must be between 1 and N = {}",
            data.n()
        )));
    }
    Ok(())
}

fn gather(data: &Dataset, idx: &[usize]) -> CentroidSet {
    let flat = idx
        .iter()
        .flat_map(|&i| data.row(i).iter().copied())
        .collect();
    CentroidSet::new(flat, data.dim()).expect("rows of a valid dataset")
}

/// `k` distinct samples chosen uniformly without replacement.
pub fn init_random(data: &Dataset, k: usize, seed: u64) -> Result<CentroidSet> {
    check_k(data, k)?;
    let mut rng = rng_from_seed(seed);
    let idx = index::sample(&mut rng, data.n(), k).into_vec();
    Ok(gather(data, &idx))
}

/// Sample indices chosen by D² sampling. `first` fixes the first center;
/// otherwise it is uniform.
///
/// Samples coinciding with a chosen center have weight zero. Once every
/// sample coincides with some center, the remaining picks are uniform over
/// the samples not chosen yet.
pub fn kmeanspp_indices<R: Rng + ?Sized>(
    data: &Dataset,
    k: usize,
    rng: &mut R,
    first: Option<usize>,
) -> Result<Vec<usize>> {
    check_k(data, k)?;
    let n = data.n();
    let first = match first {
        Some(i) if i >= n => {
            return Err(Error::invalid(format!(
                "first center {i} out of range for N = {n}"
            )))
        }
        Some(i) => i,
        None => rng.random_range(0..n),
    };
    let mut chosen = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut d2: Vec<f64> = data.rows().map(|x| sq_dist(x, data.row(first))).collect();

    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[pick] = true;
        chosen.push(pick);
        let c = data.row(pick);
        for (w, x) in d2.iter_mut().zip(data.rows()) {
            *w = w.min(sq_dist(x, c));
        }
    }
    Ok(chosen)
}

pub fn init_kmeanspp(data: &Dataset, k: usize, seed: u64) -> Result<CentroidSet> {
    let mut rng = rng_from_seed(seed);
    let idx = kmeanspp_indices(data, k, &mut rng, None)?;
    Ok(gather(data, &idx))
}

/// Reads externally generated centroids and checks their shape.
pub fn init_from_file(path: &Path, expected_k: usize, expected_d: usize) -> Result<CentroidSet> {
    let m = read_matrix(path)?;
    if m.rows != expected_k || m.cols != expected_d {
        return Err(Error::Shape {
            path: path.to_path_buf(),
            message: format!(
                "expected {expected_k} centroids of dimension {expected_d}, found {} rows of {} columns",
                m.rows, m.cols
            ),
        });
    }
    CentroidSet::new(m.values, m.cols)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedKind {
    Random,
    KMeansPlusPlus,
    File(PathBuf),
}

impl std::fmt::Display for SeedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedKind::Random => f.write_str("random"),
            SeedKind::KMeansPlusPlus => f.write_str("kmeanspp"),
            SeedKind::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl std::str::FromStr for SeedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SeedKind::Random),
            "kmeanspp" | "kmeans++" => Ok(SeedKind::KMeansPlusPlus),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(SeedKind::File(PathBuf::from(p))),
                _ => Err(Error::invalid(format!(
                    "unknown initializer `{s}` (expected random, kmeanspp or file:PATH)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeder {
    pub kind: SeedKind,
    pub seed: u64,
}

impl Seeder {
    pub fn seed_centroids(&self, data: &Dataset, k: usize) -> Result<CentroidSet> {
        match &self.kind {
            SeedKind::Random => init_random(data, k, self.seed),
            SeedKind::KMeansPlusPlus => init_kmeanspp(data, k, self.seed),
            SeedKind::File(p) => init_from_file(p, k, data.dim()),
        }
    }
}
