//! Samples, centroids, assignments and the clustering energy.

use serde::{Deserialize, Serialize};

use crate::exec;
use crate::{Error, Result};

/// Squared Euclidean distance.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_matrix(values: &[f64], rows: usize, dim: usize, what: &str) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid(format!(
            "{what}: dimension must be at least 1"
        )));
    }
    if rows == 0 {
        return Err(Error::invalid(format!(
            "{what}: at least one row is required"
        )));
    }
    if values.len() != rows * dim {
        return Err(Error::invalid(format!(
            "{what}: {} values do not form a {rows}x{dim} matrix",
            values.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{what}: non-finite value at row {}, column {}",
            pos / dim,
            pos % dim
        )));
    }
    Ok(())
}

fn flatten_rows(rows: Vec<Vec<f64>>, what: &str) -> Result<(Vec<f64>, usize)> {
    let dim = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != dim) {
        return Err(Error::invalid(format!(
            "{what}: row {i} has {} columns, expected {dim}",
            rows[i].len()
        )));
    }
    Ok((rows.into_iter().flatten().collect(), dim))
}

/// An immutable N×d matrix of finite sample coordinates, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<f64>, dim: usize) -> Result<Self> {
        let n = points.len().checked_div(dim).unwrap_or(0);
        check_matrix(&points, n, dim, "dataset")?;
        Ok(Self { points, n, dim })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (points, dim) = flatten_rows(rows, "dataset")?;
        Self::new(points, dim)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }
}

/// K centroids of dimension d, stored row-major (centroid-major). The flat
/// buffer is the vector the accelerator does its history algebra on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSet {
    centers: Vec<f64>,
    k: usize,
    dim: usize,
}

impl CentroidSet {
    pub fn new(centers: Vec<f64>, dim: usize) -> Result<Self> {
        let k = centers.len().checked_div(dim).unwrap_or(0);
        check_matrix(&centers, k, dim, "centroids")?;
        Ok(Self { centers, k, dim })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (centers, dim) = flatten_rows(rows, "centroids")?;
        Self::new(centers, dim)
    }

    /// Builds a centroid set that may hold non-finite values, e.g. an
    /// extrapolated iterate that is checked by the caller.
    pub(crate) fn from_flat_unchecked(centers: Vec<f64>, dim: usize) -> Self {
        let k = centers.len() / dim;
        Self { centers, k, dim }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.centers
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.centers
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.centers
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.centers[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.centers.chunks_exact(self.dim)
    }

    pub fn is_finite(&self) -> bool {
        self.centers.iter().all(|v| v.is_finite())
    }

    /// Checks that these centroids can be paired with `data`.
    pub fn check_against(&self, data: &Dataset) -> Result<()> {
        if self.dim != data.dim() {
            return Err(Error::invalid(format!(
                "centroid dimension {} does not match data dimension {}",
                self.dim,
                data.dim()
            )));
        }
        if self.k > data.n() {
            return Err(Error::invalid(format!(
                "K = {} exceeds the number of samples N = {}",
                self.k,
                data.n()
            )));
        }
        Ok(())
    }
}

/// Per-sample cluster labels and per-cluster member counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    labels: Vec<usize>,
    counts: Vec<usize>,
}

impl Assignment {
    pub fn from_labels(labels: Vec<usize>, k: usize) -> Result<Self> {
        let mut counts = vec![0; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::invalid(format!(
                    "label {l} of sample {i} is out of range for K = {k}"
                )));
            }
            counts[l] += 1;
        }
        Ok(Self { labels, counts })
    }

    pub(crate) fn from_parts(labels: Vec<usize>, counts: Vec<usize>) -> Self {
        debug_assert_eq!(counts.iter().sum::<usize>(), labels.len());
        Self { labels, counts }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub(crate) fn check(&self, data: &Dataset, k: usize) -> Result<()> {
        if self.labels.len() != data.n() {
            return Err(Error::invalid(format!(
                "assignment has {} labels for {} samples",
                self.labels.len(),
                data.n()
            )));
        }
        if let Some(i) = self.labels.iter().position(|&l| l >= k) {
            return Err(Error::invalid(format!(
                "label {} of sample {i} is out of range for K = {k}",
                self.labels[i]
            )));
        }
        Ok(())
    }
}

/// Clustering energy: the total squared distance and its per-sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub total: f64,
    pub mse: f64,
}

impl Energy {
    pub fn new(total: f64, n: usize) -> Self {
        Self {
            total,
            mse: total / n as f64,
        }
    }
}

/// Sum of squared distances from each sample to the centroid it is labelled
/// with. The labels are taken as given; no nearest-centroid search happens.
pub fn energy(data: &Dataset, assign: &Assignment, cents: &CentroidSet) -> Result<Energy> {
    if cents.dim() != data.dim() {
        return Err(Error::invalid(format!(
            "centroid dimension {} does not match data dimension {}",
            cents.dim(),
            data.dim()
        )));
    }
    assign.check(data, cents.k())?;
    Ok(energy_unchecked(data, assign.labels(), cents))
}

pub(crate) fn energy_unchecked(data: &Dataset, labels: &[usize], cents: &CentroidSet) -> Energy {
    let partials = exec::map_chunks(data.n(), |r| {
        r.map(|i| sq_dist(data.row(i), cents.row(labels[i])))
            .sum::<f64>()
    });
    Energy::new(partials.into_iter().sum(), data.n())
}
