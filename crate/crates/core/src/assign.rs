//! Nearest-centroid assignment.
//!
//! Two engines return identical labels: [`assign_naive`] scans every
//! centroid for every sample, [`assign_bounded`] keeps one upper bound
//! (distance to the assigned centroid) and one lower bound (distance to the
//! second-closest centroid) per sample and only rescans samples whose bounds
//! overlap. Bounds are loosened by the per-centroid drift since the previous
//! call, which stays valid for arbitrarily long centroid jumps.

use serde::{Deserialize, Serialize};

use crate::exec;
use crate::model::{sq_dist, Assignment, CentroidSet, Dataset};
use crate::{Error, Result};

/// Relative slack applied before a bound test may skip a sample, so that
/// rounding in the accumulated bounds can never change a label.
const BOUND_SLACK: f64 = 1e-9;

/// Index of the closest centroid plus the squared distances to the closest
/// and second-closest centroid. Ties go to the lowest index.
#[inline]
pub(crate) fn nearest_two(x: &[f64], cents: &CentroidSet) -> (usize, f64, f64) {
    let mut best = f64::INFINITY;
    let mut second = f64::INFINITY;
    let mut idx = 0;
    for (j, c) in cents.rows().enumerate() {
        let d = sq_dist(x, c);
        if d < best {
            second = best;
            best = d;
            idx = j;
        } else if d < second {
            second = d;
        }
    }
    (idx, best, second)
}

fn check_dims(data: &Dataset, cents: &CentroidSet) -> Result<()> {
    if data.dim() != cents.dim() {
        return Err(Error::invalid(format!(
            "centroid dimension {} does not match data dimension {}",
            cents.dim(),
            data.dim()
        )));
    }
    Ok(())
}

fn count_labels(labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Reference engine: full scan over all centroids for every sample.
pub fn assign_naive(data: &Dataset, cents: &CentroidSet) -> Result<Assignment> {
    check_dims(data, cents)?;
    let labels: Vec<usize> = exec::map_chunks(data.n(), |r| {
        r.map(|i| nearest_two(data.row(i), cents).0)
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let counts = count_labels(&labels, cents.k());
    Ok(Assignment::from_parts(labels, counts))
}

/// Euclidean distance each centroid moved between `old` and `new`.
pub fn centroid_drift(old: &CentroidSet, new: &CentroidSet) -> Result<Vec<f64>> {
    if old.k() != new.k() || old.dim() != new.dim() {
        return Err(Error::invalid(format!(
            "cannot compare {}x{} centroids with {}x{} centroids",
            old.k(),
            old.dim(),
            new.k(),
            new.dim()
        )));
    }
    Ok(old
        .rows()
        .zip(new.rows())
        .map(|(a, b)| sq_dist(a, b).sqrt())
        .collect())
}

/// Work counters for benchmarking assignment cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignStats {
    /// Number of assignment calls.
    pub calls: u64,
    /// Samples for which all K centroid distances were computed.
    pub full_scans: u64,
    /// Individual sample-to-centroid distance evaluations.
    pub distance_evals: u64,
}

impl AssignStats {
    fn add(&mut self, other: AssignStats) {
        self.calls += other.calls;
        self.full_scans += other.full_scans;
        self.distance_evals += other.distance_evals;
    }
}

/// Per-sample distance bounds carried between calls to [`assign_bounded`].
///
/// Bounds are non-squared Euclidean distances so that drift updates obey the
/// triangle inequality.
#[derive(Debug, Clone, Default)]
pub struct BoundsState {
    upper: Vec<f64>,
    lower: Vec<f64>,
    labels: Vec<usize>,
    last_centers: Option<CentroidSet>,
    stats: AssignStats,
}

impl BoundsState {
    /// A fresh state; the first call does a full distance pass.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn last_centers(&self) -> Option<&CentroidSet> {
        self.last_centers.as_ref()
    }

    pub fn stats(&self) -> AssignStats {
        self.stats
    }

    fn is_compatible_with(&self, old: &CentroidSet, data: &Dataset, cents: &CentroidSet) -> bool {
        self.labels.len() == data.n() && old.k() == cents.k() && old.dim() == cents.dim()
    }

    fn full_pass(&mut self, data: &Dataset, cents: &CentroidSet) -> AssignStats {
        let n = data.n();
        self.upper.resize(n, 0.0);
        self.lower.resize(n, 0.0);
        self.labels.resize(n, 0);
        exec::zip3_chunks_mut(
            &mut self.labels,
            &mut self.upper,
            &mut self.lower,
            |offset, labels, upper, lower| {
                for (t, ((l, u), lo)) in labels.iter_mut().zip(upper).zip(lower).enumerate() {
                    let (idx, best, second) = nearest_two(data.row(offset + t), cents);
                    *l = idx;
                    *u = best.sqrt();
                    *lo = second.sqrt();
                }
            },
        );
        AssignStats {
            calls: 1,
            full_scans: n as u64,
            distance_evals: (n * cents.k()) as u64,
        }
    }

    fn bounded_pass(
        &mut self,
        data: &Dataset,
        cents: &CentroidSet,
        old: &CentroidSet,
    ) -> AssignStats {
        let k = cents.k();
        let drift = centroid_drift(old, cents).expect("shape checked by caller");

        // Largest and second-largest drift, for the lower-bound update.
        let (mut max1, mut max2, mut argmax) = (0.0_f64, 0.0_f64, usize::MAX);
        for (j, &d) in drift.iter().enumerate() {
            if d > max1 {
                max2 = max1;
                max1 = d;
                argmax = j;
            } else if d > max2 {
                max2 = d;
            }
        }

        // Half the distance from each centroid to its nearest neighbour.
        let mut half_sep = vec![f64::INFINITY; k];
        for a in 0..k {
            for b in (a + 1)..k {
                let d = 0.5 * sq_dist(cents.row(a), cents.row(b)).sqrt();
                half_sep[a] = half_sep[a].min(d);
                half_sep[b] = half_sep[b].min(d);
            }
        }

        let partial = exec::zip3_chunks_mut(
            &mut self.labels,
            &mut self.upper,
            &mut self.lower,
            |offset, labels, upper, lower| {
                let mut stats = AssignStats::default();
                for (t, ((l, u), lo)) in labels.iter_mut().zip(upper).zip(lower).enumerate() {
                    let own = *l;
                    *u += drift[own];
                    *lo -= if own == argmax { max2 } else { max1 };

                    let z = lo.max(half_sep[own]);
                    if *u * (1.0 + BOUND_SLACK) < z {
                        continue;
                    }
                    let x = data.row(offset + t);
                    *u = sq_dist(x, cents.row(own)).sqrt();
                    stats.distance_evals += 1;
                    if *u * (1.0 + BOUND_SLACK) < z {
                        continue;
                    }
                    let (idx, best, second) = nearest_two(x, cents);
                    *l = idx;
                    *u = best.sqrt();
                    *lo = second.sqrt();
                    stats.full_scans += 1;
                    stats.distance_evals += k as u64;
                }
                stats
            },
        );
        let mut stats = AssignStats {
            calls: 1,
            distance_evals: (k * (k - 1) / 2) as u64,
            ..AssignStats::default()
        };
        for p in partial {
            stats.add(p);
        }
        stats
    }
}

/// Bound-based engine. Returns exactly the labels of [`assign_naive`],
/// including tie-breaks, and leaves `state` refreshed against `cents`.
pub fn assign_bounded(
    data: &Dataset,
    cents: &CentroidSet,
    state: &mut BoundsState,
) -> Result<Assignment> {
    check_dims(data, cents)?;
    let stats = match state.last_centers.take() {
        Some(old) if state.is_compatible_with(&old, data, cents) => {
            state.bounded_pass(data, cents, &old)
        }
        _ => state.full_pass(data, cents),
    };
    state.stats.add(stats);
    state.last_centers = Some(cents.clone());
    let counts = count_labels(&state.labels, cents.k());
    Ok(Assignment::from_parts(state.labels.clone(), counts))
}

/// Choice of assignment engine for the solvers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Naive,
    #[default]
    Bounded,
}

/// An assignment engine together with whatever state it carries between
/// calls. One solver owns one `Assigner`.
#[derive(Debug, Clone)]
pub struct Assigner {
    engine: Engine,
    bounds: BoundsState,
    naive_stats: AssignStats,
}

impl Assigner {
    pub fn new(engine: Engine) -> Self {
        Self {
            engine,
            bounds: BoundsState::new(),
            naive_stats: AssignStats::default(),
        }
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn assign(&mut self, data: &Dataset, cents: &CentroidSet) -> Result<Assignment> {
        match self.engine {
            Engine::Naive => {
                let a = assign_naive(data, cents)?;
                self.naive_stats.add(AssignStats {
                    calls: 1,
                    full_scans: data.n() as u64,
                    distance_evals: (data.n() * cents.k()) as u64,
                });
                Ok(a)
            }
            Engine::Bounded => assign_bounded(data, cents, &mut self.bounds),
        }
    }

    pub fn stats(&self) -> AssignStats {
        match self.engine {
            Engine::Naive => self.naive_stats,
            Engine::Bounded => self.bounds.stats(),
        }
    }
}
