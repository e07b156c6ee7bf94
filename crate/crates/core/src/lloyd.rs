//! Lloyd's algorithm as the fixed-point map `C -> G(C)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assign::{AssignStats, Assigner, Engine};
use crate::exec;
use crate::model::{energy_unchecked, sq_dist, Assignment, CentroidSet, Dataset, Energy};
use crate::{Error, Result};

/// What the update step does with a cluster that has no members.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyClusterPolicy {
    /// The centroid stays where it was.
    #[default]
    KeepPrevious,
    /// The centroid jumps onto the sample farthest from its own centroid.
    ReseedFarthest,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Cap on the number of assignment steps.
    pub max_iters: usize,
    pub empty_cluster: EmptyClusterPolicy,
    /// Worker threads for data-parallel passes; 0 uses the global pool.
    pub workers: usize,
    pub engine: Engine,
    /// Keep every iterate's centroids in [`SolverReport::centroid_trace`].
    pub record_centroids: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            empty_cluster: EmptyClusterPolicy::default(),
            workers: 0,
            engine: Engine::default(),
            record_centroids: false,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// An accelerated iterate that failed the energy guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub iteration: usize,
    /// Energy of the rejected extrapolated iterate.
    pub rejected: f64,
    /// Energy of the last accepted iterate.
    pub previous: f64,
    /// Energy of the plain Lloyd iterate used instead.
    pub fallback: f64,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    /// Assignment steps of the main loop. Reassignments after a rejected
    /// iterate are not counted separately.
    pub total_iters: usize,
    /// Iterations whose iterate was kept; equals `total_iters` for Lloyd.
    pub accepted_iters: usize,
    /// Energy of every kept iterate, in order.
    pub energy_trace: Vec<Energy>,
    pub final_energy: Energy,
    pub final_centroids: CentroidSet,
    pub final_assignment: Assignment,
    pub elapsed_seconds: f64,
    pub converged: bool,
    /// History depth in effect at each iteration (accelerated solver only).
    pub m_trace: Vec<usize>,
    pub rejections: Vec<Rejection>,
    /// Centroids of every iterate, when requested.
    pub centroid_trace: Vec<CentroidSet>,
    pub assign_stats: AssignStats,
}

/// New centroids as the means of their assigned samples.
pub fn update_step(
    data: &Dataset,
    assign: &Assignment,
    prev: &CentroidSet,
    policy: EmptyClusterPolicy,
) -> Result<CentroidSet> {
    if prev.dim() != data.dim() {
        return Err(Error::invalid(format!(
            "centroid dimension {} does not match data dimension {}",
            prev.dim(),
            data.dim()
        )));
    }
    if assign.k() != prev.k() {
        return Err(Error::invalid(format!(
            "assignment has K = {} but there are {} centroids",
            assign.k(),
            prev.k()
        )));
    }
    assign.check(data, prev.k())?;
    Ok(update_unchecked(data, assign, prev, policy))
}

pub(crate) fn update_unchecked(
    data: &Dataset,
    assign: &Assignment,
    prev: &CentroidSet,
    policy: EmptyClusterPolicy,
) -> CentroidSet {
    let (k, dim) = (prev.k(), prev.dim());
    let labels = assign.labels();
    let partials = exec::map_chunks(data.n(), |r| {
        let mut sums = vec![0.0; k * dim];
        for i in r {
            let row = &mut sums[labels[i] * dim..(labels[i] + 1) * dim];
            for (s, x) in row.iter_mut().zip(data.row(i)) {
                *s += x;
            }
        }
        sums
    });
    let mut sums = vec![0.0; k * dim];
    for p in partials {
        for (s, v) in sums.iter_mut().zip(p) {
            *s += v;
        }
    }

    let counts = assign.counts();
    let mut empty = Vec::new();
    for j in 0..k {
        let row = &mut sums[j * dim..(j + 1) * dim];
        if counts[j] == 0 {
            row.copy_from_slice(prev.row(j));
            empty.push(j);
        } else {
            let inv = counts[j] as f64;
            row.iter_mut().for_each(|v| *v /= inv);
        }
    }
    let mut out = CentroidSet::from_flat_unchecked(sums, dim);

    if policy == EmptyClusterPolicy::ReseedFarthest && !empty.is_empty() {
        let dist: Vec<f64> = data
            .rows()
            .zip(labels)
            .map(|(x, &l)| sq_dist(x, out.row(l)))
            .collect();
        let mut taken = vec![false; data.n()];
        for j in empty {
            let mut pick = None;
            let mut far = f64::NEG_INFINITY;
            for (i, &d) in dist.iter().enumerate() {
                if !taken[i] && d > far {
                    far = d;
                    pick = Some(i);
                }
            }
            let Some(i) = pick else { break };
            taken[i] = true;
            out.as_flat_mut()[j * dim..(j + 1) * dim].copy_from_slice(data.row(i));
        }
    }
    out
}

/// One application of the Lloyd map: assign, then average. The assignment
/// is returned too so callers can reuse it.
pub fn g_map(
    data: &Dataset,
    cents: &CentroidSet,
    assigner: &mut Assigner,
    policy: EmptyClusterPolicy,
) -> Result<(CentroidSet, Assignment)> {
    let assign = assigner.assign(data, cents)?;
    let next = update_step(data, &assign, cents, policy)?;
    Ok((next, assign))
}

/// Plain Lloyd iteration until two consecutive assignments agree.
///
/// When an update step leaves every centroid bit-for-bit unchanged the next
/// assignment is known to repeat, so that pass is skipped.
pub fn lloyd_solve(data: &Dataset, init: &CentroidSet, cfg: &SolverConfig) -> Result<SolverReport> {
    init.check_against(data)?;
    cfg.validate()?;
    exec::with_workers(cfg.workers, || lloyd_inner(data, init, cfg))?
}

fn lloyd_inner(data: &Dataset, init: &CentroidSet, cfg: &SolverConfig) -> Result<SolverReport> {
    let start = Instant::now();
    let mut assigner = Assigner::new(cfg.engine);
    let mut centroid_trace = Vec::new();

    let mut cents = init.clone();
    let mut assign = assigner.assign(data, &cents)?;
    let mut iters = 1;
    let mut trace = vec![energy_unchecked(data, assign.labels(), &cents)];
    if cfg.record_centroids {
        centroid_trace.push(cents.clone());
    }

    let converged = loop {
        let next = update_unchecked(data, &assign, &cents, cfg.empty_cluster);
        if next == cents {
            break true;
        }
        if iters >= cfg.max_iters {
            break false;
        }
        cents = next;
        let next_assign = assigner.assign(data, &cents)?;
        iters += 1;
        trace.push(energy_unchecked(data, next_assign.labels(), &cents));
        if cfg.record_centroids {
            centroid_trace.push(cents.clone());
        }
        let same = next_assign.labels() == assign.labels();
        assign = next_assign;
        if same {
            break true;
        }
    };

    Ok(SolverReport {
        total_iters: iters,
        accepted_iters: iters,
        final_energy: *trace.last().expect("at least one iterate"),
        energy_trace: trace,
        final_centroids: cents,
        final_assignment: assign,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        converged,
        m_trace: Vec::new(),
        rejections: Vec::new(),
        centroid_trace,
        assign_stats: assigner.stats(),
    })
}
