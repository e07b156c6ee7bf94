//! Anderson acceleration of the Lloyd map with an energy guard and a
//! dynamically adjusted history depth.
//!
//! Each iteration takes the Lloyd image `G = G(C)` and residual `F = G - C`
//! of the current iterate, fits the latest residual by the last `m`
//! residual differences, and applies the same combination to the `G`
//! differences:
//!
//! ```text
//! theta   = argmin || F_t - sum_j theta_j (F_{t-j+1} - F_{t-j}) ||^2
//! C_{t+1} = G_t - sum_j theta_j (G_{t-j+1} - G_{t-j})
//! ```
//!
//! An extrapolated iterate is kept only if it lowers the clustering energy;
//! otherwise the solver falls back to the plain Lloyd iterate, so the energy
//! of kept iterates never increases. The depth `m` shrinks when the energy
//! decrease stalls relative to the previous one and grows when it holds up.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assign::Assigner;
use crate::exec;
use crate::lloyd::{update_unchecked, Rejection, SolverConfig, SolverReport};
use crate::model::{energy_unchecked, CentroidSet, Dataset};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AAConfig {
    /// Initial history depth.
    pub m0: usize,
    /// Upper limit for the history depth.
    pub m_max: usize,
    /// Decrease ratio below which `m` shrinks.
    pub eps1: f64,
    /// Decrease ratio above which `m` grows.
    pub eps2: f64,
    /// Adjust `m` during the solve; otherwise it stays at `m0`.
    pub dynamic: bool,
    /// Tikhonov weight relative to the mean diagonal of the normal matrix.
    pub regularization: f64,
    /// Drop the whole history whenever an iterate is rejected.
    pub clear_history_on_reject: bool,
}

impl Default for AAConfig {
    fn default() -> Self {
        Self {
            m0: 2,
            m_max: 30,
            eps1: 0.02,
            eps2: 0.5,
            dynamic: true,
            regularization: 1e-10,
            clear_history_on_reject: false,
        }
    }
}

impl AAConfig {
    /// Fixed depth `m`.
    pub fn fixed(m: usize) -> Self {
        Self {
            m0: m,
            m_max: m.max(Self::default().m_max),
            dynamic: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0 > self.m_max {
            return Err(Error::invalid(format!(
                "initial depth m0 = {} exceeds m_max = {}",
                self.m0, self.m_max
            )));
        }
        if !(self.eps1 >= 0.0 && self.eps1 < self.eps2) {
            return Err(Error::invalid(format!(
                "thresholds need 0 <= eps1 < eps2, got eps1 = {}, eps2 = {}",
                self.eps1, self.eps2
            )));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::invalid(
                "regularization must be a finite nonnegative number",
            ));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `a x = b` for a symmetric positive definite `a` (row-major,
/// `n`×`n`). Returns `None` when a pivot is not safely positive.
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i]).fold(0.0_f64, f64::max);
    let tiny = f64::EPSILON * scale * n as f64;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            if i == j {
                if s <= tiny || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - ((i + 1)..n).map(|k| l[k * n + i] * x[k]).sum::<f64>()) / l[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Least-squares coefficients fitting `f_current` by the columns
/// `delta_f[0..m]`, where `delta_f[0]` is the most recent difference.
///
/// Uses the normal equations with `regularization * trace / m` added to the
/// diagonal. A numerically singular system is retried without its oldest
/// column; dropped columns get coefficient zero. If even the newest column
/// alone is singular, all coefficients are zero.
pub fn solve_theta<V: AsRef<[f64]>>(
    f_current: &[f64],
    delta_f: &[V],
    regularization: f64,
) -> Result<Vec<f64>> {
    let m = delta_f.len();
    if m == 0 {
        return Err(Error::invalid(
            "least-squares fit needs at least one column",
        ));
    }
    if let Some(j) = delta_f
        .iter()
        .position(|c| c.as_ref().len() != f_current.len())
    {
        return Err(Error::invalid(format!(
            "column {j} has length {}, residual has length {}",
            delta_f[j].as_ref().len(),
            f_current.len()
        )));
    }

    let mut gram = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let v = dot(delta_f[a].as_ref(), delta_f[b].as_ref());
            gram[a * m + b] = v;
            gram[b * m + a] = v;
        }
    }
    let rhs: Vec<f64> = delta_f.iter().map(|c| dot(c.as_ref(), f_current)).collect();

    for cols in (1..=m).rev() {
        let mut a = vec![0.0; cols * cols];
        for i in 0..cols {
            a[i * cols..(i + 1) * cols].copy_from_slice(&gram[i * m..i * m + cols]);
        }
        let trace: f64 = (0..cols).map(|i| a[i * cols + i]).sum();
        let shift = regularization * trace / cols as f64;
        for i in 0..cols {
            a[i * cols + i] += shift;
        }
        if let Some(x) = cholesky_solve(&a, &rhs[..cols], cols) {
            let mut theta = vec![0.0; m];
            theta[..cols].copy_from_slice(&x);
            return Ok(theta);
        }
    }
    Ok(vec![0.0; m])
}

/// `g_current - sum_j theta[j] * delta_g[j]`.
pub fn extrapolate<V: AsRef<[f64]>>(
    g_current: &[f64],
    delta_g: &[V],
    theta: &[f64],
) -> Result<Vec<f64>> {
    if delta_g.len() != theta.len() {
        return Err(Error::invalid(format!(
            "{} coefficients for {} difference vectors",
            theta.len(),
            delta_g.len()
        )));
    }
    let mut out = g_current.to_vec();
    for (col, &t) in delta_g.iter().zip(theta) {
        let col = col.as_ref();
        if col.len() != out.len() {
            return Err(Error::invalid(format!(
                "difference vector has length {}, expected {}",
                col.len(),
                out.len()
            )));
        }
        for (o, d) in out.iter_mut().zip(col) {
            *o -= t * d;
        }
    }
    Ok(out)
}

/// New history depth from the last three energies.
///
/// The ratio of the latest decrease to the one before decides: below `eps1`
/// the depth shrinks by one (not below zero), above `eps2` it grows by one
/// (not above `m_max`). Without a finite positive previous decrease the
/// depth is left alone.
pub fn adjust_m(e_now: f64, e_prev: f64, e_prev_prev: f64, m: usize, cfg: &AAConfig) -> usize {
    let denom = e_prev_prev - e_prev;
    if !denom.is_finite() || denom <= 0.0 {
        return m;
    }
    let ratio = (e_prev - e_now) / denom;
    if ratio.is_nan() {
        m
    } else if ratio < cfg.eps1 {
        m.saturating_sub(1)
    } else if ratio > cfg.eps2 {
        (m + 1).min(cfg.m_max)
    } else {
        m
    }
}

/// History of Lloyd images and residuals plus the bookkeeping the guard and
/// the depth adjustment need.
#[derive(Debug, Clone)]
pub struct AcceleratorState {
    g_history: VecDeque<Vec<f64>>,
    f_history: VecDeque<Vec<f64>>,
    capacity: usize,
    m: usize,
    prev_energy: f64,
    prev_prev_energy: f64,
    fallback: Option<CentroidSet>,
}

impl AcceleratorState {
    pub fn new(cfg: &AAConfig) -> Self {
        Self {
            g_history: VecDeque::with_capacity(cfg.m_max + 1),
            f_history: VecDeque::with_capacity(cfg.m_max + 1),
            capacity: cfg.m_max + 1,
            m: cfg.m0,
            prev_energy: f64::INFINITY,
            prev_prev_energy: f64::INFINITY,
            fallback: None,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn history_len(&self) -> usize {
        self.g_history.len()
    }

    pub fn prev_energy(&self) -> f64 {
        self.prev_energy
    }

    pub fn fallback(&self) -> Option<&CentroidSet> {
        self.fallback.as_ref()
    }

    /// Records a `(G, F)` pair, evicting the oldest beyond `m_max + 1`.
    pub fn push(&mut self, g: Vec<f64>, f: Vec<f64>) {
        if self.g_history.len() == self.capacity {
            self.g_history.pop_front();
            self.f_history.pop_front();
        }
        self.g_history.push_back(g);
        self.f_history.push_back(f);
    }

    pub fn clear(&mut self) {
        self.g_history.clear();
        self.f_history.clear();
    }

    fn record_energy(&mut self, e: f64) {
        self.prev_prev_energy = self.prev_energy;
        self.prev_energy = e;
    }

    fn differences(hist: &VecDeque<Vec<f64>>, depth: usize) -> Vec<Vec<f64>> {
        let n = hist.len();
        (1..=depth)
            .map(|j| {
                hist[n - j]
                    .iter()
                    .zip(&hist[n - j - 1])
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect()
    }

    /// Accelerated iterate from the newest `depth` differences, or `None`
    /// when it is not finite.
    pub fn propose(&self, depth: usize, regularization: f64) -> Result<Option<Vec<f64>>> {
        if depth == 0 || depth >= self.history_len() {
            return Err(Error::invalid(format!(
                "depth {depth} needs more than {} stored iterates",
                self.history_len()
            )));
        }
        let delta_f = Self::differences(&self.f_history, depth);
        let delta_g = Self::differences(&self.g_history, depth);
        let f_now = self.f_history.back().expect("non-empty");
        let g_now = self.g_history.back().expect("non-empty");
        let theta = solve_theta(f_now, &delta_f, regularization)?;
        let next = extrapolate(g_now, &delta_g, &theta)?;
        Ok(next.iter().all(|v| v.is_finite()).then_some(next))
    }
}

/// K-Means with safeguarded Anderson acceleration.
///
/// Converges when an iterate reproduces the previous assignment, or when an
/// update leaves the centroids unchanged. If an extrapolated iterate
/// reproduces the assignment without lowering the energy, the previous
/// iterate is returned instead, so the reported trace never increases.
pub fn aa_kmeans_solve(
    data: &Dataset,
    init: &CentroidSet,
    cfg: &SolverConfig,
    aa: &AAConfig,
) -> Result<SolverReport> {
    init.check_against(data)?;
    cfg.validate()?;
    aa.validate()?;
    exec::with_workers(cfg.workers, || aa_inner(data, init, cfg, aa))?
}

fn aa_inner(
    data: &Dataset,
    init: &CentroidSet,
    cfg: &SolverConfig,
    aa: &AAConfig,
) -> Result<SolverReport> {
    let start = Instant::now();
    let dim = init.dim();
    let mut assigner = Assigner::new(cfg.engine);
    let mut state = AcceleratorState::new(aa);
    let mut centroid_trace = Vec::new();
    let mut rejections = Vec::new();

    let mut cents = init.clone();
    let mut assign = assigner.assign(data, &cents)?;
    let mut iters = 1;
    let mut trace = vec![energy_unchecked(data, assign.labels(), &cents)];
    let mut m_trace = vec![state.m];
    if cfg.record_centroids {
        centroid_trace.push(cents.clone());
    }

    let g0 = update_unchecked(data, &assign, &cents, cfg.empty_cluster);
    let converged = if g0 == cents {
        true
    } else {
        state.push(g0.as_flat().to_vec(), residual(&g0, &cents));
        state.fallback = Some(g0.clone());

        // The iterate about to be assigned, and whether it was extrapolated.
        let mut next = g0;
        let mut extrapolated = false;
        let mut t = 1;
        loop {
            if iters >= cfg.max_iters {
                break false;
            }
            let trial = next;
            let mut trial_assign = assigner.assign(data, &trial)?;
            iters += 1;
            let mut e = energy_unchecked(data, trial_assign.labels(), &trial);
            let mut current = trial;
            let same = trial_assign.labels() == assign.labels();

            if same {
                if !extrapolated || e.total < state.prev_energy {
                    cents = current;
                    assign = trial_assign;
                    trace.push(e);
                    m_trace.push(state.m);
                    if cfg.record_centroids {
                        centroid_trace.push(cents.clone());
                    }
                }
                break true;
            }

            if aa.dynamic {
                state.m = adjust_m(
                    e.total,
                    state.prev_energy,
                    state.prev_prev_energy,
                    state.m,
                    aa,
                );
            }

            // Strict decrease required; NaN energies are rejected too.
            if extrapolated && (e.total >= state.prev_energy || e.total.is_nan()) {
                let fallback = state
                    .fallback
                    .clone()
                    .expect("set before first extrapolation");
                let rejected = e.total;
                trial_assign = assigner.assign(data, &fallback)?;
                e = energy_unchecked(data, trial_assign.labels(), &fallback);
                current = fallback;
                rejections.push(Rejection {
                    iteration: iters,
                    rejected,
                    previous: state.prev_energy,
                    fallback: e.total,
                });
                if aa.clear_history_on_reject {
                    state.clear();
                }
                if trial_assign.labels() == assign.labels() {
                    cents = current;
                    assign = trial_assign;
                    trace.push(e);
                    m_trace.push(state.m);
                    if cfg.record_centroids {
                        centroid_trace.push(cents.clone());
                    }
                    break true;
                }
            }

            cents = current;
            assign = trial_assign;
            trace.push(e);
            m_trace.push(state.m);
            if cfg.record_centroids {
                centroid_trace.push(cents.clone());
            }
            state.record_energy(e.total);

            let g = update_unchecked(data, &assign, &cents, cfg.empty_cluster);
            if g == cents {
                break true;
            }
            state.push(g.as_flat().to_vec(), residual(&g, &cents));
            let depth = state.m.min(t).min(state.history_len() - 1);

            next = g.clone();
            extrapolated = false;
            if depth > 0 {
                if let Some(v) = state.propose(depth, aa.regularization)? {
                    if v.as_slice() != g.as_flat() {
                        next = CentroidSet::from_flat_unchecked(v, dim);
                        extrapolated = true;
                    }
                }
            }
            state.fallback = Some(g);
            t += 1;
        }
    };

    let rejected = rejections.len();
    Ok(SolverReport {
        total_iters: iters,
        accepted_iters: iters - rejected,
        final_energy: *trace.last().expect("at least one iterate"),
        energy_trace: trace,
        final_centroids: cents,
        final_assignment: assign,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        converged,
        m_trace,
        rejections,
        centroid_trace,
        assign_stats: assigner.stats(),
    })
}

fn residual(g: &CentroidSet, c: &CentroidSet) -> Vec<f64> {
    g.as_flat()
        .iter()
        .zip(c.as_flat())
        .map(|(a, b)| a - b)
        .collect()
}
