//! K-Means clustering with Lloyd's algorithm and a safeguarded Anderson
//! accelerated variant that adapts its history depth.
//!
//! Lloyd's assignment-plus-update step is treated as a fixed-point map on
//! the flattened centroid matrix. [`aa_kmeans_solve`] extrapolates from the
//! recent history of that map, keeps an extrapolated iterate only when it
//! lowers the clustering energy, and grows or shrinks the history depth from
//! the ratio of successive energy decreases.
//!
//! With the default `parallel` feature the per-sample passes (assignment,
//! energy, update) run on rayon. Work is split into fixed chunks and reduced
//! in chunk order, so results do not depend on the number of threads.

pub mod anderson;
pub mod assign;
mod error;
mod exec;
pub mod harness;
pub mod init;
pub mod io;
pub mod lloyd;
pub mod model;

pub use anderson::{
    aa_kmeans_solve, adjust_m, extrapolate, solve_theta, AAConfig, AcceleratorState,
};
pub use assign::{
    assign_bounded, assign_naive, centroid_drift, AssignStats, Assigner, BoundsState, Engine,
};
pub use error::{Error, Result};
pub use init::{
    init_from_file, init_kmeanspp, init_random, kmeanspp_indices, rng_from_seed, SeedKind, Seeder,
};
pub use lloyd::{
    g_map, lloyd_solve, update_step, EmptyClusterPolicy, Rejection, SolverConfig, SolverReport,
};
pub use model::{energy, Assignment, CentroidSet, Dataset, Energy};
