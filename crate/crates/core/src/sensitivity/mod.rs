//! Robustness of the category ranking.
//!
//! Four probes are provided: best/worst-case AIH per category, random
//! adjacent swaps of the severity ordering, random deletion of a fraction
//! of annotations, and Spearman correlation between the resulting
//! rankings. Ward clustering groups categories by their raw count
//! profiles.
//!
//! Every random scenario or trial `i` is seeded with `base_seed + i` and
//! evaluated independently, so parallel runs reproduce sequential ones.

mod boundary;
mod scenario;
mod spearman;
mod stats;
mod ward;

pub use boundary::{boundary_aih, Boundary};
pub use scenario::{
    boundary_scenario, permutation_scenarios, permutation_scenarios_with_progress, removal_scenario,
    removal_scenario_with_progress, removal_scenarios, run_scenario, scenario_set_correlations, ScenarioKind,
    ScenarioResult, ScenarioSpec,
};
pub use spearman::{average_ranks, spearman_rho, RhoMatrix};
pub use stats::CategoryStats;
pub use ward::{ward_cluster, Dendrogram, Merge};
