use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{boundary_aih, CategoryStats, RhoMatrix};
use crate::error::{Error, Result};
use crate::ingest::{string_enum, FrequencyTable, SeverityOrdering};
use crate::metrics::{aih, criticality_index_with, CiConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Boundary,
    Permutation,
    Removal,
}

string_enum!(ScenarioKind {
    Boundary => "boundary",
    Permutation => "permutation",
    Removal => "removal",
});

/// One perturbation experiment. Scenario or trial `i` draws from the seed
/// `base_seed + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_swaps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removal_fraction: Option<f64>,
    #[serde(alias = "trials", default = "one")]
    pub n_scenarios: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn one() -> usize {
    1
}

impl ScenarioSpec {
    pub fn boundary() -> Self {
        ScenarioSpec {
            kind: ScenarioKind::Boundary,
            k_swaps: None,
            removal_fraction: None,
            n_scenarios: 1,
            base_seed: 0,
        }
    }

    pub fn permutation(k_swaps: usize, n_scenarios: usize, base_seed: u64) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::Permutation,
            k_swaps: Some(k_swaps),
            removal_fraction: None,
            n_scenarios,
            base_seed,
        }
    }

    pub fn removal(fraction: f64, trials: usize, base_seed: u64) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::Removal,
            k_swaps: None,
            removal_fraction: Some(fraction),
            n_scenarios: trials,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_scenarios == 0 {
            return bad("scenario count must be positive".into());
        }
        match self.kind {
            ScenarioKind::Boundary => {
                if self.k_swaps.is_some() || self.removal_fraction.is_some() {
                    return bad("boundary scenarios take neither k_swaps nor removal_fraction".into());
                }
            }
            ScenarioKind::Permutation => {
                if self.removal_fraction.is_some() {
                    return bad("permutation scenarios take no removal_fraction".into());
                }
                match self.k_swaps {
                    Some(k) if k >= 1 => {}
                    _ => return bad("permutation scenarios need k_swaps >= 1".into()),
                }
            }
            ScenarioKind::Removal => {
                if self.k_swaps.is_some() {
                    return bad("removal scenarios take no k_swaps".into());
                }
                match self.removal_fraction {
                    Some(f) if (0.0..1.0).contains(&f) => {}
                    Some(f) => return bad(format!("removal fraction must lie in [0, 1), got {f}")),
                    None => return bad("removal scenarios need removal_fraction".into()),
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.kind {
            ScenarioKind::Boundary => "boundary".into(),
            ScenarioKind::Permutation => format!("permutation k={}", self.k_swaps.unwrap_or(0)),
            ScenarioKind::Removal => format!("removal {}", self.removal_fraction.unwrap_or(0.0)),
        }
    }

    fn seed(&self, i: usize) -> u64 {
        self.base_seed.wrapping_add(i as u64)
    }
}

/// Aggregated outcome of a [`ScenarioSpec`].
///
/// For boundary specs `lo`/`hi` hold the best and worst case and the mean
/// is the baseline. `rank_correlations` compares the baseline ranking
/// (first row) with every scenario or trial ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub label: String,
    pub per_category: BTreeMap<String, CategoryStats>,
    /// Trials in which a category had no remaining annotations.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub degenerate_trials: BTreeMap<String, usize>,
    pub rank_correlations: RhoMatrix,
}

/// AIH and CI of every live category in one perturbed table.
struct Outcome {
    aih: Vec<Option<f64>>,
    ci: Vec<Option<f64>>,
}

fn evaluate(table: &FrequencyTable, names: &[String], ci: CiConvention) -> Result<Outcome> {
    let mut out = Outcome {
        aih: vec![None; names.len()],
        ci: vec![None; names.len()],
    };
    for (slot, name) in names.iter().enumerate() {
        let row = table.row_index(name).expect("perturbations keep every row");
        if let Some(f) = &table.freqs[row] {
            out.aih[slot] = Some(aih(f)?);
            out.ci[slot] = Some(criticality_index_with(f, ci)?);
        }
    }
    Ok(out)
}

fn live_names(table: &FrequencyTable) -> Vec<String> {
    table.live_rows().map(|(_, name, _)| name.to_string()).collect()
}

fn summarize(
    spec: &ScenarioSpec,
    names: &[String],
    baseline: &Outcome,
    outcomes: &[Outcome],
    row_label: &str,
) -> ScenarioResult {
    let mut per_category = BTreeMap::new();
    let mut degenerate_trials = BTreeMap::new();
    for (slot, name) in names.iter().enumerate() {
        let (aihs, cis): (Vec<f64>, Vec<f64>) = outcomes
            .iter()
            .filter_map(|o| Some((o.aih[slot]?, o.ci[slot]?)))
            .unzip();
        let dropped = outcomes.len() - aihs.len();
        if dropped > 0 {
            degenerate_trials.insert(name.clone(), dropped);
        }
        if !aihs.is_empty() {
            per_category.insert(name.clone(), CategoryStats::from_samples(&aihs, &cis));
        }
    }
    let mut labels = vec!["baseline".to_string()];
    labels.extend((1..=outcomes.len()).map(|i| format!("{row_label} {i}")));
    let scores: Vec<Vec<Option<f64>>> = std::iter::once(&baseline.aih)
        .chain(outcomes.iter().map(|o| &o.aih))
        .cloned()
        .collect();
    ScenarioResult {
        spec: spec.clone(),
        label: spec.label(),
        per_category,
        degenerate_trials,
        rank_correlations: RhoMatrix::from_scores(labels, &scores),
    }
}

/// Runs `count` independent evaluations in parallel, returning them in
/// index order and reporting each completion to `progress`.
fn run_trials<F>(count: usize, progress: &(dyn Fn(usize) + Sync), trial: F) -> Result<Vec<Outcome>>
where
    F: Fn(usize) -> Result<Outcome> + Sync,
{
    let done = AtomicUsize::new(0);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let out = trial(i);
            progress(done.fetch_add(1, AtomicOrdering::Relaxed) + 1);
            out
        })
        .collect()
}

/// Best/worst case AIH per category.
pub fn boundary_scenario(table: &FrequencyTable, ci: CiConvention) -> Result<ScenarioResult> {
    let spec = ScenarioSpec::boundary();
    let names = live_names(table);
    let baseline = evaluate(table, &names, ci)?;
    let mut best = Vec::with_capacity(names.len());
    let mut worst = Vec::with_capacity(names.len());
    let mut per_category = BTreeMap::new();
    for (slot, (_, name, f)) in table.live_rows().enumerate() {
        let b = boundary_aih(f)?;
        let base = baseline.aih[slot].expect("live row");
        best.push(Some(b.best));
        worst.push(Some(b.worst));
        per_category.insert(
            name.to_string(),
            CategoryStats {
                mean_aih: base,
                std_aih: 0.0,
                lo: b.best.min(base),
                hi: b.worst.max(base),
                mean_ci: baseline.ci[slot].expect("live row"),
                samples: 1,
            },
        );
    }
    let labels = vec!["baseline".into(), "best".into(), "worst".into()];
    Ok(ScenarioResult {
        label: spec.label(),
        spec,
        per_category,
        degenerate_trials: BTreeMap::new(),
        rank_correlations: RhoMatrix::from_scores(labels, &[baseline.aih, best, worst]),
    })
}

/// Random adjacent-rank swaps of the severity ordering.
///
/// Each scenario applies `k_swaps` swaps in sequence; every swap picks rank
/// pair `(r, r+1)` uniformly, independently of earlier draws.
pub fn permutation_scenarios(
    table: &FrequencyTable,
    ordering: &SeverityOrdering,
    spec: &ScenarioSpec,
    ci: CiConvention,
) -> Result<ScenarioResult> {
    permutation_scenarios_with_progress(table, ordering, spec, ci, &|_| {})
}

pub fn permutation_scenarios_with_progress(
    table: &FrequencyTable,
    ordering: &SeverityOrdering,
    spec: &ScenarioSpec,
    ci: CiConvention,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<ScenarioResult> {
    spec.validate()?;
    let k = match (spec.kind, spec.k_swaps) {
        (ScenarioKind::Permutation, Some(k)) => k,
        _ => return Err(Error::InvalidArgument(format!("expected a permutation spec, got {}", spec.kind))),
    };
    let m = ordering.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("permutations need at least two units, got {m}")));
    }
    let base_table = table.reorder(ordering)?;
    let names = live_names(&base_table);
    let baseline = evaluate(&base_table, &names, ci)?;
    let outcomes = run_trials(spec.n_scenarios, progress, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed(i));
        let mut perturbed = ordering.clone();
        for _ in 0..k {
            perturbed = perturbed.swap_adjacent(rng.random_range(0..m - 1))?;
        }
        evaluate(&base_table.reorder(&perturbed)?, &names, ci)
    })?;
    Ok(summarize(spec, &names, &baseline, &outcomes, "scenario"))
}

/// Random deletion of a fixed fraction of annotations.
///
/// The table is expanded into unit-weight records (row-major), and each
/// trial deletes `⌊fraction · total⌋` of them uniformly without
/// replacement before recomputing every category. Categories emptied by a
/// trial are left out of that trial's aggregates.
pub fn removal_scenario(table: &FrequencyTable, spec: &ScenarioSpec, ci: CiConvention) -> Result<ScenarioResult> {
    removal_scenario_with_progress(table, spec, ci, &|_| {})
}

pub fn removal_scenario_with_progress(
    table: &FrequencyTable,
    spec: &ScenarioSpec,
    ci: CiConvention,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<ScenarioResult> {
    spec.validate()?;
    let fraction = match (spec.kind, spec.removal_fraction) {
        (ScenarioKind::Removal, Some(f)) => f,
        _ => return Err(Error::InvalidArgument(format!("expected a removal spec, got {}", spec.kind))),
    };
    let names = live_names(table);
    if names.is_empty() {
        return Err(Error::Degenerate("no category has a positive total".into()));
    }
    let baseline = evaluate(table, &names, ci)?;
    let cells: Vec<(usize, usize)> = table
        .counts
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .flat_map(move |(j, &n)| std::iter::repeat((i, j)).take(n as usize))
        })
        .collect();
    let total = cells.len();
    let delete = (fraction * total as f64).floor() as usize;
    let outcomes = run_trials(spec.n_scenarios, progress, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed(t));
        let mut counts = table.counts.clone();
        for idx in index::sample(&mut rng, total, delete) {
            let (i, j) = cells[idx];
            counts[i][j] -= 1;
        }
        let trial = FrequencyTable::from_counts(table.categories.clone(), table.units.clone(), counts)?;
        evaluate(&trial, &names, ci)
    })?;
    Ok(summarize(spec, &names, &baseline, &outcomes, "trial"))
}

/// One removal result per fraction, all sharing the same trial seeds.
pub fn removal_scenarios(
    table: &FrequencyTable,
    fractions: &[f64],
    trials: usize,
    base_seed: u64,
    ci: CiConvention,
) -> Result<Vec<ScenarioResult>> {
    fractions
        .iter()
        .map(|&f| removal_scenario(table, &ScenarioSpec::removal(f, trials, base_seed), ci))
        .collect()
}

/// Runs any spec against `table`, whose columns follow `ordering`.
pub fn run_scenario(
    table: &FrequencyTable,
    ordering: &SeverityOrdering,
    spec: &ScenarioSpec,
    ci: CiConvention,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<ScenarioResult> {
    spec.validate()?;
    match spec.kind {
        ScenarioKind::Boundary => {
            let out = boundary_scenario(table, ci)?;
            progress(1);
            Ok(out)
        }
        ScenarioKind::Permutation => permutation_scenarios_with_progress(table, ordering, spec, ci, progress),
        ScenarioKind::Removal => removal_scenario_with_progress(table, spec, ci, progress),
    }
}

/// Correlates the baseline ranking with the mean-AIH ranking of each result.
pub fn scenario_set_correlations(table: &FrequencyTable, results: &[ScenarioResult]) -> Result<RhoMatrix> {
    let names = live_names(table);
    let baseline = evaluate(table, &names, CiConvention::Survival)?;
    let mut labels = vec!["baseline".to_string()];
    let mut scores = vec![baseline.aih];
    for r in results {
        labels.push(r.label.clone());
        scores.push(names.iter().map(|n| r.per_category.get(n).map(|s| s.mean_aih)).collect());
    }
    Ok(RhoMatrix::from_scores(labels, &scores))
}
