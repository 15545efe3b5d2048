//! Ordinal concentration metrics.
//!
//! For a category with frequencies `f_1..f_M` over units sorted from least
//! to most severe, the AIH score is the area under the ordinal Lorenz curve
//! through `(F_k, k/M)`, where `F_k` is the cumulative frequency. It only
//! depends on the order of the units, never on numeric severity values.
//!
//! The Criticality Index is the mean of the rank survival function,
//! `(E[rank] − 1)/(M − 1)`, and relates to AIH through
//! `AIH = CI·(M−1)/M + 1/(2M)`. The older "ascending" cumulation,
//! `(Σ F_k − 1)/(M − 1)`, equals `1 − CI` and is available for comparison.
//!
//! When numeric severities are available the classic Gini coefficient is
//! computed separately by [`numeric_gini`].

mod lorenz;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use lorenz::{
    check_frequencies, classic_lorenz, classic_lorenz_with, derivative_lorenz, numeric_gini, Polyline,
    SeverityCheck, NORMALIZATION_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::ingest::{string_enum, FrequencyTable};
use crate::sensitivity::{boundary_aih, Boundary};

/// Area under the ordinal Lorenz curve.
///
/// Evaluated as `½ + Σ_k f_k·(k − (M+1)/2) / M`, which equals the trapezoid
/// area of [`derivative_lorenz`]. Ranks equidistant from the middle are
/// paired before summing, so a symmetric row (uniform in particular) gives
/// exactly one half and mirrored rows sum to exactly one.
pub fn aih(f: &[f64]) -> Result<f64> {
    check_frequencies(f)?;
    let m = f.len();
    let mass: f64 = f.iter().sum();
    let centre = (m as f64 + 1.0) / 2.0;
    let tilt: f64 = (0..m / 2)
        .map(|k| (f[m - 1 - k] - f[k]) * ((m - k) as f64 - centre))
        .sum();
    Ok(0.5 + tilt / (m as f64 * mass))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiConvention {
    /// Mean of the survival function over ranks `1..M−1`.
    #[default]
    Survival,
    /// `(Σ_k F_k − 1)/(M − 1)` with ascending cumulation; equals `1 − survival`.
    Ascending,
}

string_enum!(CiConvention {
    Survival => "survival",
    Ascending => "ascending",
});

/// Criticality Index under the survival convention.
pub fn criticality_index(f: &[f64]) -> Result<f64> {
    criticality_index_with(f, CiConvention::Survival)
}

pub fn criticality_index_with(f: &[f64], convention: CiConvention) -> Result<f64> {
    check_frequencies(f)?;
    let m = f.len();
    let ci = match convention {
        CiConvention::Survival => {
            // S_k = Σ_{j>k} f_j for k = 1..M-1, accumulated from the top
            let mut tail = 0.0;
            let mut sum = 0.0;
            for x in f[1..].iter().rev() {
                tail += x;
                sum += tail;
            }
            sum / (m - 1) as f64
        }
        CiConvention::Ascending => {
            let mut cum = 0.0;
            let mut sum = 0.0;
            for x in f {
                cum += x;
                sum += cum;
            }
            (sum - 1.0) / (m - 1) as f64
        }
    };
    Ok(ci)
}

fn check_units(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least two units, got {m}")));
    }
    Ok(())
}

/// Maps a survival-convention CI to AIH.
pub fn aih_from_ci(ci: f64, m: usize) -> Result<f64> {
    check_units(m)?;
    // computed CIs inherit the input normalization slack
    if !(-NORMALIZATION_TOLERANCE..=1.0 + NORMALIZATION_TOLERANCE).contains(&ci) {
        return Err(Error::InvalidArgument(format!("CI must lie in [0, 1], got {ci}")));
    }
    let m = m as f64;
    Ok(ci * (m - 1.0) / m + 1.0 / (2.0 * m))
}

/// Inverse of [`aih_from_ci`].
pub fn ci_from_aih(aih: f64, m: usize) -> Result<f64> {
    check_units(m)?;
    let mf = m as f64;
    let lo = 1.0 / (2.0 * mf);
    if !(lo..=1.0 - lo).contains(&aih) {
        return Err(Error::InvalidArgument(format!(
            "AIH must lie in [{lo}, {}] for {m} units, got {aih}",
            1.0 - lo
        )));
    }
    Ok((aih - lo) * mf / (mf - 1.0))
}

/// Per-category result of the metric stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: String,
    pub units: usize,
    pub annotations: u64,
    pub aih: f64,
    pub ci: f64,
    pub gini: Option<f64>,
    pub lorenz_derivative: Polyline,
    pub lorenz_classic: Option<Polyline>,
    pub boundary: Option<Boundary>,
    pub rank: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MetricOptions {
    pub ci_convention: CiConvention,
    /// Numeric severities per unit; enables the Gini and classic Lorenz.
    pub severities: Option<Vec<f64>>,
    /// Attach best/worst-case AIH.
    pub boundary: bool,
}

/// Metrics for one frequency row.
pub fn category_metrics(
    category: &str,
    annotations: u64,
    f: &[f64],
    options: &MetricOptions,
) -> Result<CategoryMetrics> {
    let lorenz_derivative = derivative_lorenz(f)?;
    let (gini, lorenz_classic) = match &options.severities {
        Some(s) => (
            Some(numeric_gini(f, s)?),
            classic_lorenz_with(f, s, SeverityCheck::Relaxed).ok(),
        ),
        None => (None, None),
    };
    Ok(CategoryMetrics {
        category: category.to_string(),
        units: f.len(),
        annotations,
        aih: aih(f)?,
        ci: criticality_index_with(f, options.ci_convention)?,
        gini,
        lorenz_derivative,
        lorenz_classic,
        boundary: if options.boundary { Some(boundary_aih(f)?) } else { None },
        rank: 0,
    })
}

/// Metrics for every non-degenerate row of `table`, ranked by AIH.
pub fn evaluate_table(table: &FrequencyTable, options: &MetricOptions) -> Result<Vec<CategoryMetrics>> {
    let metrics = table
        .live_rows()
        .map(|(i, name, f)| category_metrics(name, table.total(i), f, options))
        .collect::<Result<Vec<_>>>()?;
    if metrics.is_empty() {
        return Err(Error::Degenerate("no category has a positive total".into()));
    }
    Ok(rank_categories(metrics, RankBy::Aih))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBy {
    #[default]
    Aih,
    Ci,
}

string_enum!(RankBy {
    Aih => "aih",
    Ci => "ci",
});

/// Sorts by descending score, ties broken by ascending name, and fills in
/// `rank` as 1..N.
pub fn rank_categories(mut metrics: Vec<CategoryMetrics>, by: RankBy) -> Vec<CategoryMetrics> {
    let score = |m: &CategoryMetrics| match by {
        RankBy::Aih => m.aih,
        RankBy::Ci => m.ci,
    };
    metrics.sort_by(|a, b| {
        score(b)
            .partial_cmp(&score(a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.category.cmp(&b.category))
    });
    for (i, m) in metrics.iter_mut().enumerate() {
        m.rank = i + 1;
    }
    metrics
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn aih_examples() {
        assert_eq!(aih(&[1.0 / 9.0; 9]).unwrap(), 0.5);
        let mut top = [0.0; 9];
        top[8] = 1.0;
        close(aih(&top).unwrap(), 17.0 / 18.0, 1e-15);
        close(aih(&[0.2, 0.3, 0.5]).unwrap(), 0.6, 1e-15);
    }

    #[test]
    fn ci_examples() {
        close(criticality_index(&[0.25; 4]).unwrap(), 0.5, 1e-15);
        assert_eq!(criticality_index(&[0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(criticality_index(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        close(criticality_index(&[0.2, 0.3, 0.5]).unwrap(), 0.65, 1e-15);
    }

    #[test]
    fn ascending_convention_is_complement() {
        let f = [0.2, 0.3, 0.5];
        let asc = criticality_index_with(&f, CiConvention::Ascending).unwrap();
        close(asc, 0.35, 1e-15);
        assert_eq!(criticality_index_with(&[0.0, 0.0, 1.0], CiConvention::Ascending).unwrap(), 0.0);
    }

    #[test]
    fn ci_aih_map() {
        let a = aih_from_ci(0.89, 9).unwrap();
        close(a, 0.89 * 8.0 / 9.0 + 1.0 / 18.0, 1e-15);
        assert_eq!(format!("{a:.2}"), "0.85");
        assert_eq!(aih_from_ci(0.5, 9).unwrap(), 0.5);
        close(aih_from_ci(0.0, 7).unwrap(), 1.0 / 14.0, 1e-15);
        assert!(aih_from_ci(1.2, 9).is_err());
        assert!(aih_from_ci(0.5, 1).is_err());
        close(ci_from_aih(a, 9).unwrap(), 0.89, 1e-12);
        assert!(ci_from_aih(0.01, 9).is_err());
    }

    fn named(name: &str, aih: f64) -> CategoryMetrics {
        CategoryMetrics {
            category: name.into(),
            units: 2,
            annotations: 1,
            aih,
            ci: aih,
            gini: None,
            lorenz_derivative: Polyline::new(vec![]).unwrap(),
            lorenz_classic: None,
            boundary: None,
            rank: 0,
        }
    }

    #[test]
    fn ranking_ties_alphabetical() {
        let ranked = rank_categories(vec![named("b", 0.5), named("c", 0.7), named("a", 0.5)], RankBy::Aih);
        let names: Vec<_> = ranked.iter().map(|m| (m.category.as_str(), m.rank)).collect();
        assert_eq!(names, [("c", 1), ("a", 2), ("b", 3)]);
        let single = rank_categories(vec![named("x", 0.1)], RankBy::Ci);
        assert_eq!(single[0].rank, 1);
    }

    #[test]
    fn metrics_with_severities() {
        let opts = MetricOptions {
            severities: Some(vec![1.0, 3.0]),
            boundary: true,
            ..Default::default()
        };
        let m = category_metrics("x", 2, &[0.5, 0.5], &opts).unwrap();
        close(m.gini.unwrap(), 0.25, 1e-12);
        assert!(m.lorenz_classic.is_some());
        let b = m.boundary.unwrap();
        close(b.best + b.worst, 1.0, 1e-12);
    }
}
