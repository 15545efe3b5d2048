//! Deterministic output documents.
//!
//! Delimited tables and plots print every number with four decimals
//! (round-half-even on the binary value). Structured documents are JSON at
//! full precision so they parse back to identical values. Nothing emitted
//! contains a timestamp, and all collections are written in a fixed order,
//! so the same inputs give byte-identical files.

mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{string_enum, FrequencyTable};
use crate::metrics::{CategoryMetrics, CiConvention, Polyline};
use crate::sensitivity::{Dendrogram, RhoMatrix, ScenarioKind, ScenarioResult};

/// Four-decimal rendering; negative zero prints as zero.
pub fn fmt4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt4).unwrap_or_else(|| "NA".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsFormat {
    /// Comma-separated table.
    Delimited,
    /// JSON document.
    Structured,
}

string_enum!(MetricsFormat {
    Delimited => "delimited",
    Structured => "structured",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LorenzKind {
    Derivative,
    Classic,
}

string_enum!(LorenzKind {
    Derivative => "derivative",
    Classic => "classic",
});

/// Structured metrics payload, shared with the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub ci_convention: CiConvention,
    pub units: Vec<String>,
    pub categories: Vec<CategoryMetrics>,
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders ranked metrics. The delimited form has the columns
/// `category, aih, ci, [gini], rank, [best_aih, worst_aih]`; the bracketed
/// ones appear only when every row carries them.
pub fn emit_metrics(doc: &MetricsDocument, format: MetricsFormat) -> Result<String> {
    if doc.categories.is_empty() {
        return Err(Error::EmptyInput("no category metrics to emit".into()));
    }
    let mut rows: Vec<&CategoryMetrics> = doc.categories.iter().collect();
    rows.sort_by_key(|m| m.rank);
    match format {
        MetricsFormat::Structured => {
            let sorted = MetricsDocument {
                categories: rows.into_iter().cloned().collect(),
                ..doc.clone()
            };
            Ok(serde_json::to_string_pretty(&sorted)? + "\n")
        }
        MetricsFormat::Delimited => {
            let gini = rows.iter().all(|m| m.gini.is_some());
            let boundary = rows.iter().all(|m| m.boundary.is_some());
            let mut header: Vec<String> = vec!["category".into(), "aih".into(), "ci".into()];
            if gini {
                header.push("gini".into());
            }
            header.push("rank".into());
            if boundary {
                header.extend(["best_aih".into(), "worst_aih".into()]);
            }
            let mut out = vec![header];
            for m in rows {
                let mut row = vec![m.category.clone(), fmt4(m.aih), fmt4(m.ci)];
                if gini {
                    row.push(fmt_opt(m.gini));
                }
                row.push(m.rank.to_string());
                if let (true, Some(b)) = (boundary, m.boundary) {
                    row.extend([fmt4(b.best), fmt4(b.worst)]);
                }
                out.push(row);
            }
            csv_string(out)
        }
    }
}

/// Parses a document produced by [`emit_metrics`] in structured form.
pub fn parse_metrics_document(text: &str) -> Result<MetricsDocument> {
    Ok(serde_json::from_str(text)?)
}

/// Numbered priority list, highest AIH first.
pub fn emit_ranking(doc: &MetricsDocument) -> String {
    let mut rows: Vec<&CategoryMetrics> = doc.categories.iter().collect();
    rows.sort_by_key(|m| m.rank);
    let mut out = String::new();
    for m in rows {
        let _ = writeln!(out, "{:>2}. {}  (AIH {}, CI {})", m.rank, m.category, fmt4(m.aih), fmt4(m.ci));
    }
    out
}

pub fn emit_lorenz_plot(curves: &[(String, Polyline)], kind: LorenzKind) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::EmptyInput("no curves to plot".into()));
    }
    Ok(match kind {
        LorenzKind::Derivative => svg::lorenz(
            curves,
            "Ordinal Lorenz curves by harm category",
            "cumulative share of annotations",
            "share of severity ranks",
        ),
        LorenzKind::Classic => svg::lorenz(
            curves,
            "Lorenz curves over numeric severity",
            "cumulative share of annotations",
            "cumulative share of severity mass",
        ),
    })
}

pub fn emit_heatmap(table: &FrequencyTable) -> String {
    svg::heatmap(&table.categories, &table.units, &table.counts)
}

pub fn emit_aih_ci_scatter(doc: &MetricsDocument) -> String {
    let mut rows: Vec<&CategoryMetrics> = doc.categories.iter().collect();
    rows.sort_by(|a, b| a.category.cmp(&b.category));
    let points: Vec<(String, f64, f64)> = rows.iter().map(|m| (m.category.clone(), m.ci, m.aih)).collect();
    svg::scatter(&points, "Criticality Index", "AIH", "AIH against Criticality Index")
}

pub fn emit_dendrogram(d: &Dendrogram) -> String {
    svg::dendrogram(d)
}

/// Merge list as a table: `step, left, right, distance, size`, where ids
/// below the leaf count name categories.
pub fn emit_merges(d: &Dendrogram) -> Result<String> {
    let name = |id: usize| d.labels.get(id).cloned().unwrap_or_else(|| format!("cluster {id}"));
    let mut rows = vec![["step", "left", "right", "distance", "size"].map(String::from).to_vec()];
    for (i, m) in d.merges.iter().enumerate() {
        rows.push(vec![
            (d.labels.len() + i).to_string(),
            name(m.left),
            name(m.right),
            fmt4(m.distance),
            m.size.to_string(),
        ]);
    }
    csv_string(rows)
}

/// Symmetric grid with row and column labels; undefined entries print `NA`.
pub fn emit_rho_grid(m: &RhoMatrix) -> Result<String> {
    let mut header = vec![String::new()];
    header.extend(m.labels.iter().cloned());
    let mut rows = vec![header];
    for (label, values) in m.labels.iter().zip(&m.values) {
        let mut row = vec![label.clone()];
        row.extend(values.iter().map(|v| fmt_opt(*v)));
        rows.push(row);
    }
    csv_string(rows)
}

/// File-name-safe form of a scenario label.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        match c {
            c if c.is_ascii_alphanumeric() || c == '.' => out.push(c.to_ascii_lowercase()),
            ' ' | '_' | '-' | '/' if !out.ends_with('_') => out.push('_'),
            _ => {}
        }
    }
    out
}

fn level_label(r: &ScenarioResult) -> String {
    match r.spec.kind {
        ScenarioKind::Boundary => "boundary".into(),
        ScenarioKind::Permutation => format!("k={}", r.spec.k_swaps.unwrap_or(0)),
        ScenarioKind::Removal => format!("{}%", fmt_percent(r.spec.removal_fraction.unwrap_or(0.0))),
    }
}

fn fmt_percent(f: f64) -> String {
    let s = format!("{:.2}", f * 100.0);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn trend_plot(results: &[&ScenarioResult], baseline: Option<&MetricsDocument>, x_title: &str, title: &str) -> String {
    let mut levels = Vec::new();
    if baseline.is_some() {
        levels.push("baseline".to_string());
    }
    levels.extend(results.iter().map(|r| level_label(r)));
    let offset = usize::from(baseline.is_some());
    let mut names: Vec<&String> = results.iter().flat_map(|r| r.per_category.keys()).collect();
    names.sort();
    names.dedup();
    let series: Vec<svg::TrendSeries> = names
        .into_iter()
        .map(|name| {
            let mut points = Vec::new();
            if let Some(m) = baseline.and_then(|b| b.categories.iter().find(|m| &m.category == name)) {
                points.push((0, m.aih, m.aih, m.aih));
            }
            for (i, r) in results.iter().enumerate() {
                if let Some(s) = r.per_category.get(name) {
                    points.push((i + offset, s.mean_aih, s.lo, s.hi));
                }
            }
            svg::TrendSeries {
                name: name.clone(),
                points,
            }
        })
        .collect();
    svg::trend(&levels, &series, x_title, title)
}

/// Summary table, one ρ grid per result, and trend plots for permutation
/// and removal results. Keys are paths relative to the report root.
pub fn emit_scenario_report(
    results: &[ScenarioResult],
    baseline: Option<&MetricsDocument>,
) -> Result<BTreeMap<String, String>> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no scenario results to report".into()));
    }
    let mut docs = BTreeMap::new();
    let mut rows = vec![[
        "scenario",
        "kind",
        "k_swaps",
        "removal_fraction",
        "n",
        "category",
        "mean_aih",
        "std_aih",
        "lo",
        "hi",
        "mean_ci",
        "samples",
        "degenerate_trials",
    ]
    .map(String::from)
    .to_vec()];
    for r in results {
        for (name, s) in &r.per_category {
            rows.push(vec![
                r.label.clone(),
                r.spec.kind.to_string(),
                r.spec.k_swaps.map(|k| k.to_string()).unwrap_or_default(),
                r.spec.removal_fraction.map(fmt4).unwrap_or_default(),
                r.spec.n_scenarios.to_string(),
                name.clone(),
                fmt4(s.mean_aih),
                fmt4(s.std_aih),
                fmt4(s.lo),
                fmt4(s.hi),
                fmt4(s.mean_ci),
                s.samples.to_string(),
                r.degenerate_trials.get(name).copied().unwrap_or(0).to_string(),
            ]);
        }
        docs.insert(format!("scenarios/rho_{}.csv", slug(&r.label)), emit_rho_grid(&r.rank_correlations)?);
    }
    docs.insert("scenarios/summary.csv".into(), csv_string(rows)?);
    docs.insert("scenarios/results.json".into(), serde_json::to_string_pretty(results)? + "\n");

    let of_kind = |k: ScenarioKind| results.iter().filter(|r| r.spec.kind == k).collect::<Vec<_>>();
    let perms = of_kind(ScenarioKind::Permutation);
    if !perms.is_empty() {
        docs.insert(
            "plots/permutation_trend.svg".into(),
            trend_plot(&perms, baseline, "adjacent swaps per scenario", "Mean AIH under severity swaps"),
        );
    }
    let removals = of_kind(ScenarioKind::Removal);
    if !removals.is_empty() {
        docs.insert(
            "plots/removal_trend.svg".into(),
            trend_plot(&removals, baseline, "annotations removed", "Mean AIH under random annotation removal"),
        );
    }
    Ok(docs)
}

/// Everything a report tree is built from.
pub struct ReportSource<'a> {
    pub table: &'a FrequencyTable,
    pub metrics: &'a MetricsDocument,
    pub scenarios: &'a [ScenarioResult],
    /// Baseline against the mean ranking of each scenario set.
    pub set_correlations: Option<&'a RhoMatrix>,
    pub dendrogram: Option<&'a Dendrogram>,
}

/// A set of named documents, written out as a directory tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportBundle {
    documents: BTreeMap<String, String>,
}

impl ReportBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assemble(src: &ReportSource<'_>) -> Result<Self> {
        let mut b = ReportBundle::new();
        let doc = src.metrics;
        b.insert("metrics.csv", emit_metrics(doc, MetricsFormat::Delimited)?);
        b.insert("metrics.json", emit_metrics(doc, MetricsFormat::Structured)?);
        b.insert("ranking.txt", emit_ranking(doc));
        b.insert("table.csv", src.table.to_triplets_csv()?);
        b.insert("plots/heatmap.svg", emit_heatmap(src.table));
        b.insert("plots/aih_ci.svg", emit_aih_ci_scatter(doc));
        let derivative: Vec<(String, Polyline)> = doc
            .categories
            .iter()
            .map(|m| (m.category.clone(), m.lorenz_derivative.clone()))
            .collect();
        b.insert("plots/lorenz_derivative.svg", emit_lorenz_plot(&derivative, LorenzKind::Derivative)?);
        let classic: Vec<(String, Polyline)> = doc
            .categories
            .iter()
            .filter_map(|m| Some((m.category.clone(), m.lorenz_classic.clone()?)))
            .collect();
        if !classic.is_empty() {
            b.insert("plots/lorenz_classic.svg", emit_lorenz_plot(&classic, LorenzKind::Classic)?);
        }
        if !src.scenarios.is_empty() {
            for (path, text) in emit_scenario_report(src.scenarios, Some(doc))? {
                b.insert(path, text);
            }
        }
        if let Some(m) = src.set_correlations {
            b.insert("scenarios/rho_sets.csv", emit_rho_grid(m)?);
        }
        if let Some(d) = src.dendrogram {
            b.insert("clusters.csv", emit_merges(d)?);
            b.insert("plots/dendrogram.svg", emit_dendrogram(d));
        }
        Ok(b)
    }

    pub fn insert(&mut self, path: impl Into<String>, contents: impl Into<String>) {
        self.documents.insert(path.into(), contents.into());
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.documents.get(path).map(String::as_str)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.documents.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Writes every document below `root`, creating directories as needed.
    pub fn write_to(&self, root: &Path) -> Result<()> {
        for (rel, text) in &self.documents {
            let path = root.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{category_metrics, rank_categories, MetricOptions, RankBy};

    fn doc(boundary: bool) -> MetricsDocument {
        let opts = MetricOptions {
            boundary,
            ..Default::default()
        };
        let rows = vec![
            category_metrics("Low", 10, &[0.7, 0.2, 0.1], &opts).unwrap(),
            category_metrics("High & mighty", 10, &[0.1, 0.2, 0.7], &opts).unwrap(),
        ];
        MetricsDocument {
            ci_convention: CiConvention::Survival,
            units: vec!["a".into(), "b".into(), "c".into()],
            categories: rank_categories(rows, RankBy::Aih),
        }
    }

    #[test]
    fn fixed_precision() {
        assert_eq!(fmt4(0.5), "0.5000");
        assert_eq!(fmt4(-0.00001), "0.0000");
        assert_eq!(fmt4(0.84814), "0.8481");
        assert_eq!(fmt4(1.0 / 3.0), "0.3333");
        // 0.00005 is stored slightly above the tie
        assert_eq!(fmt4(0.00005), "0.0001");
        assert_eq!(fmt4(0.03125), "0.0312");
    }

    #[test]
    fn delimited_columns() {
        let plain = emit_metrics(&doc(false), MetricsFormat::Delimited).unwrap();
        assert!(plain.starts_with("category,aih,ci,rank\n"));
        assert!(plain.contains("High & mighty,0.7000,0.8000,1\n"));
        let with_b = emit_metrics(&doc(true), MetricsFormat::Delimited).unwrap();
        assert!(with_b.starts_with("category,aih,ci,rank,best_aih,worst_aih\n"));
    }

    #[test]
    fn structured_round_trip() {
        let d = doc(true);
        let text = emit_metrics(&d, MetricsFormat::Structured).unwrap();
        assert_eq!(parse_metrics_document(&text).unwrap(), d);
    }

    #[test]
    fn empty_metrics_rejected() {
        let mut d = doc(false);
        d.categories.clear();
        assert!(emit_metrics(&d, MetricsFormat::Delimited).is_err());
        assert!(emit_lorenz_plot(&[], LorenzKind::Derivative).is_err());
    }

    #[test]
    fn lorenz_plot_is_stable_and_sorted() {
        let d = doc(false);
        let curves: Vec<_> = d
            .categories
            .iter()
            .map(|m| (m.category.clone(), m.lorenz_derivative.clone()))
            .collect();
        let a = emit_lorenz_plot(&curves, LorenzKind::Derivative).unwrap();
        let mut rev = curves.clone();
        rev.reverse();
        assert_eq!(a, emit_lorenz_plot(&rev, LorenzKind::Derivative).unwrap());
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.find("High &amp; mighty").unwrap() < a.find(">Low<").unwrap());
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("permutation k=1"), "permutation_k1");
        assert_eq!(slug("removal 0.25"), "removal_0.25");
        assert_eq!(fmt_percent(0.1), "10");
        assert_eq!(fmt_percent(0.125), "12.5");
    }

    #[test]
    fn rho_grid_layout() {
        let m = RhoMatrix {
            labels: vec!["baseline".into(), "s 1".into()],
            values: vec![vec![Some(1.0), None], vec![None, Some(1.0)]],
        };
        assert_eq!(emit_rho_grid(&m).unwrap(), ",baseline,s 1\nbaseline,1.0000,NA\ns 1,NA,1.0000\n");
    }
}
