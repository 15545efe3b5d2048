//! End-to-end runs: ingest, order, compute, perturb, report.
//!
//! A run is fully described by a [`RunConfig`]. The output tree always
//! contains `run-manifest.json`, which records the config, the tool version
//! and a SHA-256 digest of every input, and is enough to reproduce the tree
//! byte-for-byte with [`replay`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{
    build_frequency_table, parse_annotations, FrequencyTable, Granularity, KindFilter, ParseReport, Schema,
    SeverityOrdering,
};
use crate::metrics::{evaluate_table, CiConvention, MetricOptions};
use crate::report::{MetricsDocument, ReportBundle, ReportSource};
use crate::sensitivity::{
    permutation_scenarios, removal_scenarios, scenario_set_correlations, ward_cluster, Dendrogram, RhoMatrix,
    ScenarioResult, ScenarioSpec,
};

pub const MANIFEST_FILE: &str = "run-manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermutationConfig {
    /// Swaps per scenario; one scenario set per entry.
    pub ks: Vec<usize>,
    pub scenarios: usize,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            ks: vec![1, 2, 5],
            scenarios: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemovalConfig {
    pub fractions: Vec<f64>,
    pub trials: usize,
}

impl Default for RemovalConfig {
    fn default() -> Self {
        RemovalConfig {
            fractions: vec![0.1, 0.2, 0.5, 0.8],
            trials: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    /// Best/worst-case columns in the metrics table.
    #[serde(default)]
    pub boundary: bool,
    #[serde(default)]
    pub permutation: Option<PermutationConfig>,
    #[serde(default)]
    pub removal: Option<RemovalConfig>,
    /// Ward dendrogram over category count profiles.
    #[serde(default)]
    pub cluster: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub schema: Schema,
    /// Ordering file; `None` selects the bundled stakeholder ordering.
    #[serde(default)]
    pub severity_order: Option<PathBuf>,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default)]
    pub ci_convention: CiConvention,
    #[serde(default)]
    pub kind_filter: KindFilter,
    /// Gini and classic Lorenz from the ordering file's numeric labels.
    #[serde(default)]
    pub numeric_gini: bool,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub seed: u64,
    /// Output directory. Not part of the manifest.
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>, schema: Schema, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            inputs,
            schema,
            severity_order: None,
            granularity: Granularity::default(),
            ci_convention: CiConvention::default(),
            kind_filter: KindFilter::default(),
            numeric_gini: false,
            sensitivity: SensitivityConfig::default(),
            seed: 0,
            out: out.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.inputs.is_empty() {
            return bad("at least one input file is required".into());
        }
        if self.severity_order.is_none() && !matches!(self.schema, Schema::AiaaicRaw | Schema::AggregatedTriplets) {
            return bad(format!("schema {} has no default ordering; pass a severity-order file", self.schema));
        }
        if let Some(p) = &self.sensitivity.permutation {
            if p.ks.is_empty() || p.ks.contains(&0) || p.scenarios == 0 {
                return bad("permutation sets need swap counts >= 1 and a positive scenario count".into());
            }
        }
        if let Some(r) = &self.sensitivity.removal {
            if r.trials == 0 {
                return bad("removal needs a positive trial count".into());
            }
            if let Some(f) = r.fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
                return bad(format!("removal fraction must lie in [0, 1), got {f}"));
            }
            if r.fractions.is_empty() {
                return bad("removal needs at least one fraction".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    #[serde(default)]
    pub severity_order: Option<FileDigest>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn digest(path: &Path, bytes: &[u8]) -> FileDigest {
    FileDigest {
        path: path.to_path_buf(),
        sha256: Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect(),
    }
}

fn utf8(path: &Path, bytes: Vec<u8>) -> Result<String> {
    String::from_utf8(bytes).map_err(|_| Error::Schema(format!("{} is not valid UTF-8", path.display())))
}

/// Parsed and aggregated inputs of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ordering: SeverityOrdering,
    pub parse_report: ParseReport,
    pub table: FrequencyTable,
    pub manifest: RunManifest,
}

/// Reads, parses and aggregates the inputs named by `config`.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let (ordering, order_digest) = match &config.severity_order {
        Some(p) => {
            let bytes = read(p)?;
            let d = digest(p, &bytes);
            (SeverityOrdering::parse(&utf8(p, bytes)?)?, Some(d))
        }
        None => (SeverityOrdering::default_stakeholders(), None),
    };
    if config.numeric_gini && ordering.labels().is_none() {
        return Err(Error::InvalidArgument(
            "numeric Gini needs an ordering file with name=value severities".into(),
        ));
    }
    let mut records = Vec::new();
    let mut parse_report = ParseReport::default();
    let mut digests = Vec::new();
    for path in &config.inputs {
        let bytes = read(path)?;
        digests.push(digest(path, &bytes));
        let parsed = parse_annotations(&utf8(path, bytes)?, config.schema)?;
        let prefix = |s: String| format!("{}: {s}", path.display());
        parse_report.rows += parsed.report.rows;
        parse_report.records += parsed.report.records;
        parse_report.warnings.extend(parsed.report.warnings.into_iter().map(prefix));
        parse_report.skipped.extend(parsed.report.skipped.into_iter().map(|mut s| {
            s.reason = prefix(s.reason);
            s
        }));
        records.extend(parsed.records);
    }
    records.retain(|r| config.kind_filter.keeps(r));
    if records.is_empty() {
        return Err(Error::EmptyInput(format!("no records left after the {} kind filter", config.kind_filter)));
    }
    let table = build_frequency_table(&records, &ordering, config.granularity)?;
    let manifest = RunManifest {
        tool: "harmrank".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        inputs: digests,
        severity_order: order_digest,
    };
    Ok(Prepared {
        ordering,
        parse_report,
        table,
        manifest,
    })
}

/// Everything computed by a run, as written to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsDocument,
    pub scenarios: Vec<ScenarioResult>,
    pub set_correlations: Option<RhoMatrix>,
    pub dendrogram: Option<Dendrogram>,
    pub bundle: ReportBundle,
}

fn ingest_documents(bundle: &mut ReportBundle, p: &Prepared) -> Result<()> {
    #[derive(Serialize)]
    struct IngestReport<'a> {
        parse: &'a ParseReport,
        table: &'a crate::ingest::TableReport,
    }
    let report = IngestReport {
        parse: &p.parse_report,
        table: &p.table.report,
    };
    bundle.insert("ingest/report.json", serde_json::to_string_pretty(&report)? + "\n");
    bundle.insert("ingest/table.json", serde_json::to_string_pretty(&p.table)? + "\n");
    bundle.insert(MANIFEST_FILE, serde_json::to_string_pretty(&p.manifest)? + "\n");
    Ok(())
}

/// Computes every requested output without touching the file system
/// beyond reading inputs.
pub fn compute(config: &RunConfig) -> Result<RunOutput> {
    let p = prepare(config)?;
    let options = MetricOptions {
        ci_convention: config.ci_convention,
        severities: if config.numeric_gini {
            p.ordering.labels().map(<[f64]>::to_vec)
        } else {
            None
        },
        boundary: config.sensitivity.boundary,
    };
    let metrics = MetricsDocument {
        ci_convention: config.ci_convention,
        units: p.table.units.clone(),
        categories: evaluate_table(&p.table, &options)?,
    };

    let mut scenarios = Vec::new();
    if let Some(perm) = &config.sensitivity.permutation {
        for &k in &perm.ks {
            let spec = ScenarioSpec::permutation(k, perm.scenarios, config.seed);
            scenarios.push(permutation_scenarios(&p.table, &p.ordering, &spec, config.ci_convention)?);
        }
    }
    if let Some(rem) = &config.sensitivity.removal {
        scenarios.extend(removal_scenarios(
            &p.table,
            &rem.fractions,
            rem.trials,
            config.seed,
            config.ci_convention,
        )?);
    }
    let set_correlations = if scenarios.is_empty() {
        None
    } else {
        Some(scenario_set_correlations(&p.table, &scenarios)?)
    };

    let dendrogram = if config.sensitivity.cluster {
        let (names, rows): (Vec<String>, Vec<Vec<f64>>) = p
            .table
            .live_rows()
            .map(|(i, name, _)| (name.to_string(), p.table.counts[i].iter().map(|&c| c as f64).collect()))
            .unzip();
        Some(ward_cluster(&rows, &names)?)
    } else {
        None
    };

    let mut bundle = ReportBundle::assemble(&ReportSource {
        table: &p.table,
        metrics: &metrics,
        scenarios: &scenarios,
        set_correlations: set_correlations.as_ref(),
        dendrogram: dendrogram.as_ref(),
    })?;
    ingest_documents(&mut bundle, &p)?;
    Ok(RunOutput {
        metrics,
        scenarios,
        set_correlations,
        dendrogram,
        bundle,
    })
}

/// Full run: compute, then write the report tree to `config.out`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput> {
    let out = compute(config)?;
    write_tree(&out.bundle, &config.out)?;
    Ok(out)
}

/// Ingest only: the aggregated table, its triplet form and the parse report.
pub fn run_ingest(config: &RunConfig) -> Result<ReportBundle> {
    let p = prepare(config)?;
    let mut bundle = ReportBundle::new();
    bundle.insert("table.csv", p.table.to_triplets_csv()?);
    ingest_documents(&mut bundle, &p)?;
    write_tree(&bundle, &config.out)?;
    Ok(bundle)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let bytes = read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Re-runs the configuration stored in a manifest after checking that the
/// inputs still hash to the recorded digests.
pub fn replay(manifest: &RunManifest, out: &Path) -> Result<RunOutput> {
    let recorded = manifest.inputs.iter().chain(&manifest.severity_order);
    for d in recorded {
        let now = digest(&d.path, &read(&d.path)?);
        if now.sha256 != d.sha256 {
            return Err(Error::InvalidArgument(format!(
                "{} changed since the manifest was written",
                d.path.display()
            )));
        }
    }
    let mut config = manifest.config.clone();
    config.out = out.to_path_buf();
    run_pipeline(&config)
}

/// Writes `bundle` into a sibling staging directory and moves it into
/// place, so a failed run leaves nothing behind. An existing `out` is
/// replaced only if it holds a previous run's manifest.
pub fn write_tree(bundle: &ReportBundle, out: &Path) -> Result<()> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    if out.exists() {
        let is_run = out.is_dir() && out.join(MANIFEST_FILE).is_file();
        let is_empty = out.is_dir() && fs::read_dir(out).map_err(|e| Error::io(out, e))?.next().is_none();
        if !is_run && !is_empty {
            return Err(Error::InvalidArgument(format!(
                "{} exists and is not a previous output directory",
                out.display()
            )));
        }
    }
    let staging = tempfile::Builder::new()
        .prefix(".harmrank-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))?;
    bundle.write_to(staging.path())?;
    if out.exists() {
        fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, out).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        Error::io(out, e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(vec!["x.csv".into()], Schema::AggregatedTriplets, "out");
        assert!(c.validate().is_ok());
        c.sensitivity.removal = Some(RemovalConfig {
            fractions: vec![1.0],
            trials: 5,
        });
        assert!(c.validate().is_err());
        c.sensitivity.removal = None;
        c.sensitivity.permutation = Some(PermutationConfig {
            ks: vec![0],
            scenarios: 5,
        });
        assert!(c.validate().is_err());
        let mit = RunConfig::new(vec!["x.csv".into()], Schema::MitRatings, "out");
        assert!(mit.validate().is_err());
        assert!(RunConfig::new(vec![], Schema::AiaaicRaw, "out").validate().is_err());
    }

    #[test]
    fn manifest_skips_output_dir() {
        let c = RunConfig::new(vec!["x.csv".into()], Schema::AggregatedTriplets, "/tmp/somewhere");
        let text = serde_json::to_string(&c).unwrap();
        assert!(!text.contains("somewhere"));
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.inputs, c.inputs);
    }

    #[test]
    fn refuses_to_replace_foreign_directory() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        fs::create_dir(&out).unwrap();
        fs::write(out.join("keep.txt"), "mine").unwrap();
        let mut b = ReportBundle::new();
        b.insert(MANIFEST_FILE, "{}");
        assert!(write_tree(&b, &out).is_err());
        assert!(out.join("keep.txt").exists());

        let out2 = dir.path().join("out2");
        write_tree(&b, &out2).unwrap();
        b.insert("x.txt", "1");
        write_tree(&b, &out2).unwrap();
        assert_eq!(fs::read_to_string(out2.join("x.txt")).unwrap(), "1");
    }
}
