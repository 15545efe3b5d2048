use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AnnotationRecord, Granularity, SeverityOrdering};

/// Separator between category and subcategory in subcategory-level row labels.
pub const SUBCATEGORY_JOIN: &str = " / ";

/// What happened to records that did not land in a table cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableReport {
    /// Total weight per unit name that the ordering does not contain.
    pub unmapped: BTreeMap<String, u64>,
    /// Weight of records dropped at subcategory granularity for lacking one.
    pub missing_subcategory: u64,
    /// Rows whose total count is zero; they carry no frequencies.
    pub degenerate: Vec<String>,
}

/// Counts and conditional frequencies per (row, severity-ranked unit).
///
/// Columns follow the severity ordering, least severe first. Rows are
/// sorted by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub categories: Vec<String>,
    pub units: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// `None` for zero-total rows.
    pub freqs: Vec<Option<Vec<f64>>>,
    #[serde(default)]
    pub report: TableReport,
}

fn row_frequencies(counts: &[u64]) -> Option<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    (total > 0).then(|| counts.iter().map(|&c| c as f64 / total as f64).collect())
}

impl FrequencyTable {
    /// Assembles a table from a count matrix, recomputing frequencies and the
    /// degenerate-row list.
    pub fn from_counts(categories: Vec<String>, units: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if categories.len() != counts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} category names for {} count rows",
                categories.len(),
                counts.len()
            )));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != units.len()) {
            return Err(Error::InvalidArgument(format!(
                "count row of length {} for {} units",
                row.len(),
                units.len()
            )));
        }
        let freqs: Vec<Option<Vec<f64>>> = counts.iter().map(|r| row_frequencies(r)).collect();
        let degenerate = categories
            .iter()
            .zip(&freqs)
            .filter(|(_, f)| f.is_none())
            .map(|(c, _)| c.clone())
            .collect();
        Ok(FrequencyTable {
            categories,
            units,
            counts,
            freqs,
            report: TableReport {
                degenerate,
                ..TableReport::default()
            },
        })
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_index(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    /// Rows with a positive total, as `(name, frequencies)`.
    pub fn live_rows(&self) -> impl Iterator<Item = (usize, &str, &[f64])> {
        self.categories
            .iter()
            .zip(&self.freqs)
            .enumerate()
            .filter_map(|(i, (c, f))| f.as_deref().map(|f| (i, c.as_str(), f)))
    }

    /// Reorders columns to follow `ordering`, which must rank exactly the
    /// same units.
    pub fn reorder(&self, ordering: &SeverityOrdering) -> Result<Self> {
        let current = SeverityOrdering::new(self.units.iter().cloned())?;
        current
            .check_same_units(ordering)
            .map_err(|m| Error::Ordering(m.to_string()))?;
        let source: Vec<usize> = ordering
            .units()
            .iter()
            .map(|u| current.position(u).expect("same unit set"))
            .collect();
        let counts = self
            .counts
            .iter()
            .map(|row| source.iter().map(|&j| row[j]).collect())
            .collect();
        let mut table = FrequencyTable::from_counts(
            self.categories.clone(),
            ordering.units().to_vec(),
            counts,
        )?;
        table.report.unmapped = self.report.unmapped.clone();
        table.report.missing_subcategory = self.report.missing_subcategory;
        Ok(table)
    }

    /// Expands the counts into unit-weight records in row-major order.
    pub fn expand_records(&self) -> Vec<AnnotationRecord> {
        let mut out = Vec::with_capacity(self.grand_total() as usize);
        for (category, row) in self.categories.iter().zip(&self.counts) {
            for (unit, &n) in self.units.iter().zip(row) {
                for _ in 0..n {
                    out.push(AnnotationRecord::new(category.clone(), unit.clone(), 1));
                }
            }
        }
        out
    }

    /// Emits the table in the `aggregated_triplets` schema, skipping empty
    /// cells.
    pub fn to_triplets_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(["category", "unit", "weight"])?;
        for (category, row) in self.categories.iter().zip(&self.counts) {
            for (unit, &n) in self.units.iter().zip(row) {
                if n > 0 {
                    w.write_record([category.as_str(), unit.as_str(), &n.to_string()])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Aggregates records into a frequency table over `ordering`.
///
/// Units missing from the ordering are tallied in the report's unmapped
/// bucket. A row whose records were all unmapped stays in the table with a
/// zero total and is listed as degenerate.
pub fn build_frequency_table(
    records: &[AnnotationRecord],
    ordering: &SeverityOrdering,
    granularity: Granularity,
) -> Result<FrequencyTable> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no annotation records".into()));
    }
    let m = ordering.len();
    let mut rows: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut unmapped: BTreeMap<String, u64> = BTreeMap::new();
    let mut missing_subcategory = 0;
    for r in records {
        let label = match granularity {
            Granularity::Category => r.category.clone(),
            Granularity::Subcategory => match &r.subcategory {
                Some(sub) => format!("{}{SUBCATEGORY_JOIN}{}", r.category, sub),
                None => {
                    missing_subcategory += r.weight;
                    continue;
                }
            },
        };
        let row = rows.entry(label).or_insert_with(|| vec![0; m]);
        match ordering.position(&r.unit) {
            Some(j) => row[j] += r.weight,
            None => *unmapped.entry(r.unit.clone()).or_default() += r.weight,
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(
            "no record carries a subcategory; subcategory granularity has no rows".into(),
        ));
    }
    let (categories, counts): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let mut table = FrequencyTable::from_counts(categories, ordering.units().to_vec(), counts)?;
    table.report.unmapped = unmapped;
    table.report.missing_subcategory = missing_subcategory;
    Ok(table)
}
