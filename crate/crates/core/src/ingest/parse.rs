use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::taxonomy::{Membership, Taxonomy};
use crate::ingest::{AnnotationRecord, HarmKind, Schema};

/// Separator between stakeholders listed in one cell.
const STAKEHOLDER_SEPARATOR: char = ';';

/// A row that produced no records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub rows: usize,
    pub records: usize,
    pub skipped: Vec<SkippedRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParsedAnnotations {
    pub records: Vec<AnnotationRecord>,
    pub report: ParseReport,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Field {
    Category,
    Subcategory,
    Unit,
    Weight,
    Kind,
    Incident,
    Annotator,
    Timestamp,
    Notes,
    Severity,
}

struct Column {
    field: Field,
    aliases: &'static [&'static str],
    required: bool,
}

const fn col(field: Field, aliases: &'static [&'static str], required: bool) -> Column {
    Column {
        field,
        aliases,
        required,
    }
}

const WEIGHT_ALIASES: &[&str] = &["weight", "freq", "frequency", "count"];

use Field::*;

const TRIPLET_COLUMNS: &[Column] = &[
    col(Category, &["category", "harm_category"], true),
    col(Unit, &["unit", "stakeholder", "stakeholder_group", "stakeholders"], true),
    col(Weight, WEIGHT_ALIASES, true),
    col(Subcategory, &["subcategory", "harm_subcategory"], false),
    col(Kind, &["kind"], false),
    col(Incident, &["incident_id"], false),
];

const AIAAIC_COLUMNS: &[Column] = &[
    col(Incident, &["incident_id"], true),
    col(Unit, &["stakeholders", "stakeholder"], true),
    col(Category, &["harm_category"], true),
    col(Subcategory, &["harm_subcategory"], false),
    col(Kind, &["harm_type"], false),
    col(Timestamp, &["datetime"], false),
    col(Annotator, &["annotator_id"], false),
    col(Notes, &["notes"], false),
];

const MIT_COLUMNS: &[Column] = &[
    col(Category, &["harm_category", "category", "domain"], true),
    col(Unit, &["rating", "severity"], true),
    col(Weight, WEIGHT_ALIASES, false),
    col(Incident, &["incident_id"], false),
];

const OECD_COLUMNS: &[Column] = &[
    col(Category, &["harm_type", "harm_category", "category"], true),
    col(
        Unit,
        &["stakeholder", "stakeholders", "harmed_entity", "affected_stakeholders"],
        true,
    ),
    col(Severity, &["severity"], false),
    col(Weight, WEIGHT_ALIASES, false),
    col(Incident, &["incident_id"], false),
];

fn columns(schema: Schema) -> &'static [Column] {
    match schema {
        Schema::AggregatedTriplets => TRIPLET_COLUMNS,
        Schema::AiaaicRaw => AIAAIC_COLUMNS,
        Schema::MitRatings => MIT_COLUMNS,
        Schema::OecdMonitor => OECD_COLUMNS,
    }
}

fn normalize_header(h: &str) -> String {
    let h = h.trim().trim_start_matches('\u{feff}').trim_end_matches('.').to_lowercase();
    let mut out = String::with_capacity(h.len());
    for c in h.chars() {
        let c = if matches!(c, ' ' | '-' | '/') { '_' } else { c };
        if c == '_' && out.ends_with('_') {
            continue;
        }
        out.push(c);
    }
    out
}

/// Comma unless the header line contains a tab.
fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Parses an annotation file, checking subcategories against the bundled
/// harm taxonomy.
pub fn parse_annotations(text: &str, schema: Schema) -> Result<ParsedAnnotations> {
    parse_annotations_with(text, schema, &Taxonomy::bundled())
}

pub fn parse_annotations_with(
    text: &str,
    schema: Schema,
    taxonomy: &Taxonomy,
) -> Result<ParsedAnnotations> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput("annotation file is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(text))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers: Vec<String> = reader.headers()?.iter().map(normalize_header).collect();
    let mut positions: HashMap<Field, usize> = HashMap::new();
    let mut missing = Vec::new();
    for column in columns(schema) {
        match headers
            .iter()
            .position(|h| column.aliases.contains(&h.as_str()))
        {
            Some(idx) => {
                positions.insert(column.field, idx);
            }
            None if column.required => missing.push(column.aliases[0]),
            None => {}
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "{schema} input is missing required column(s): {}",
            missing.join(", ")
        )));
    }

    let mut report = ParseReport::default();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        report.rows += 1;
        let get = |f: Field| -> Option<&str> {
            positions
                .get(&f)
                .and_then(|&i| row.get(i))
                .filter(|s| !s.is_empty())
        };
        let mut skip = |reason: String| report.skipped.push(SkippedRow { line, reason });

        let Some(category) = get(Field::Category) else {
            skip("empty category".into());
            continue;
        };
        let Some(unit_cell) = get(Field::Unit) else {
            skip(match schema {
                Schema::MitRatings => "empty rating".into(),
                _ => "empty stakeholder".into(),
            });
            continue;
        };
        let weight = match get(Field::Weight) {
            None if positions.contains_key(&Field::Weight) && schema == Schema::AggregatedTriplets => {
                skip("empty weight".into());
                continue;
            }
            None => 1,
            Some(w) => match w.parse::<u64>() {
                Ok(0) => {
                    skip("weight must be at least 1, got 0".into());
                    continue;
                }
                Ok(w) => w,
                Err(_) => {
                    skip(format!("unparseable weight {w:?}"));
                    continue;
                }
            },
        };
        let kind = match get(Field::Kind) {
            None => None,
            Some(k) => match HarmKind::parse(k) {
                Some(kind) => Some(kind),
                None => {
                    report
                        .warnings
                        .push(format!("line {line}: unknown harm type {k:?}, kept without kind"));
                    None
                }
            },
        };
        let subcategory = get(Field::Subcategory).map(str::to_string);
        if let Some(sub) = &subcategory {
            if !taxonomy.is_empty() {
                match taxonomy.check(category, sub) {
                    Membership::Member => {}
                    Membership::UnknownCategory => report.warnings.push(format!(
                        "line {line}: category {category:?} is not in the taxonomy"
                    )),
                    Membership::UnknownSubcategory => report.warnings.push(format!(
                        "line {line}: subcategory {sub:?} does not belong to {category:?}"
                    )),
                }
            }
        }

        let units: Vec<&str> = if schema == Schema::MitRatings {
            vec![unit_cell]
        } else {
            unit_cell
                .split(STAKEHOLDER_SEPARATOR)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect()
        };
        if units.is_empty() {
            skip("empty stakeholder".into());
            continue;
        }
        for unit in units {
            records.push(AnnotationRecord {
                incident_id: get(Field::Incident).map(str::to_string),
                category: category.to_string(),
                subcategory: subcategory.clone(),
                unit: unit.to_string(),
                weight,
                kind,
                annotator_id: get(Field::Annotator).map(str::to_string),
                timestamp: get(Field::Timestamp).map(str::to_string),
                notes: get(Field::Notes).map(str::to_string),
            });
        }
    }
    report.records = records.len();
    Ok(ParsedAnnotations { records, report })
}
