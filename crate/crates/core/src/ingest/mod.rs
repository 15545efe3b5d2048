//! Annotation ingestion: schema adapters, severity orderings and frequency
//! tables.
//!
//! Four input shapes are supported. `aiaaic_raw` holds one annotation per
//! row with possibly several stakeholders in one cell; those rows are
//! exploded into one record per stakeholder. `aggregated_triplets` holds
//! pre-counted `(category, unit, weight)` rows. `mit_ratings` has no
//! stakeholders, so the rating level plays the role of the ranked unit.
//! `oecd_monitor` is shaped like the raw AIAAIC data with harm type in place
//! of category.

mod ordering;
mod parse;
mod table;
mod taxonomy;

use serde::{Deserialize, Serialize};

pub use ordering::{SeverityOrdering, UnitMismatch};
pub use parse::{parse_annotations, parse_annotations_with, ParseReport, ParsedAnnotations, SkippedRow};
pub use table::{build_frequency_table, FrequencyTable, TableReport, SUBCATEGORY_JOIN};
pub use taxonomy::{Membership, Taxonomy};


/// Whether a harm happened or was only judged possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmKind {
    Actual,
    Potential,
}

impl HarmKind {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "actual" => Some(HarmKind::Actual),
            "potential" => Some(HarmKind::Potential),
            _ => None,
        }
    }
}

/// One observation: an incident harmed `unit` under `category`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub incident_id: Option<String>,
    pub category: String,
    pub subcategory: Option<String>,
    /// Stakeholder group, or rating level for stakeholder-less schemas.
    pub unit: String,
    pub weight: u64,
    pub kind: Option<HarmKind>,
    pub annotator_id: Option<String>,
    pub timestamp: Option<String>,
    pub notes: Option<String>,
}

impl AnnotationRecord {
    pub fn new(category: impl Into<String>, unit: impl Into<String>, weight: u64) -> Self {
        AnnotationRecord {
            incident_id: None,
            category: category.into(),
            subcategory: None,
            unit: unit.into(),
            weight,
            kind: None,
            annotator_id: None,
            timestamp: None,
            notes: None,
        }
    }
}

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::error::Error;

            fn from_str(s: &str) -> ::std::result::Result<Self, $crate::error::Error> {
                match s.trim().to_lowercase().replace('-', "_").as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err($crate::error::Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($name), " {:?}; expected one of: {}"),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}
pub(crate) use string_enum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    AiaaicRaw,
    AggregatedTriplets,
    MitRatings,
    OecdMonitor,
}

string_enum!(Schema {
    AiaaicRaw => "aiaaic_raw",
    AggregatedTriplets => "aggregated_triplets",
    MitRatings => "mit_ratings",
    OecdMonitor => "oecd_monitor",
});

/// Row key of the frequency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    Category,
    Subcategory,
}

string_enum!(Granularity {
    Category => "category",
    Subcategory => "subcategory",
});

/// Which harm kinds to keep. Records without a kind only pass `All`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindFilter {
    #[default]
    All,
    Actual,
    Potential,
}

string_enum!(KindFilter {
    All => "all",
    Actual => "actual",
    Potential => "potential",
});

impl KindFilter {
    pub fn keeps(self, record: &AnnotationRecord) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Actual => record.kind == Some(HarmKind::Actual),
            KindFilter::Potential => record.kind == Some(HarmKind::Potential),
        }
    }
}
