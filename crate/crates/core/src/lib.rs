//! Ordinal harm-concentration analysis for AI incident annotations.
//!
//! Annotations are ingested from one of several incident-database layouts
//! and aggregated into a [`FrequencyTable`] over stakeholder groups ranked
//! by severity. Each category then gets an AIH score and a Criticality
//! Index, which depend only on the rank order of the groups. The
//! [`sensitivity`] module checks how stable the resulting ranking is, and
//! [`report`] renders tables and plots.

pub mod error;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod sensitivity;
pub mod service;

pub use error::{Error, ErrorKind, Result};
pub use ingest::{
    build_frequency_table, parse_annotations, AnnotationRecord, FrequencyTable, Granularity, KindFilter, Schema,
    SeverityOrdering,
};
pub use metrics::{aih, criticality_index, evaluate_table, CategoryMetrics, CiConvention, MetricOptions};
pub use sensitivity::{ScenarioResult, ScenarioSpec};
pub use pipeline::{run_pipeline, RunConfig};
pub use report::{MetricsDocument, ReportBundle};
pub use service::Api;
