//! Parsing, validation, filtering and grouping of company observations.

mod coverage;
mod metrics;
mod parse;
mod record;
mod sample;

pub use coverage::{coverage_summary, CoverageSummary};
pub use metrics::{GroupLevel, ImpactMetric, MetricSelector, SizeMetric, UnknownName, ALL_GROUP};
pub use parse::{parse_dataset, write_dataset, Field, ParsedDataset, RowError, RowErrorKind, Schema};
pub use record::CompanyRecord;
pub use sample::{
    build_sample, AnalysisSample, DropReason, DroppedRecord, SamplePoint, ValueCause,
    DEFAULT_MIN_GROUP_SIZE, MIN_FIT_POINTS,
};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("required column {column:?} is missing from the header")]
    MissingHeader { column: String },
    #[error("no group survives filtering")]
    EmptySample,
    #[error("min_group_size must be at least {MIN_FIT_POINTS}, got {0}")]
    InvalidMinGroupSize(usize),
    #[error("csv: {0}")]
    Csv(String),
}

/// One line of the JSON-lines audit log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditEntry {
    pub row: usize,
    pub company_id: Option<String>,
    pub reason: String,
}

/// Audit entries for rejected rows followed by records dropped from `sample`.
pub fn audit_log(errors: &[RowError], sample: Option<&AnalysisSample>) -> Vec<AuditEntry> {
    let rows = errors.iter().map(|e| AuditEntry {
        row: e.row,
        company_id: e.company_id.clone(),
        reason: e.kind.to_string(),
    });
    let drops = sample.into_iter().flat_map(|s| &s.dropped).map(|d| AuditEntry {
        row: d.row,
        company_id: Some(d.company_id.clone()),
        reason: d.reason.to_string(),
    });
    rows.chain(drops).collect()
}
