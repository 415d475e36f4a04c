use super::metrics::{GroupLevel, MetricSelector};
use super::record::CompanyRecord;
use super::IngestError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;

/// Default minimum number of companies for a group to be fitted.
pub const DEFAULT_MIN_GROUP_SIZE: usize = 10;

/// Smallest accepted `min_group_size`: a two-parameter fit needs three points for inference.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueCause {
    Missing,
    Zero,
    Negative,
    NonFinite,
}

/// Audit reason for a record excluded from an analysis sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DropReason {
    ZeroOrMissing { metric: String, cause: ValueCause },
    MissingGroup { level: GroupLevel },
    GroupTooSmall { group: String, size: usize, min: usize },
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::ZeroOrMissing { metric, cause } => {
                let cause = match cause {
                    ValueCause::Missing => "missing",
                    ValueCause::Zero => "zero",
                    ValueCause::Negative => "negative",
                    ValueCause::NonFinite => "non-finite",
                };
                write!(f, "ZeroOrMissing: {metric} is {cause}")
            }
            DropReason::MissingGroup { level } => write!(f, "MissingGroup: empty {level} code"),
            DropReason::GroupTooSmall { group, size, min } => {
                write!(f, "GroupTooSmall: {group:?} has {size} < {min} companies")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub row: usize,
    pub company_id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub company_id: String,
    pub size: f64,
    pub impact: f64,
}

/// Filtered, grouped (size, impact) observations for one metric pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSample {
    pub selector: MetricSelector,
    pub level: GroupLevel,
    pub min_group_size: usize,
    pub groups: BTreeMap<String, Vec<SamplePoint>>,
    pub dropped: Vec<DroppedRecord>,
}

impl AnalysisSample {
    pub fn included_count(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn included_ids(&self) -> HashSet<&str> {
        self.groups
            .values()
            .flatten()
            .map(|p| p.company_id.as_str())
            .collect()
    }

    /// Raw (size, impact) pairs of a group, in input order.
    pub fn pairs(&self, group: &str) -> Option<Vec<(f64, f64)>> {
        self.groups
            .get(group)
            .map(|pts| pts.iter().map(|p| (p.size, p.impact)).collect())
    }
}

fn classify(value: Option<f64>) -> Result<f64, ValueCause> {
    match value {
        None => Err(ValueCause::Missing),
        Some(v) if !v.is_finite() => Err(ValueCause::NonFinite),
        Some(v) if v == 0.0 => Err(ValueCause::Zero),
        Some(v) if v < 0.0 => Err(ValueCause::Negative),
        Some(v) => Ok(v),
    }
}

/// Selects the metric pair, removes missing/zero observations and drops groups
/// with fewer than `min_group_size` members. Every input record ends up either
/// in a group or in `dropped`.
pub fn build_sample(
    records: &[CompanyRecord],
    selector: MetricSelector,
    level: GroupLevel,
    min_group_size: usize,
) -> Result<AnalysisSample, IngestError> {
    if min_group_size < MIN_FIT_POINTS {
        return Err(IngestError::InvalidMinGroupSize(min_group_size));
    }
    let mut dropped = Vec::new();
    let mut candidates: BTreeMap<String, Vec<(usize, SamplePoint)>> = BTreeMap::new();
    for r in records {
        let drop = |reason| DroppedRecord {
            row: r.row,
            company_id: r.company_id.clone(),
            reason,
        };
        let size = match classify(r.size(selector.size)) {
            Ok(v) => v,
            Err(cause) => {
                dropped.push(drop(DropReason::ZeroOrMissing {
                    metric: selector.size.key().to_string(),
                    cause,
                }));
                continue;
            }
        };
        let impact = match classify(r.impact(selector.impact)) {
            Ok(v) => v,
            Err(cause) => {
                dropped.push(drop(DropReason::ZeroOrMissing {
                    metric: selector.impact.key().to_string(),
                    cause,
                }));
                continue;
            }
        };
        let Some(key) = r.group_key(level) else {
            dropped.push(drop(DropReason::MissingGroup { level }));
            continue;
        };
        candidates.entry(key.to_string()).or_default().push((
            r.row,
            SamplePoint {
                company_id: r.company_id.clone(),
                size,
                impact,
            },
        ));
    }

    let mut groups = BTreeMap::new();
    for (key, members) in candidates {
        if members.len() < min_group_size {
            let size = members.len();
            dropped.extend(members.into_iter().map(|(row, p)| DroppedRecord {
                row,
                company_id: p.company_id,
                reason: DropReason::GroupTooSmall {
                    group: key.clone(),
                    size,
                    min: min_group_size,
                },
            }));
        } else {
            groups.insert(key, members.into_iter().map(|(_, p)| p).collect());
        }
    }
    if groups.is_empty() {
        return Err(IngestError::EmptySample);
    }
    Ok(AnalysisSample {
        selector,
        level,
        min_group_size,
        groups,
        dropped,
    })
}
