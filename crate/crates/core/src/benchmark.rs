//! Per-group benchmark lines, company scoring, size-metric ranking and
//! savings under a benchmark cap.

use crate::exec::Execution;
use crate::ingest::{
    build_sample, AnalysisSample, CompanyRecord, GroupLevel, ImpactMetric, IngestError,
    MetricSelector, SizeMetric,
};
use crate::numfmt::{de_f64, ser_f64};
use crate::regress::{fit_loglog_with, FitError, FitResult, SeKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchmarkError {
    #[error("no group could be benchmarked")]
    EmptySample,
    #[error("benchmark size must be positive and finite, got {0}")]
    NonPositiveSize(f64),
    #[error("fits were computed for {fits:?}/{fits_level:?} but the sample is {sample:?}/{sample_level:?}")]
    MismatchedFits {
        fits: MetricSelector,
        fits_level: GroupLevel,
        sample: MetricSelector,
        sample_level: GroupLevel,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedGroup {
    pub group: String,
    pub reason: String,
}

/// Independent fits for every group of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedFits {
    pub selector: MetricSelector,
    pub level: GroupLevel,
    pub fits: BTreeMap<String, FitResult>,
    pub skipped: Vec<SkippedGroup>,
}

/// Fits every group of `sample` separately. Groups that fail the fit
/// preconditions are listed in `skipped` with the fit error.
pub fn fit_groups(
    sample: &AnalysisSample,
    se: SeKind,
    exec: Execution,
) -> Result<GroupedFits, BenchmarkError> {
    if sample.groups.is_empty() {
        return Err(BenchmarkError::EmptySample);
    }
    let groups: Vec<(&String, Vec<(f64, f64)>)> = sample
        .groups
        .iter()
        .map(|(k, pts)| (k, pts.iter().map(|p| (p.size, p.impact)).collect()))
        .collect();
    let results: Vec<Result<FitResult, FitError>> =
        exec.map(&groups, |(_, pts)| fit_loglog_with(pts, se));
    let mut fits = BTreeMap::new();
    let mut skipped = Vec::new();
    for ((key, _), result) in groups.iter().zip(results) {
        match result {
            Ok(fit) => {
                fits.insert((*key).clone(), fit);
            }
            Err(e) => skipped.push(SkippedGroup {
                group: (*key).clone(),
                reason: error_code(&e).to_string(),
            }),
        }
    }
    Ok(GroupedFits {
        selector: sample.selector,
        level: sample.level,
        fits,
        skipped,
    })
}

fn error_code(e: &FitError) -> &'static str {
    match e {
        FitError::TooFewPoints(_) => "TooFewPoints",
        FitError::NonPositiveValue { .. } => "NonPositiveValue",
        FitError::DegenerateInput => "DegenerateInput",
        FitError::InvalidDf(_) => "InvalidDf",
        FitError::InvalidArgument(_) => "InvalidArgument",
        FitError::DegenerateResamples { .. } => "DegenerateResamples",
        FitError::NoConvergence { .. } => "NoConvergence",
    }
}

/// Benchmark impact for a company of `size`: the median of the fitted
/// log-normal line, `exp(intercept_ln) · size^beta`, without smearing correction.
pub fn predict_benchmark(fit: &FitResult, size: f64) -> Result<f64, BenchmarkError> {
    if !(size.is_finite() && size > 0.0) {
        return Err(BenchmarkError::NonPositiveSize(size));
    }
    Ok(fit.predict_ln(size.ln()).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkScore {
    pub company_id: String,
    pub group: String,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub size: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub actual: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub predicted: f64,
    /// ln(actual) − ln(predicted); positive means above the benchmark line.
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub residual_ln: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub ratio: f64,
}

impl BenchmarkScore {
    pub fn is_above(&self) -> bool {
        self.residual_ln > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnscoredCompany {
    pub company_id: String,
    pub group: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringOutcome {
    /// Ordered by group key, then by descending residual, then by company id.
    pub scores: Vec<BenchmarkScore>,
    pub unscored: Vec<UnscoredCompany>,
}

fn check_match(sample: &AnalysisSample, grouped: &GroupedFits) -> Result<(), BenchmarkError> {
    if sample.selector != grouped.selector || sample.level != grouped.level {
        return Err(BenchmarkError::MismatchedFits {
            fits: grouped.selector,
            fits_level: grouped.level,
            sample: sample.selector,
            sample_level: sample.level,
        });
    }
    Ok(())
}

/// Scores every sample company against its group's benchmark line.
pub fn score_companies(
    sample: &AnalysisSample,
    grouped: &GroupedFits,
) -> Result<ScoringOutcome, BenchmarkError> {
    check_match(sample, grouped)?;
    let mut scores = Vec::with_capacity(sample.included_count());
    let mut unscored = Vec::new();
    for (group, points) in &sample.groups {
        let Some(fit) = grouped.fits.get(group) else {
            unscored.extend(points.iter().map(|p| UnscoredCompany {
                company_id: p.company_id.clone(),
                group: group.clone(),
                reason: "GroupNotFitted".to_string(),
            }));
            continue;
        };
        let start = scores.len();
        for p in points {
            let ln_pred = fit.predict_ln(p.size.ln());
            let predicted = ln_pred.exp();
            scores.push(BenchmarkScore {
                company_id: p.company_id.clone(),
                group: group.clone(),
                size: p.size,
                actual: p.impact,
                predicted,
                residual_ln: p.impact.ln() - ln_pred,
                ratio: p.impact / predicted,
            });
        }
        scores[start..].sort_by(|a, b| {
            b.residual_ln
                .total_cmp(&a.residual_ln)
                .then_with(|| a.company_id.cmp(&b.company_id))
        });
    }
    Ok(ScoringOutcome { scores, unscored })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSavings {
    pub companies: usize,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub total_actual: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub total_capped: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub savings_fraction: f64,
}

impl GroupSavings {
    fn from_scores<'a>(scores: impl Iterator<Item = &'a BenchmarkScore>) -> Self {
        let (mut companies, mut total_actual, mut total_capped) = (0, 0.0, 0.0);
        for s in scores {
            companies += 1;
            total_actual += s.actual;
            total_capped += s.actual.min(s.predicted);
        }
        let savings_fraction = if total_actual > 0.0 {
            ((total_actual - total_capped) / total_actual).max(0.0)
        } else {
            0.0
        };
        Self {
            companies,
            total_actual,
            total_capped,
            savings_fraction,
        }
    }

    /// Absolute reduction, `total_actual − total_capped`.
    pub fn saved(&self) -> f64 {
        self.total_actual - self.total_capped
    }
}

/// Aggregate impact if every company above its benchmark were capped at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub selector: MetricSelector,
    pub level: GroupLevel,
    pub total: GroupSavings,
    pub per_group: BTreeMap<String, GroupSavings>,
    /// Companies in groups without a fit; not part of any total.
    pub excluded: Vec<UnscoredCompany>,
}

pub fn savings(
    sample: &AnalysisSample,
    grouped: &GroupedFits,
) -> Result<SavingsReport, BenchmarkError> {
    let outcome = score_companies(sample, grouped)?;
    savings_from_scores(sample.selector, sample.level, &outcome)
}

pub fn savings_from_scores(
    selector: MetricSelector,
    level: GroupLevel,
    outcome: &ScoringOutcome,
) -> Result<SavingsReport, BenchmarkError> {
    if outcome.scores.is_empty() {
        return Err(BenchmarkError::EmptySample);
    }
    let mut by_group: BTreeMap<&str, Vec<&BenchmarkScore>> = BTreeMap::new();
    for s in &outcome.scores {
        by_group.entry(&s.group).or_default().push(s);
    }
    let per_group = by_group
        .into_iter()
        .map(|(g, v)| (g.to_string(), GroupSavings::from_scores(v.into_iter())))
        .collect();
    Ok(SavingsReport {
        selector,
        level,
        total: GroupSavings::from_scores(outcome.scores.iter()),
        per_group,
        excluded: outcome.unscored.clone(),
    })
}

/// How group adjusted R² values are averaged when ranking size metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankWeighting {
    #[default]
    Unweighted,
    /// Weighted by group size n.
    BySize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRank {
    pub size_metric: SizeMetric,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub mean_adj_r2: f64,
    /// Share of fitted groups with p_beta < 0.001.
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub share_significant: f64,
    pub groups: usize,
}

pub struct RankOptions {
    pub level: GroupLevel,
    pub min_group_size: usize,
    pub weighting: RankWeighting,
    pub se: SeKind,
    pub exec: Execution,
}

/// Ranks size metrics by how well they explain `impact` across groups.
pub fn rank_size_metrics(
    records: &[CompanyRecord],
    impact: ImpactMetric,
    opts: &RankOptions,
) -> Result<Vec<MetricRank>, BenchmarkError> {
    let mut ranks = Vec::new();
    for size in SizeMetric::RANK_ORDER {
        let sample = match build_sample(
            records,
            MetricSelector::new(size, impact),
            opts.level,
            opts.min_group_size,
        ) {
            Ok(s) => s,
            Err(IngestError::EmptySample) => continue,
            Err(e) => return Err(e.into()),
        };
        let grouped = fit_groups(&sample, opts.se, opts.exec)?;
        if grouped.fits.is_empty() {
            continue;
        }
        let weight = |f: &FitResult| match opts.weighting {
            RankWeighting::Unweighted => 1.0,
            RankWeighting::BySize => f.n as f64,
        };
        let total_weight: f64 = grouped.fits.values().map(weight).sum();
        let mean_adj_r2 =
            grouped.fits.values().map(|f| weight(f) * f.adj_r2).sum::<f64>() / total_weight;
        let significant = grouped.fits.values().filter(|f| f.p_beta < 0.001).count();
        ranks.push(MetricRank {
            size_metric: size,
            mean_adj_r2,
            share_significant: significant as f64 / grouped.fits.len() as f64,
            groups: grouped.fits.len(),
        });
    }
    if ranks.is_empty() {
        return Err(BenchmarkError::EmptySample);
    }
    let order = |m: SizeMetric| SizeMetric::RANK_ORDER.iter().position(|x| *x == m);
    ranks.sort_by(|a, b| {
        b.mean_adj_r2
            .total_cmp(&a.mean_adj_r2)
            .then_with(|| b.share_significant.total_cmp(&a.share_significant))
            .then_with(|| order(a.size_metric).cmp(&order(b.size_metric)))
    });
    Ok(ranks)
}
