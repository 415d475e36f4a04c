use super::metrics::ImpactMetric;
use super::record::CompanyRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Dataset coverage for one impact indicator: totals and distinct counts over
/// the records that report a strictly positive value for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub impact: ImpactMetric,
    #[serde(serialize_with = "crate::numfmt::ser_f64", deserialize_with = "crate::numfmt::de_f64")]
    pub total_impact: f64,
    pub companies: usize,
    pub countries: usize,
    pub sectors: usize,
    pub industries: usize,
    #[serde(serialize_with = "crate::numfmt::ser_f64", deserialize_with = "crate::numfmt::de_f64")]
    pub employees: f64,
    #[serde(serialize_with = "crate::numfmt::ser_f64", deserialize_with = "crate::numfmt::de_f64")]
    pub revenue: f64,
    #[serde(serialize_with = "crate::numfmt::ser_f64", deserialize_with = "crate::numfmt::de_f64")]
    pub assets: f64,
    #[serde(serialize_with = "crate::numfmt::ser_f64", deserialize_with = "crate::numfmt::de_f64")]
    pub market_cap: f64,
}

pub fn coverage_summary(records: &[CompanyRecord], impact: ImpactMetric) -> CoverageSummary {
    let positive = |v: Option<f64>| v.filter(|x| x.is_finite() && *x > 0.0);
    let admitted: Vec<&CompanyRecord> = records
        .iter()
        .filter(|r| positive(r.impact(impact)).is_some())
        .collect();
    let distinct = |f: fn(&CompanyRecord) -> &str| {
        admitted
            .iter()
            .map(|r| f(r))
            .filter(|s| !s.is_empty())
            .collect::<BTreeSet<_>>()
            .len()
    };
    let sum = |f: fn(&CompanyRecord) -> Option<f64>| {
        admitted.iter().filter_map(|r| positive(f(r))).sum::<f64>()
    };
    CoverageSummary {
        impact,
        total_impact: admitted.iter().filter_map(|r| r.impact(impact)).sum(),
        companies: admitted.len(),
        countries: distinct(|r| &r.country),
        sectors: distinct(|r| &r.sector),
        industries: distinct(|r| &r.industry),
        employees: sum(|r| r.employees),
        revenue: sum(|r| r.revenue),
        assets: sum(|r| r.assets),
        market_cap: sum(|r| r.market_cap),
    }
}
