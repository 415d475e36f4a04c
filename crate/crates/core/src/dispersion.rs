//! Country-of-incorporation dispersion of benchmark residuals.
//!
//! A country is flagged when the absolute mean of its companies' log residuals
//! exceeds the pooled residual SD. Both SDs use the population convention
//! (divisor n). The per-country CV is computed on the actual/benchmark ratios.

use crate::benchmark::BenchmarkScore;
use crate::ingest::CompanyRecord;
use crate::numfmt::{de_f64, de_opt_f64, ser_f64, ser_opt_f64};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Means smaller than this in magnitude make the CV undefined.
pub const CV_MEAN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryStats {
    pub country: String,
    pub n: usize,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub mean_residual_ln: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub sd_residual_ln: f64,
    #[serde(serialize_with = "ser_opt_f64", deserialize_with = "de_opt_f64")]
    pub cv: Option<f64>,
    pub beyond_one_sd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub pooled_sd: f64,
    /// Sorted by |mean_residual_ln| descending, then country code.
    pub countries: Vec<CountryStats>,
    /// Scored companies without a record or with an empty country code.
    pub unresolved: Vec<String>,
}

impl DispersionReport {
    pub fn flagged(&self) -> usize {
        self.countries.iter().filter(|c| c.beyond_one_sd).count()
    }

    /// (country, value) pairs sorted by country code, for external map rendering.
    pub fn map_pairs(&self, value: MapValue) -> Vec<(String, f64)> {
        let mut pairs: Vec<_> = self
            .countries
            .iter()
            .map(|c| {
                let v = match value {
                    MapValue::Count => c.n as f64,
                    MapValue::MeanResidual => c.mean_residual_ln,
                };
                (c.country.clone(), v)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapValue {
    Count,
    MeanResidual,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn country_dispersion(scores: &[BenchmarkScore], records: &[CompanyRecord]) -> DispersionReport {
    let country_of: HashMap<&str, &str> = records
        .iter()
        .map(|r| (r.company_id.as_str(), r.country.as_str()))
        .collect();
    let mut by_country: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut unresolved = Vec::new();
    let mut all = Vec::with_capacity(scores.len());
    for s in scores {
        match country_of.get(s.company_id.as_str()) {
            Some(c) if !c.is_empty() => {
                let entry = by_country.entry(c).or_default();
                entry.0.push(s.residual_ln);
                entry.1.push(s.ratio);
                all.push(s.residual_ln);
            }
            _ => unresolved.push(s.company_id.clone()),
        }
    }
    let pooled_sd = if all.is_empty() { 0.0 } else { mean_sd(&all).1 };
    let mut countries: Vec<CountryStats> = by_country
        .into_iter()
        .map(|(country, (residuals, ratios))| {
            let (mean, sd) = mean_sd(&residuals);
            let (ratio_mean, ratio_sd) = mean_sd(&ratios);
            CountryStats {
                country: country.to_string(),
                n: residuals.len(),
                mean_residual_ln: mean,
                sd_residual_ln: sd,
                cv: (ratio_mean.abs() >= CV_MEAN_FLOOR).then(|| ratio_sd / ratio_mean.abs()),
                beyond_one_sd: mean.abs() > pooled_sd,
            }
        })
        .collect();
    countries.sort_by(|a, b| {
        b.mean_residual_ln
            .abs()
            .total_cmp(&a.mean_residual_ln.abs())
            .then_with(|| a.country.cmp(&b.country))
    });
    DispersionReport {
        pooled_sd,
        countries,
        unresolved,
    }
}
