//! Deterministic synthetic company populations with known scaling parameters.
//!
//! Record `i` of a population draws only from counters `16·i .. 16·i + 15` of
//! the stream keyed by the spec seed (see [`crate::rng`]):
//!
//! | lanes  | use                                                      |
//! |--------|----------------------------------------------------------|
//! | 0      | Pareto size, inverse CDF `x_min · u^(−1/alpha)`          |
//! | 0, 1   | log-normal size, `exp(mu + sigma · z)` (Box–Muller)      |
//! | 2, 3   | log-space noise `z`, impact = `exp(c + beta·ln size + noise_sd·z)` |
//! | 4      | country, index into [`COUNTRIES`]                        |
//! | 6..=11 | proxy size metrics (three Box–Muller pairs)              |
//!
//! so any record can be generated independently of the others.

use crate::exec::Execution;
use crate::ingest::{write_dataset, CompanyRecord, ImpactMetric, IngestError, SizeMetric};
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

const LANES: u64 = 16;

/// Countries assigned to synthetic companies.
pub const COUNTRIES: [&str; 12] = [
    "US", "JP", "GB", "DE", "FR", "CA", "CN", "AU", "CH", "KR", "IN", "BR",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("group key {0:?} appears in more than one spec")]
    DuplicateGroupKey(String),
    #[error("spec file: {0}")]
    Parse(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
// Externally tagged: `{"pareto": {"x_min": .., "alpha": ..}}`. Internally tagged
// enums buffer their content, which loses raw JSON numbers.
#[serde(rename_all = "lowercase")]
pub enum SizeDistribution {
    Pareto { x_min: f64, alpha: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl SizeDistribution {
    #[inline]
    fn draw(&self, rng: &CounterRng, base: u64) -> f64 {
        match *self {
            SizeDistribution::Pareto { x_min, alpha } => {
                x_min * rng.uniform_at(base).powf(-1.0 / alpha)
            }
            SizeDistribution::LogNormal { mu, sigma } => (mu + sigma * rng.normal_at(base)).exp(),
        }
    }

    /// Variance of ln(size) under the distribution.
    pub fn ln_variance(&self) -> f64 {
        match *self {
            SizeDistribution::Pareto { alpha, .. } => 1.0 / (alpha * alpha),
            SizeDistribution::LogNormal { sigma, .. } => sigma * sigma,
        }
    }
}

fn default_size_metric() -> SizeMetric {
    SizeMetric::Revenue
}

fn default_impact_metric() -> ImpactMetric {
    ImpactMetric::Emissions
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub beta_true: f64,
    pub intercept_ln_true: f64,
    pub noise_sd: f64,
    pub size_dist: SizeDistribution,
    pub group_key: String,
    pub seed: u64,
    /// Size metric that drives the impact.
    #[serde(default = "default_size_metric")]
    pub size_metric: SizeMetric,
    #[serde(default = "default_impact_metric")]
    pub impact_metric: ImpactMetric,
    /// When set, the other three size metrics are filled with
    /// `driver · exp(proxy_noise_sd · z)`; otherwise they are missing.
    #[serde(default)]
    pub proxy_noise_sd: Option<f64>,
}

impl SyntheticSpec {
    pub fn new(n: usize, beta_true: f64, intercept_ln_true: f64, noise_sd: f64, size_dist: SizeDistribution, group_key: &str, seed: u64) -> Self {
        Self {
            n,
            beta_true,
            intercept_ln_true,
            noise_sd,
            size_dist,
            group_key: group_key.to_string(),
            seed,
            size_metric: SizeMetric::Revenue,
            impact_metric: ImpactMetric::Emissions,
            proxy_noise_sd: None,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(format!("{}: {m}", self.group_key)));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.group_key.is_empty() {
            return Err(SynthError::InvalidSpec("group_key must be non-empty".into()));
        }
        if !self.beta_true.is_finite() || !self.intercept_ln_true.is_finite() {
            return bad("beta_true and intercept_ln_true must be finite");
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be finite and >= 0");
        }
        if let Some(p) = self.proxy_noise_sd {
            if !(p >= 0.0 && p.is_finite()) {
                return bad("proxy_noise_sd must be finite and >= 0");
            }
        }
        match self.size_dist {
            SizeDistribution::Pareto { x_min, alpha } => {
                if !(x_min > 0.0 && x_min.is_finite() && alpha > 0.0 && alpha.is_finite()) {
                    return bad("Pareto needs x_min > 0 and alpha > 0");
                }
            }
            SizeDistribution::LogNormal { mu, sigma } => {
                if !(mu.is_finite() && sigma >= 0.0 && sigma.is_finite()) {
                    return bad("LogNormal needs finite mu and sigma >= 0");
                }
            }
        }
        Ok(())
    }

    /// Driver sizes only (same values `generate_population` uses).
    pub fn sizes(&self) -> Result<Vec<f64>, SynthError> {
        self.validate()?;
        let rng = CounterRng::new(self.seed);
        Ok((0..self.n as u64).map(|i| self.size_dist.draw(&rng, i * LANES)).collect())
    }

    fn record(&self, rng: &CounterRng, i: usize) -> CompanyRecord {
        let base = i as u64 * LANES;
        let size = self.size_dist.draw(rng, base);
        let noise = if self.noise_sd > 0.0 {
            self.noise_sd * rng.normal_at(base + 2)
        } else {
            0.0
        };
        let impact = (self.intercept_ln_true + self.beta_true * size.ln() + noise).exp();
        let country = COUNTRIES[rng.index_at(base + 4, COUNTRIES.len())];
        let mut rec = CompanyRecord {
            row: i + 2,
            company_id: format!("{}-{:06}", self.group_key, i),
            name: format!("{} company {}", self.group_key, i),
            country: country.to_string(),
            sector: self.group_key.clone(),
            industry: self.group_key.clone(),
            ..Default::default()
        };
        *rec.size_mut(self.size_metric) = Some(size);
        *rec.impact_mut(self.impact_metric) = Some(impact);
        if let Some(sd) = self.proxy_noise_sd {
            let proxies = SizeMetric::TABLE_ORDER
                .into_iter()
                .filter(|m| *m != self.size_metric);
            for (k, metric) in proxies.enumerate() {
                let z = rng.normal_at(base + 6 + 2 * k as u64);
                *rec.size_mut(metric) = Some(size * (sd * z).exp());
            }
        }
        rec
    }
}

pub fn generate_population(spec: &SyntheticSpec) -> Result<Vec<CompanyRecord>, SynthError> {
    generate_population_with(spec, Execution::Sequential)
}

pub fn generate_population_with(
    spec: &SyntheticSpec,
    exec: Execution,
) -> Result<Vec<CompanyRecord>, SynthError> {
    spec.validate()?;
    let rng = CounterRng::new(spec.seed);
    Ok(exec.map_range(spec.n, |i| spec.record(&rng, i)))
}

/// Concatenates independent populations in spec order. Rows are renumbered to
/// match the line numbers of the emitted CSV.
pub fn generate_multigroup(specs: &[SyntheticSpec]) -> Result<Vec<CompanyRecord>, SynthError> {
    generate_multigroup_with(specs, Execution::Sequential)
}

pub fn generate_multigroup_with(
    specs: &[SyntheticSpec],
    exec: Execution,
) -> Result<Vec<CompanyRecord>, SynthError> {
    let mut keys = HashSet::new();
    for s in specs {
        if !keys.insert(s.group_key.as_str()) {
            return Err(SynthError::DuplicateGroupKey(s.group_key.clone()));
        }
    }
    let mut out = Vec::with_capacity(specs.iter().map(|s| s.n).sum());
    for s in specs {
        out.extend(generate_population_with(s, exec)?);
    }
    for (i, r) in out.iter_mut().enumerate() {
        r.row = i + 2;
    }
    Ok(out)
}

/// Renders records in the ingest CSV layout.
pub fn to_csv(records: &[CompanyRecord]) -> Result<Vec<u8>, SynthError> {
    let mut buf = Vec::new();
    write_dataset(&mut buf, records)?;
    Ok(buf)
}

/// Parses a JSON spec file holding one spec or an array of specs.
pub fn parse_specs(json: &str) -> Result<Vec<SyntheticSpec>, SynthError> {
    let parse_err = |e: serde_json::Error| SynthError::Parse(e.to_string());
    if json.trim_start().starts_with('[') {
        serde_json::from_str(json).map_err(parse_err)
    } else {
        serde_json::from_str(json).map(|s| vec![s]).map_err(parse_err)
    }
}

/// Log-space noise SD that gives an expected adjusted R² of `target_adj_r2`
/// for slope `beta`, `n` points and log-size variance `ln_size_variance`.
///
/// From R² = β²V / (β²V + σ²): σ² = β²V (1 − R²) / R², with
/// R² = 1 − (1 − adj R²)(n − 2)/(n − 1).
pub fn noise_sd_for_adj_r2(beta: f64, ln_size_variance: f64, target_adj_r2: f64, n: usize) -> f64 {
    let nf = n as f64;
    let r2 = 1.0 - (1.0 - target_adj_r2) * (nf - 2.0) / (nf - 1.0);
    (beta * beta * ln_size_variance * (1.0 - r2) / r2).sqrt()
}

/// Population variance (divisor n) of ln(size).
pub fn ln_variance(sizes: &[f64]) -> f64 {
    let n = sizes.len() as f64;
    let mean = sizes.iter().map(|s| s.ln()).sum::<f64>() / n;
    sizes.iter().map(|s| (s.ln() - mean).powi(2)).sum::<f64>() / n
}
