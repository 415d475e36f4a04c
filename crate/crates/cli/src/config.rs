//! Effective run configuration, written into every output header and read back by `replay`.

use corpscale_core::benchmark::RankWeighting;
use corpscale_core::ingest::{GroupLevel, ImpactMetric, SizeMetric};
use corpscale_core::report::OutputFormat;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Fit,
    Score,
    Savings,
    Rank,
    Dispersion,
    Synth,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Count,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

/// Everything that determines the bytes of a run's output. The output path and
/// the execution mode are deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub impact: ImpactMetric,
    /// `None` means every size metric (fit) or revenue (other commands).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<SizeMetric>,
    pub level: GroupLevel,
    pub min_group_size: usize,
    pub robust_se: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fits: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<RankWeighting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter: Option<String>,
    #[serde(default)]
    pub coverage: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default)]
    pub audit: bool,
    pub format: OutputFormat,
}

const TAG: &str = "corpscale";

impl RunConfig {
    pub fn size_or_revenue(&self) -> SizeMetric {
        self.size.unwrap_or(SizeMetric::Revenue)
    }

    fn compact_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// `# corpscale {...}` line for text and CSV outputs.
    pub fn comment_line(&self) -> String {
        format!("# {TAG} {}\n", self.compact_json())
    }

    /// XML comment for SVG outputs; `--` is escaped so the comment stays well formed.
    pub fn xml_comment(&self) -> String {
        format!("<!-- {TAG} {} -->\n", self.compact_json().replace("--", "-\\u002d"))
    }

    /// Recovers the configuration from the header of a previous output.
    pub fn from_output(text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::validation("BadReplayHeader", m);
        let first = text.lines().next().unwrap_or_default();
        let json = if let Some(rest) = first.strip_prefix(&format!("# {TAG} ")) {
            rest.to_string()
        } else if let Some(rest) = first.strip_prefix(&format!("<!-- {TAG} ")) {
            rest.strip_suffix(" -->")
                .ok_or_else(|| bad("unterminated XML comment header".into()))?
                .to_string()
        } else if text.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct Envelope {
                config: RunConfig,
            }
            let env: Envelope = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
            return Ok(env.config);
        } else {
            return Err(bad("no corpscale header found".into()));
        };
        serde_json::from_str(&json).map_err(|e| bad(e.to_string()))
    }
}
