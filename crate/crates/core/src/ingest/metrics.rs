use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Company size indicator (the explanatory variable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeMetric {
    Employees,
    #[serde(rename = "marketcap")]
    MarketCap,
    Assets,
    Revenue,
}

impl SizeMetric {
    /// Column order used by grouped-fit tables.
    pub const TABLE_ORDER: [SizeMetric; 4] = [
        SizeMetric::Employees,
        SizeMetric::MarketCap,
        SizeMetric::Assets,
        SizeMetric::Revenue,
    ];

    /// Final tie-break order when ranking size metrics.
    pub const RANK_ORDER: [SizeMetric; 4] = [
        SizeMetric::Revenue,
        SizeMetric::Employees,
        SizeMetric::Assets,
        SizeMetric::MarketCap,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SizeMetric::Employees => "employees",
            SizeMetric::MarketCap => "marketcap",
            SizeMetric::Assets => "assets",
            SizeMetric::Revenue => "revenue",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SizeMetric::Employees => "Employees",
            SizeMetric::MarketCap => "Market Capitalisation",
            SizeMetric::Assets => "Assets",
            SizeMetric::Revenue => "Total Revenue",
        }
    }
}

/// Environmental impact indicator (the response variable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactMetric {
    Emissions,
    Energy,
    Water,
    Waste,
}

impl ImpactMetric {
    pub const ALL: [ImpactMetric; 4] = [
        ImpactMetric::Emissions,
        ImpactMetric::Energy,
        ImpactMetric::Water,
        ImpactMetric::Waste,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ImpactMetric::Emissions => "emissions",
            ImpactMetric::Energy => "energy",
            ImpactMetric::Water => "water",
            ImpactMetric::Waste => "waste",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ImpactMetric::Emissions => "CO2 equivalents emission",
            ImpactMetric::Energy => "Energy use",
            ImpactMetric::Water => "Water withdrawal",
            ImpactMetric::Waste => "Waste",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            ImpactMetric::Emissions => "t CO2e",
            ImpactMetric::Energy => "GJ",
            ImpactMetric::Water => "m3",
            ImpactMetric::Waste => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricSelector {
    pub size: SizeMetric,
    pub impact: ImpactMetric,
}

impl MetricSelector {
    pub fn new(size: SizeMetric, impact: ImpactMetric) -> Self {
        Self { size, impact }
    }
}

/// Grouping level: a single pooled group, level-1 sectors or level-2 industries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupLevel {
    All,
    #[default]
    Sector,
    Industry,
}

impl GroupLevel {
    pub fn key(self) -> &'static str {
        match self {
            GroupLevel::All => "all",
            GroupLevel::Sector => "sector",
            GroupLevel::Industry => "industry",
        }
    }
}

/// Group key of the single group produced by [`GroupLevel::All`].
pub const ALL_GROUP: &str = "All";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownName(pub String);

impl fmt::Display for UnknownName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown name {:?}", self.0)
    }
}

impl std::error::Error for UnknownName {}

macro_rules! impl_from_str {
    ($ty:ty, [$($variant:expr),+]) => {
        impl FromStr for $ty {
            type Err = UnknownName;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let lower = s.to_ascii_lowercase();
                [$($variant),+]
                    .into_iter()
                    .find(|v| v.key() == lower)
                    .ok_or_else(|| UnknownName(s.to_string()))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.key())
            }
        }
    };
}

impl_from_str!(SizeMetric, [SizeMetric::Employees, SizeMetric::MarketCap, SizeMetric::Assets, SizeMetric::Revenue]);
impl_from_str!(ImpactMetric, [ImpactMetric::Emissions, ImpactMetric::Energy, ImpactMetric::Water, ImpactMetric::Waste]);
impl_from_str!(GroupLevel, [GroupLevel::All, GroupLevel::Sector, GroupLevel::Industry]);
