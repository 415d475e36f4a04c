use super::metrics::{GroupLevel, ImpactMetric, SizeMetric, ALL_GROUP};
use serde::{Deserialize, Serialize};

/// One company observation of a single-year cross-section.
///
/// Monetary values are in EUR, emissions and waste in tonnes, energy in GJ and
/// water in m³. `None` means the source cell was empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CompanyRecord {
    /// 1-based line number in the source file (header is line 1).
    pub row: usize,
    pub company_id: String,
    pub name: String,
    pub country: String,
    pub sector: String,
    pub industry: String,
    pub employees: Option<f64>,
    pub market_cap: Option<f64>,
    pub assets: Option<f64>,
    pub revenue: Option<f64>,
    pub co2e: Option<f64>,
    pub energy: Option<f64>,
    pub water: Option<f64>,
    pub waste: Option<f64>,
}

impl CompanyRecord {
    pub fn size(&self, metric: SizeMetric) -> Option<f64> {
        match metric {
            SizeMetric::Employees => self.employees,
            SizeMetric::MarketCap => self.market_cap,
            SizeMetric::Assets => self.assets,
            SizeMetric::Revenue => self.revenue,
        }
    }

    pub fn size_mut(&mut self, metric: SizeMetric) -> &mut Option<f64> {
        match metric {
            SizeMetric::Employees => &mut self.employees,
            SizeMetric::MarketCap => &mut self.market_cap,
            SizeMetric::Assets => &mut self.assets,
            SizeMetric::Revenue => &mut self.revenue,
        }
    }

    pub fn impact(&self, metric: ImpactMetric) -> Option<f64> {
        match metric {
            ImpactMetric::Emissions => self.co2e,
            ImpactMetric::Energy => self.energy,
            ImpactMetric::Water => self.water,
            ImpactMetric::Waste => self.waste,
        }
    }

    pub fn impact_mut(&mut self, metric: ImpactMetric) -> &mut Option<f64> {
        match metric {
            ImpactMetric::Emissions => &mut self.co2e,
            ImpactMetric::Energy => &mut self.energy,
            ImpactMetric::Water => &mut self.water,
            ImpactMetric::Waste => &mut self.waste,
        }
    }

    /// Group key at `level`, or `None` when the classification code is empty.
    pub fn group_key(&self, level: GroupLevel) -> Option<&str> {
        let key = match level {
            GroupLevel::All => ALL_GROUP,
            GroupLevel::Sector => self.sector.as_str(),
            GroupLevel::Industry => self.industry.as_str(),
        };
        (!key.is_empty()).then_some(key)
    }
}
