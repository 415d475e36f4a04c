use super::ReportError;
use crate::benchmark::GroupedFits;
use crate::ingest::{GroupLevel, ImpactMetric, SizeMetric};
use crate::numfmt::{de_f64, fixed, ser_f64, sig17};
use crate::regress::{significance_stars, ConfidenceInterval, FitResult};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const STARS_FOOTNOTE: &str = "* p<0.05, **p<0.01, ***p<0.001";
pub const INTERCEPT_NOTE: &str =
    "ln c: intercept in natural-log units, ln(impact) = ln c + beta * ln(size)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub n: usize,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub adj_r2: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub beta: f64,
    pub stars: String,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub intercept_ln: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub p_beta: f64,
    pub ci: Option<ConfidenceInterval>,
}

impl TableCell {
    fn from_fit(fit: &FitResult) -> Self {
        Self {
            n: fit.n,
            adj_r2: fit.adj_r2,
            beta: fit.beta,
            stars: significance_stars(fit.p_beta).to_string(),
            intercept_ln: fit.intercept_ln,
            p_beta: fit.p_beta,
            ci: None,
        }
    }

    /// Slope with three decimals and its significance stars, e.g. `0.944***`.
    pub fn beta_label(&self) -> String {
        format!("{}{}", fixed(self.beta, 3), self.stars)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub group: String,
    /// Largest n among the row's fits.
    pub n: usize,
    /// One entry per column; `None` where the group was not fitted for that metric.
    pub cells: Vec<Option<TableCell>>,
}

/// Grouped fits laid out with one row per group and one column block per size metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTable {
    pub impact: ImpactMetric,
    pub level: GroupLevel,
    pub columns: Vec<SizeMetric>,
    pub rows: Vec<TableRow>,
}

/// Builds the table from fits sharing one impact metric. At most one
/// non-`All` level may be present; `All`-level fits contribute the `All` row,
/// which is placed first.
pub fn render_group_table(fits: &[GroupedFits]) -> Result<GroupTable, ReportError> {
    let Some(first) = fits.first() else {
        return Err(ReportError::NoFits);
    };
    let impact = first.selector.impact;
    let mut level = GroupLevel::All;
    let mut seen = BTreeSet::new();
    for g in fits {
        if g.selector.impact != impact {
            return Err(ReportError::MixedMetrics(format!(
                "impact metrics {} and {} in one table",
                impact, g.selector.impact
            )));
        }
        if g.level != GroupLevel::All {
            if level != GroupLevel::All && level != g.level {
                return Err(ReportError::MixedMetrics(format!(
                    "levels {} and {} in one table",
                    level.key(),
                    g.level.key()
                )));
            }
            level = g.level;
        }
        if !seen.insert((g.level.key(), g.selector.size)) {
            return Err(ReportError::MixedMetrics(format!(
                "size metric {} given twice at level {}",
                g.selector.size,
                g.level.key()
            )));
        }
    }
    let columns: Vec<SizeMetric> = SizeMetric::TABLE_ORDER
        .into_iter()
        .filter(|m| fits.iter().any(|g| g.selector.size == *m))
        .collect();

    // Row key -> column -> fit. The All row comes from All-level fits only.
    let mut grid: BTreeMap<(bool, String), BTreeMap<SizeMetric, &FitResult>> = BTreeMap::new();
    for g in fits {
        for (key, fit) in &g.fits {
            let is_all = g.level == GroupLevel::All;
            grid.entry((!is_all, key.clone()))
                .or_default()
                .insert(g.selector.size, fit);
        }
    }
    let rows = grid
        .into_iter()
        .map(|((_, group), by_metric)| {
            let cells: Vec<Option<TableCell>> = columns
                .iter()
                .map(|m| by_metric.get(m).map(|f| TableCell::from_fit(f)))
                .collect();
            TableRow {
                n: by_metric.values().map(|f| f.n).max().unwrap_or(0),
                group,
                cells,
            }
        })
        .collect();
    Ok(GroupTable {
        impact,
        level,
        columns,
        rows,
    })
}

impl GroupTable {
    /// Header-only table for an impact metric with no fitted groups.
    pub fn empty(impact: ImpactMetric, level: GroupLevel, columns: Vec<SizeMetric>) -> Self {
        Self { impact, level, columns, rows: Vec::new() }
    }

    /// Attaches bootstrap intervals keyed by (size metric, group).
    pub fn attach_intervals(&mut self, intervals: &BTreeMap<(SizeMetric, String), ConfidenceInterval>) {
        for row in &mut self.rows {
            for (metric, cell) in self.columns.iter().zip(row.cells.iter_mut()) {
                if let Some(cell) = cell {
                    cell.ci = intervals.get(&(*metric, row.group.clone())).copied();
                }
            }
        }
    }

    fn has_intervals(&self) -> bool {
        self.rows.iter().flat_map(|r| &r.cells).flatten().any(|c| c.ci.is_some())
    }

    pub fn title(&self) -> String {
        format!("{} vs. company size indicator", self.impact.label())
    }

    pub fn to_text(&self) -> String {
        let with_ci = self.has_intervals();
        let per = if with_ci { 4 } else { 3 };
        let mut lines: Vec<Vec<String>> = Vec::new();
        let mut top = vec![String::new(), String::new()];
        let mut sub = vec![level_label(self.level).to_string(), "n".to_string()];
        for m in &self.columns {
            top.push(m.label().to_string());
            top.extend(std::iter::repeat_n(String::new(), per - 1));
            sub.extend(["Adj. R2", "beta", "ln c"].map(String::from));
            if with_ci {
                sub.push("beta CI".to_string());
            }
        }
        lines.push(top);
        lines.push(sub);
        for row in &self.rows {
            let mut line = vec![row.group.clone(), row.n.to_string()];
            for cell in &row.cells {
                match cell {
                    Some(c) => {
                        line.push(fixed(c.adj_r2, 3));
                        line.push(c.beta_label());
                        line.push(fixed(c.intercept_ln, 3));
                        if with_ci {
                            line.push(match c.ci {
                                Some(ci) => format!("[{}, {}]", fixed(ci.low, 3), fixed(ci.high, 3)),
                                None => "-".to_string(),
                            });
                        }
                    }
                    None => line.extend(std::iter::repeat_n("-".to_string(), per)),
                }
            }
            lines.push(line);
        }
        let mut out = format!("{}\n", self.title());
        out.push_str(&align(&lines));
        out.push_str(STARS_FOOTNOTE);
        out.push('\n');
        out.push_str(INTERCEPT_NOTE);
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let with_ci = self.has_intervals();
        let mut header = vec!["group".to_string(), "n".to_string()];
        for m in &self.columns {
            let k = m.key();
            for field in ["n", "adj_r2", "beta", "stars", "intercept_ln", "p_beta"] {
                header.push(format!("{k}_{field}"));
            }
            if with_ci {
                header.push(format!("{k}_ci_low"));
                header.push(format!("{k}_ci_high"));
            }
        }
        let mut rows = vec![header];
        for row in &self.rows {
            let mut line = vec![row.group.clone(), row.n.to_string()];
            for cell in &row.cells {
                let width = if with_ci { 8 } else { 6 };
                match cell {
                    Some(c) => {
                        line.extend([
                            c.n.to_string(),
                            sig17(c.adj_r2),
                            sig17(c.beta),
                            c.stars.clone(),
                            sig17(c.intercept_ln),
                            sig17(c.p_beta),
                        ]);
                        if with_ci {
                            line.push(c.ci.map(|ci| sig17(ci.low)).unwrap_or_default());
                            line.push(c.ci.map(|ci| sig17(ci.high)).unwrap_or_default());
                        }
                    }
                    None => line.extend(std::iter::repeat_n(String::new(), width)),
                }
            }
            rows.push(line);
        }
        super::csv_string(&rows)
    }
}

fn level_label(level: GroupLevel) -> &'static str {
    match level {
        GroupLevel::All => "Group",
        GroupLevel::Sector => "Sector",
        GroupLevel::Industry => "Industry",
    }
}

/// Left-aligned columns separated by two spaces, trailing whitespace trimmed.
pub fn align(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|i| {
            lines
                .iter()
                .filter_map(|l| l.get(i))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in lines {
        let mut text = String::new();
        for (i, cell) in line.iter().enumerate() {
            text.push_str(cell);
            if i + 1 < line.len() {
                let pad = widths[i] - cell.chars().count() + 2;
                text.extend(std::iter::repeat_n(' ', pad));
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    }
    out
}

/// Number of fits with p_beta strictly below each alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceCount {
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub alpha: f64,
    pub count: usize,
    pub total: usize,
}

pub fn count_significant(fits: &BTreeMap<String, FitResult>, alphas: &[f64]) -> Vec<SignificanceCount> {
    alphas
        .iter()
        .map(|&alpha| SignificanceCount {
            alpha,
            count: fits.values().filter(|f| f.p_beta < alpha).count(),
            total: fits.len(),
        })
        .collect()
}
