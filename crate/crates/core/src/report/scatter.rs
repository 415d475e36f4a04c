use super::ReportError;
use crate::benchmark::{predict_benchmark, GroupedFits};
use crate::ingest::{AnalysisSample, CompanyRecord};
use crate::numfmt::{de_f64, ser_f64, sig17};
use crate::regress::FitResult;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

/// Points with |log residual| below this are drawn as lying on the line.
pub const ON_LINE_TOL: f64 = 1e-9;

pub const SVG_WIDTH: f64 = 960.0;
pub const SVG_HEIGHT: f64 = 720.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointFlag {
    Above,
    OnLine,
    Below,
}

impl PointFlag {
    pub fn from_residual(residual_ln: f64) -> Self {
        if residual_ln.abs() < ON_LINE_TOL {
            PointFlag::OnLine
        } else if residual_ln > 0.0 {
            PointFlag::Above
        } else {
            PointFlag::Below
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointFlag::Above => "above",
            PointFlag::OnLine => "on-line",
            PointFlag::Below => "below",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub company_id: String,
    pub sector: String,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub ln_size: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub ln_impact: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub residual_ln: f64,
    pub flag: PointFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineEnd {
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub size: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub predicted: f64,
}

/// Plot data for one fitted group: log-log points and the benchmark segment
/// spanning the smallest and largest company.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterBundle {
    pub group: String,
    pub size_label: String,
    pub impact_label: String,
    pub fit: FitResult,
    pub points: Vec<ScatterPoint>,
    pub line: [LineEnd; 2],
}

pub fn emit_scatter(
    sample: &AnalysisSample,
    grouped: &GroupedFits,
    group: &str,
    records: &[CompanyRecord],
) -> Result<ScatterBundle, ReportError> {
    let not_fitted = || ReportError::GroupNotFitted(group.to_string());
    let fit = grouped.fits.get(group).ok_or_else(not_fitted)?;
    let members = sample.groups.get(group).ok_or_else(not_fitted)?;
    let sector_of: HashMap<&str, &str> = records
        .iter()
        .map(|r| (r.company_id.as_str(), r.sector.as_str()))
        .collect();
    let points: Vec<ScatterPoint> = members
        .iter()
        .map(|p| {
            let ln_size = p.size.ln();
            let ln_impact = p.impact.ln();
            let residual_ln = ln_impact - fit.predict_ln(ln_size);
            ScatterPoint {
                company_id: p.company_id.clone(),
                sector: sector_of
                    .get(p.company_id.as_str())
                    .filter(|s| !s.is_empty())
                    .map_or_else(|| group.to_string(), |s| s.to_string()),
                ln_size,
                ln_impact,
                residual_ln,
                flag: PointFlag::from_residual(residual_ln),
            }
        })
        .collect();
    let min = members.iter().map(|p| p.size).fold(f64::INFINITY, f64::min);
    let max = members.iter().map(|p| p.size).fold(f64::NEG_INFINITY, f64::max);
    let end = |size: f64| -> Result<LineEnd, ReportError> {
        Ok(LineEnd {
            size,
            predicted: predict_benchmark(fit, size).map_err(|_| not_fitted())?,
        })
    };
    Ok(ScatterBundle {
        group: group.to_string(),
        size_label: grouped.selector.size.label().to_string(),
        impact_label: grouped.selector.impact.label().to_string(),
        fit: *fit,
        points,
        line: [end(min)?, end(max)?],
    })
}

impl ScatterBundle {
    /// `ln_size,ln_impact,company_id,flag` rows followed by the two line
    /// endpoints (flag `line`, empty company id).
    pub fn to_csv(&self) -> String {
        let mut rows = vec![vec![
            "ln_size".to_string(),
            "ln_impact".to_string(),
            "company_id".to_string(),
            "flag".to_string(),
        ]];
        for p in &self.points {
            rows.push(vec![
                sig17(p.ln_size),
                sig17(p.ln_impact),
                p.company_id.clone(),
                p.flag.as_str().to_string(),
            ]);
        }
        for e in &self.line {
            rows.push(vec![
                sig17(e.size.ln()),
                sig17(e.predicted.ln()),
                String::new(),
                "line".to_string(),
            ]);
        }
        super::csv_string(&rows)
    }

    /// Self-contained SVG: log-log axes with decade ticks, points colored by
    /// sector (palette assigned in sorted sector order), and the benchmark line.
    pub fn to_svg(&self) -> String {
        let (left, right, top, bottom) = (90.0, 190.0, 50.0, 70.0);
        let plot_w = SVG_WIDTH - left - right;
        let plot_h = SVG_HEIGHT - top - bottom;
        let log10 = std::f64::consts::LN_10;
        let decades = |values: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v / log10), hi.max(v / log10))
            });
            let (lo, mut hi) = (lo.floor(), hi.ceil());
            if hi <= lo {
                hi = lo + 1.0;
            }
            (lo, hi)
        };
        let (x_lo, x_hi) = decades(&mut self.points.iter().map(|p| p.ln_size));
        let (y_lo, y_hi) = decades(
            &mut self
                .points
                .iter()
                .map(|p| p.ln_impact)
                .chain(self.line.iter().map(|e| e.predicted.ln())),
        );
        let px = |ln: f64| left + (ln / log10 - x_lo) / (x_hi - x_lo) * plot_w;
        let py = |ln: f64| top + plot_h - (ln / log10 - y_lo) / (y_hi - y_lo) * plot_h;

        let sectors: BTreeSet<&str> = self.points.iter().map(|p| p.sector.as_str()).collect();
        let color: HashMap<&str, &str> = sectors
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, PALETTE[i % PALETTE.len()]))
            .collect();

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = SVG_WIDTH,
            h = SVG_HEIGHT
        );
        let _ = writeln!(s, r#"<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="16">{}: {} vs. {}</text>"#,
            left + plot_w / 2.0,
            xml_escape(&self.group),
            xml_escape(&self.impact_label),
            xml_escape(&self.size_label)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{left:.2}" y="{top:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##
        );
        for d in (x_lo as i64)..=(x_hi as i64) {
            let x = px(d as f64 * log10);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"##,
                top + plot_h,
                top + plot_h + 6.0,
                top + plot_h + 20.0
            );
        }
        for d in (y_lo as i64)..=(y_hi as i64) {
            let y = py(d as f64 * log10);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
                left - 6.0,
                left - 9.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} (log scale)</text>"#,
            left + plot_w / 2.0,
            SVG_HEIGHT - 20.0,
            xml_escape(&self.size_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="24" y="{:.2}" text-anchor="middle" transform="rotate(-90 24 {:.2})">{} (log scale)</text>"#,
            top + plot_h / 2.0,
            top + plot_h / 2.0,
            xml_escape(&self.impact_label)
        );
        for p in &self.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.7"><title>{}</title></circle>"#,
                px(p.ln_size),
                py(p.ln_impact),
                color[p.sector.as_str()],
                xml_escape(&p.company_id)
            );
        }
        let [a, b] = self.line;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="2"/>"#,
            px(a.size.ln()),
            py(a.predicted.ln()),
            px(b.size.ln()),
            py(b.predicted.ln())
        );
        let legend_x = left + plot_w + 16.0;
        for (i, sector) in sectors.iter().enumerate() {
            let y = top + 10.0 + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<circle cx="{legend_x:.2}" cy="{y:.2}" r="4" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                color[sector],
                legend_x + 10.0,
                y + 4.0,
                xml_escape(sector)
            );
        }
        let y = top + 10.0 + 18.0 * sectors.len() as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="red" stroke-width="2"/><text x="{:.2}" y="{:.2}">benchmark (beta = {:.3})</text>"#,
            legend_x - 4.0,
            legend_x + 4.0,
            legend_x + 10.0,
            y + 4.0,
            self.fit.beta
        );
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
