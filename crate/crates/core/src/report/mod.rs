//! Rendering of grouped-fit tables, scatter bundles and flat CSV exports.

mod scatter;
mod table;

pub use scatter::{
    emit_scatter, LineEnd, PointFlag, ScatterBundle, ScatterPoint, ON_LINE_TOL, SVG_HEIGHT,
    SVG_WIDTH,
};
pub use table::{
    align, count_significant, render_group_table, GroupTable, SignificanceCount, TableCell, TableRow,
    INTERCEPT_NOTE, STARS_FOOTNOTE,
};

use crate::benchmark::BenchmarkScore;
use crate::dispersion::DispersionReport;
use crate::numfmt::sig17;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("fits cannot share a table: {0}")]
    MixedMetrics(String),
    #[error("group {0:?} has no fit")]
    GroupNotFitted(String),
    #[error("no fits to render")]
    NoFits,
}

/// Output format selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
    Json,
    Svg,
}

pub(crate) fn csv_string(rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of UTF-8 input")
}

/// Flat per-company benchmark scores for spreadsheets.
pub fn scores_csv(scores: &[BenchmarkScore]) -> String {
    let mut rows = vec![["company_id", "group", "size", "actual", "predicted", "residual_ln", "ratio"]
        .map(String::from)
        .to_vec()];
    rows.extend(scores.iter().map(|s| {
        vec![
            s.company_id.clone(),
            s.group.clone(),
            sig17(s.size),
            sig17(s.actual),
            sig17(s.predicted),
            sig17(s.residual_ln),
            sig17(s.ratio),
        ]
    }));
    csv_string(&rows)
}

pub fn country_stats_csv(report: &DispersionReport) -> String {
    let mut rows = vec![["country", "n", "mean_residual_ln", "sd_residual_ln", "cv", "beyond_one_sd"]
        .map(String::from)
        .to_vec()];
    rows.extend(report.countries.iter().map(|c| {
        vec![
            c.country.clone(),
            c.n.to_string(),
            sig17(c.mean_residual_ln),
            sig17(c.sd_residual_ln),
            c.cv.map(sig17).unwrap_or_default(),
            c.beyond_one_sd.to_string(),
        ]
    }));
    csv_string(&rows)
}

pub fn map_pairs_csv(pairs: &[(String, f64)]) -> String {
    let mut rows = vec![vec!["country".to_string(), "value".to_string()]];
    rows.extend(pairs.iter().map(|(c, v)| vec![c.clone(), sig17(*v)]));
    csv_string(&rows)
}
