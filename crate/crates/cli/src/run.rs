use corpscale_core::benchmark::{
    fit_groups, rank_size_metrics, savings_from_scores, score_companies, GroupSavings,
    GroupedFits, MetricRank, RankOptions, SavingsReport, ScoringOutcome,
};
use corpscale_core::dispersion::{country_dispersion, DispersionReport, MapValue};
use corpscale_core::ingest::{
    audit_log, build_sample, coverage_summary, parse_dataset, AnalysisSample, CompanyRecord,
    CoverageSummary, GroupLevel, IngestError, MetricSelector, Schema, SizeMetric, MIN_FIT_POINTS,
};
use corpscale_core::numfmt::fixed;
use corpscale_core::regress::{bootstrap_ci, SeKind};
use corpscale_core::report::{
    align, country_stats_csv, emit_scatter, map_pairs_csv, render_group_table, scores_csv,
    GroupTable, OutputFormat,
};
use corpscale_core::synthgen::{generate_multigroup_with, parse_specs, to_csv};
use corpscale_core::Execution;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::config::{Command, MapKind, RunConfig};
use crate::error::CliError;

/// Sink for JSON-line diagnostics.
pub type Diagnostics<'a> = &'a mut dyn FnMut(String);

/// Runs one analysis and returns the complete output, header included.
pub fn run(cfg: &RunConfig, exec: Execution, diag: Diagnostics) -> Result<Vec<u8>, CliError> {
    let body = match cfg.command {
        Command::Synth => return synth(cfg, exec),
        Command::Fit => fit(cfg, &load(cfg, diag)?, exec, diag)?,
        Command::Score => score(cfg, &load(cfg, diag)?, exec, diag)?,
        Command::Savings => savings(cfg, &load(cfg, diag)?, exec, diag)?,
        Command::Rank => rank(cfg, &load(cfg, diag)?, exec)?,
        Command::Dispersion => dispersion(cfg, &load(cfg, diag)?, exec, diag)?,
        Command::Report => report(cfg, &load(cfg, diag)?, exec, diag)?,
    };
    Ok(body.into_bytes())
}

/// One formatted result: the text, CSV and SVG forms are plain strings, the
/// JSON form is wrapped together with the config.
struct Rendered<'a, T: Serialize> {
    value: &'a T,
    text: Option<String>,
    csv: Option<String>,
    svg: Option<String>,
}

impl<T: Serialize> Rendered<'_, T> {
    fn finish(self, cfg: &RunConfig) -> Result<String, CliError> {
        let unsupported = || {
            CliError::validation(
                "UnsupportedFormat",
                format!("{:?} output is not available for this command", cfg.format),
            )
        };
        match cfg.format {
            OutputFormat::Text => Ok(cfg.comment_line() + &self.text.ok_or_else(unsupported)?),
            OutputFormat::Csv => Ok(cfg.comment_line() + &self.csv.ok_or_else(unsupported)?),
            OutputFormat::Svg => Ok(cfg.xml_comment() + &self.svg.ok_or_else(unsupported)?),
            OutputFormat::Json => {
                #[derive(Serialize)]
                struct Envelope<'a, T> {
                    config: &'a RunConfig,
                    result: &'a T,
                }
                let env = Envelope { config: cfg, result: self.value };
                Ok(serde_json::to_string_pretty(&env).expect("result serializes") + "\n")
            }
        }
    }
}

fn emit(diag: Diagnostics, value: serde_json::Value) {
    diag(serde_json::to_string(&value).expect("diagnostic serializes"));
}

fn load(cfg: &RunConfig, diag: Diagnostics) -> Result<Vec<CompanyRecord>, CliError> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::validation("MissingInput", "--input is required"))?;
    let file = fs::File::open(path).map_err(|e| CliError::io(Path::new(path), e))?;
    let parsed = parse_dataset(std::io::BufReader::new(file), &Schema::default())?;
    if !parsed.errors.is_empty() {
        emit(
            diag,
            json!({"level": "warning", "code": "RowErrors", "count": parsed.errors.len(), "path": path}),
        );
        if cfg.audit {
            for entry in audit_log(&parsed.errors, None) {
                emit(diag, json!({"level": "audit", "entry": entry}));
            }
        }
    }
    Ok(parsed.records)
}

fn se_kind(cfg: &RunConfig) -> SeKind {
    if cfg.robust_se {
        SeKind::Hc1
    } else {
        SeKind::Classical
    }
}

fn sample(
    cfg: &RunConfig,
    records: &[CompanyRecord],
    size: SizeMetric,
    level: GroupLevel,
    diag: Diagnostics,
) -> Result<AnalysisSample, IngestError> {
    let s = build_sample(records, MetricSelector::new(size, cfg.impact), level, cfg.min_group_size)?;
    if cfg.audit {
        for entry in audit_log(&[], Some(&s)) {
            emit(diag, json!({"level": "audit", "size": size, "group_level": level, "entry": entry}));
        }
    }
    Ok(s)
}

fn report_skipped(grouped: &GroupedFits, diag: Diagnostics) {
    for s in &grouped.skipped {
        emit(
            diag,
            json!({"level": "warning", "code": "GroupSkipped", "size": grouped.selector.size,
                   "group": s.group, "reason": s.reason}),
        );
    }
}

#[derive(Serialize)]
struct FitOutput {
    table: GroupTable,
    fits: Vec<GroupedFits>,
}

fn fit(
    cfg: &RunConfig,
    records: &[CompanyRecord],
    exec: Execution,
    diag: Diagnostics,
) -> Result<String, CliError> {
    let sizes = match cfg.size {
        Some(s) => vec![s],
        None => SizeMetric::TABLE_ORDER.to_vec(),
    };
    let mut levels = vec![cfg.level];
    if cfg.level != GroupLevel::All {
        levels.push(GroupLevel::All);
    }
    let mut all = Vec::new();
    let mut intervals = BTreeMap::new();
    for size in sizes {
        for &level in &levels {
            let s = match sample(cfg, records, size, level, diag) {
                Ok(s) => s,
                Err(IngestError::EmptySample) if cfg.size.is_none() => {
                    emit(diag, json!({"level": "warning", "code": "EmptySample", "size": size, "group_level": level}));
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            let grouped = fit_groups(&s, se_kind(cfg), exec)?;
            report_skipped(&grouped, diag);
            if let Some(b) = cfg.bootstrap {
                for group in grouped.fits.keys() {
                    let pts = s.pairs(group).expect("fitted group is in the sample");
                    let ci = bootstrap_ci(&pts, b.level, b.replicates, b.seed, exec)?;
                    intervals.insert((size, group.clone()), ci);
                }
            }
            all.push(grouped);
        }
    }
    if all.is_empty() {
        return Err(IngestError::EmptySample.into());
    }
    let mut table = render_group_table(&all)?;
    table.attach_intervals(&intervals);
    let out = FitOutput { table, fits: all };
    Rendered {
        value: &out,
        text: Some(out.table.to_text()),
        csv: Some(out.table.to_csv()),
        svg: None,
    }
    .finish(cfg)
}

/// Reads previously computed fits: a `GroupedFits` object, an array of them,
/// or the JSON output of `fit`.
fn read_fits(path: &str, selector: MetricSelector, level: GroupLevel) -> Result<GroupedFits, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(Path::new(path), e))?;
    let bad = |m: String| CliError::validation("BadFits", format!("{path}: {m}"));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let candidates = if let Some(result) = value.get("result") {
        result.get("fits").cloned().unwrap_or_default()
    } else {
        value
    };
    let list: Vec<GroupedFits> = if candidates.is_array() {
        serde_json::from_value(candidates)
    } else {
        serde_json::from_value(candidates).map(|g| vec![g])
    }
    .map_err(|e| bad(e.to_string()))?;
    list.into_iter()
        .find(|g| g.selector == selector && g.level == level)
        .ok_or_else(|| {
            CliError::validation(
                "MismatchedFits",
                format!("{path} has no fits for {}/{} at level {}", selector.size, selector.impact, level),
            )
        })
}

fn scored(
    cfg: &RunConfig,
    records: &[CompanyRecord],
    exec: Execution,
    diag: Diagnostics,
) -> Result<(AnalysisSample, ScoringOutcome), CliError> {
    let size = cfg.size_or_revenue();
    let s = sample(cfg, records, size, cfg.level, diag)?;
    let grouped = match &cfg.fits {
        Some(path) => read_fits(path, s.selector, s.level)?,
        None => {
            let g = fit_groups(&s, se_kind(cfg), exec)?;
            report_skipped(&g, diag);
            g
        }
    };
    let outcome = score_companies(&s, &grouped)?;
    for u in &outcome.unscored {
        emit(
            diag,
            json!({"level": "warning", "code": u.reason, "company_id": u.company_id, "group": u.group}),
        );
    }
    Ok((s, outcome))
}

/// Compact numeric rendering for aligned text tables.
fn num(x: f64) -> String {
    if x != 0.0 && (x.abs() >= 1e6 || x.abs() < 1e-3) {
        format!("{x:.4e}")
    } else {
        fixed(x, 4)
    }
}

fn score(
    cfg: &RunConfig,
    records: &[CompanyRecord],
    exec: Execution,
    diag: Diagnostics,
) -> Result<String, CliError> {
    let (_, outcome) = scored(cfg, records, exec, diag)?;
    let mut lines = vec![["company_id", "group", "size", "actual", "predicted", "residual_ln", "ratio"]
        .map(String::from)
        .to_vec()];
    lines.extend(outcome.scores.iter().map(|s| {
        vec![
            s.company_id.clone(),
            s.group.clone(),
            num(s.size),
            num(s.actual),
            num(s.predicted),
            fixed(s.residual_ln, 4),
            fixed(s.ratio, 4),
        ]
    }));
    Rendered {
        value: &outcome,
        text: Some(align(&lines)),
        csv: Some(scores_csv(&outcome.scores)),
        svg: None,
    }
    .finish(cfg)
}

fn savings_rows(rep: &SavingsReport, text: bool) -> Vec<Vec<String>> {
    let f = |x: f64| if text { num(x) } else { corpscale_core::numfmt::sig17(x) };
    let row = |name: &str, g: &GroupSavings| {
        vec![
            name.to_string(),
            g.companies.to_string(),
            f(g.total_actual),
            f(g.total_capped),
            if text { fixed(g.savings_fraction, 4) } else { f(g.savings_fraction) },
        ]
    };
    let mut rows = vec![["group", "companies", "total_actual", "total_capped", "savings_fraction"]
        .map(String::from)
        .to_vec()];
    rows.extend(rep.per_group.iter().map(|(k, g)| row(k, g)));
    rows.push(row("Total", &rep.total));
    rows
}

fn csv_rows(rows: &[Vec<String>]) -> String {
    // Values never contain separators or quotes, so plain joining is valid CSV.
    rows.iter().map(|r| r.join(",") + "\n").collect()
}

fn savings(
    cfg: &RunConfig,
    records: &[CompanyRecord],
    exec: Execution,
    diag: Diagnostics,
) -> Result<String, CliError> {
    let (s, outcome) = scored(cfg, records, exec, diag)?;
    let rep = savings_from_scores(s.selector, s.level, &outcome)?;
    let mut text = format!(
        "Savings under the benchmark cap: {} vs. {}, level {}\n",
        rep.selector.impact.label(),
        rep.selector.size.label(),
        rep.level
    );
    text += &align(&savings_rows(&rep, true));
    if !rep.excluded.is_empty() {
        text += &format!("{} companies in groups without a fit are excluded\n", rep.excluded.len());
    }
    Rendered {
        value: &rep,
        text: Some(text),
        csv: Some(csv_rows(&savings_rows(&rep, false))),
        svg: None,
    }
    .finish(cfg)
}

fn rank(cfg: &RunConfig, records: &[CompanyRecord], exec: Execution) -> Result<String, CliError> {
    let opts = RankOptions {
        level: cfg.level,
        min_group_size: cfg.min_group_size,
        weighting: cfg.weighting.unwrap_or_default(),
        se: se_kind(cfg),
        exec,
    };
    let ranks: Vec<MetricRank> = rank_size_metrics(records, cfg.impact, &opts)?;
    let rows = |f: &dyn Fn(f64) -> String| {
        let mut rows = vec![["size_metric", "mean_adj_r2", "share_significant", "groups"]
            .map(String::from)
            .to_vec()];
        rows.extend(ranks.iter().map(|r| {
            vec![
                r.size_metric.key().to_string(),
                f(r.mean_adj_r2),
                f(r.share_significant),
                r.groups.to_string(),
            ]
        }));
        rows
    };
    Rendered {
        value: &ranks,
        text: Some(align(&rows(&|x| fixed(x, 4)))),
        csv: Some(csv_rows(&rows(&corpscale_core::numfmt::sig17))),
        svg: None,
    }
    .finish(cfg)
}

fn dispersion(
    cfg: &RunConfig,
    records: &[CompanyRecord],
    exec: Execution,
    diag: Diagnostics,
) -> Result<String, CliError> {
    let (_, outcome) = scored(cfg, records, exec, diag)?;
    let rep: DispersionReport = country_dispersion(&outcome.scores, records);
    for id in &rep.unresolved {
        emit(diag, json!({"level": "warning", "code": "UnknownCountry", "company_id": id}));
    }
    if let Some(kind) = cfg.map {
        let value = match kind {
            MapKind::Count => MapValue::Count,
            MapKind::Mean => MapValue::MeanResidual,
        };
        let pairs = rep.map_pairs(value);
        let mut lines = vec![vec!["country".to_string(), "value".to_string()]];
        lines.extend(pairs.iter().map(|(c, v)| vec![c.clone(), num(*v)]));
        let as_map: BTreeMap<&str, f64> = pairs.iter().map(|(c, v)| (c.as_str(), *v)).collect();
        let json_pairs: BTreeMap<&str, String> =
            as_map.iter().map(|(c, v)| (*c, corpscale_core::numfmt::sig17(*v))).collect();
        return Rendered {
            value: &json_pairs,
            text: Some(align(&lines)),
            csv: Some(map_pairs_csv(&pairs)),
            svg: None,
        }
        .finish(cfg);
    }
    let mut lines = vec![["country", "n", "mean_residual_ln", "sd_residual_ln", "cv", "beyond_one_sd"]
        .map(String::from)
        .to_vec()];
    lines.extend(rep.countries.iter().map(|c| {
        vec![
            c.country.clone(),
            c.n.to_string(),
            fixed(c.mean_residual_ln, 4),
            fixed(c.sd_residual_ln, 4),
            c.cv.map_or_else(|| "-".to_string(), |v| fixed(v, 4)),
            if c.beyond_one_sd { "yes" } else { "no" }.to_string(),
        ]
    }));
    let text = format!(
        "pooled residual SD {}; {} of {} countries beyond one SD\n{}",
        fixed(rep.pooled_sd, 4),
        rep.flagged(),
        rep.countries.len(),
        align(&lines)
    );
    Rendered {
        value: &rep,
        text: Some(text),
        csv: Some(country_stats_csv(&rep)),
        svg: None,
    }
    .finish(cfg)
}

fn report(
    cfg: &RunConfig,
    records: &[CompanyRecord],
    exec: Execution,
    diag: Diagnostics,
) -> Result<String, CliError> {
    if cfg.coverage {
        let c: CoverageSummary = coverage_summary(records, cfg.impact);
        let rows = |f: &dyn Fn(f64) -> String| -> Vec<Vec<String>> {
            vec![
                vec![format!("total_{}", c.impact.key()), f(c.total_impact)],
                vec!["companies".into(), c.companies.to_string()],
                vec!["countries".into(), c.countries.to_string()],
                vec!["sectors".into(), c.sectors.to_string()],
                vec!["industries".into(), c.industries.to_string()],
                vec!["employees".into(), f(c.employees)],
                vec!["revenue".into(), f(c.revenue)],
                vec!["assets".into(), f(c.assets)],
                vec!["market_cap".into(), f(c.market_cap)],
            ]
        };
        let mut csv = vec![vec!["field".to_string(), "value".to_string()]];
        csv.extend(rows(&corpscale_core::numfmt::sig17));
        return Rendered {
            value: &c,
            text: Some(align(&rows(&num))),
            csv: Some(csv_rows(&csv)),
            svg: None,
        }
        .finish(cfg);
    }
    let Some(group) = &cfg.scatter else {
        return Err(CliError::validation(
            "NothingToReport",
            "report needs --scatter GROUP or --coverage",
        ));
    };
    let size = cfg.size_or_revenue();
    let s = sample(cfg, records, size, cfg.level, diag)?;
    let grouped = match &cfg.fits {
        Some(path) => read_fits(path, s.selector, s.level)?,
        None => fit_groups(&s, se_kind(cfg), exec)?,
    };
    let bundle = emit_scatter(&s, &grouped, group, records)?;
    let csv = bundle.to_csv();
    Rendered {
        value: &bundle,
        text: Some(csv.clone()),
        csv: Some(csv),
        svg: Some(bundle.to_svg()),
    }
    .finish(cfg)
}

fn synth(cfg: &RunConfig, exec: Execution) -> Result<Vec<u8>, CliError> {
    let path = cfg
        .spec
        .as_deref()
        .ok_or_else(|| CliError::validation("MissingSpec", "--spec is required"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(Path::new(path), e))?;
    let specs = parse_specs(&text)?;
    let records = generate_multigroup_with(&specs, exec)?;
    match cfg.format {
        OutputFormat::Csv | OutputFormat::Text => {
            let mut out = cfg.comment_line().into_bytes();
            out.extend(to_csv(&records)?);
            Ok(out)
        }
        other => Err(CliError::validation(
            "UnsupportedFormat",
            format!("synth writes CSV only, not {other:?}"),
        )),
    }
}

/// Smallest group size accepted when scoring against supplied fits.
pub const MIN_GROUP_WITH_FITS: usize = MIN_FIT_POINTS;
