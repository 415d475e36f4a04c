use super::record::CompanyRecord;
use super::IngestError;
use crate::numfmt::sig17;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

/// Logical fields of the input table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    CompanyId,
    Name,
    Country,
    Sector,
    Industry,
    Employees,
    MarketCap,
    Assets,
    Revenue,
    Co2e,
    Energy,
    Water,
    Waste,
}

impl Field {
    pub const ALL: [Field; 13] = [
        Field::CompanyId,
        Field::Name,
        Field::Country,
        Field::Sector,
        Field::Industry,
        Field::Employees,
        Field::MarketCap,
        Field::Assets,
        Field::Revenue,
        Field::Co2e,
        Field::Energy,
        Field::Water,
        Field::Waste,
    ];

    pub fn default_column(self) -> &'static str {
        match self {
            Field::CompanyId => "company_id",
            Field::Name => "name",
            Field::Country => "country",
            Field::Sector => "sector",
            Field::Industry => "industry",
            Field::Employees => "employees",
            Field::MarketCap => "market_cap_eur",
            Field::Assets => "assets_eur",
            Field::Revenue => "revenue_eur",
            Field::Co2e => "co2e_tonnes",
            Field::Energy => "energy_gj",
            Field::Water => "water_m3",
            Field::Waste => "waste_tonnes",
        }
    }

    fn is_numeric(self) -> bool {
        !matches!(
            self,
            Field::CompanyId | Field::Name | Field::Country | Field::Sector | Field::Industry
        )
    }
}

/// Maps logical fields to column names. A field mapped to `None` is not read
/// and every record gets the empty/missing value for it. `company_id` is
/// always required.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<Option<String>>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            columns: Field::ALL
                .iter()
                .map(|f| Some(f.default_column().to_string()))
                .collect(),
        }
    }
}

impl Schema {
    pub fn column(&self, field: Field) -> Option<&str> {
        let column = self.columns.get(Self::slot(field)).and_then(|c| c.as_deref());
        match field {
            Field::CompanyId => Some(column.unwrap_or(Field::CompanyId.default_column())),
            _ => column,
        }
    }

    pub fn with_column(mut self, field: Field, column: Option<&str>) -> Self {
        let slot = Self::slot(field);
        self.columns.resize(Field::ALL.len(), None);
        self.columns[slot] = column.map(str::to_string);
        self
    }

    fn slot(field: Field) -> usize {
        Field::ALL.iter().position(|f| *f == field).unwrap()
    }
}

/// Why a data row was rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowErrorKind {
    EmptyId,
    DuplicateId { company_id: String },
    MalformedNumber { column: String, value: String },
    NonPositiveValue { column: String, value: String },
    FieldCount { expected: usize, found: usize },
    Unreadable { message: String },
}

impl fmt::Display for RowErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowErrorKind::EmptyId => write!(f, "empty company_id"),
            RowErrorKind::DuplicateId { company_id } => {
                write!(f, "duplicate company_id {company_id:?}")
            }
            RowErrorKind::MalformedNumber { column, value } => {
                write!(f, "malformed number {value:?} in column {column:?}")
            }
            RowErrorKind::NonPositiveValue { column, value } => {
                write!(f, "negative value {value:?} in column {column:?}")
            }
            RowErrorKind::FieldCount { expected, found } => {
                write!(f, "expected {expected} fields, found {found}")
            }
            RowErrorKind::Unreadable { message } => write!(f, "unreadable row: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub row: usize,
    pub company_id: Option<String>,
    pub kind: RowErrorKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDataset {
    pub records: Vec<CompanyRecord>,
    pub errors: Vec<RowError>,
}

/// Parses comma-delimited UTF-8 text with a header row.
///
/// Every data row yields exactly one record or one [`RowError`]. Empty cells
/// are missing values, `0` is kept as zero (and later excluded with its own
/// audit reason), negative numbers are row errors. Numbers use `.` as the
/// decimal separator and must be finite. Lines starting with `#` are skipped.
pub fn parse_dataset<R: Read>(input: R, schema: &Schema) -> Result<ParsedDataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = reader.headers().map_err(|e| IngestError::Csv(e.to_string()))?.clone();
    let width = headers.len();

    let mut positions = Vec::with_capacity(Field::ALL.len());
    for field in Field::ALL {
        let pos = match schema.column(field) {
            Some(column) => Some(
                headers
                    .iter()
                    .position(|h| h.trim() == column)
                    .ok_or_else(|| IngestError::MissingHeader { column: column.to_string() })?,
            ),
            None => None,
        };
        positions.push((field, pos));
    }

    let mut out = ParsedDataset::default();
    let mut seen = HashSet::new();
    for (index, result) in reader.records().enumerate() {
        let fallback_row = index + 2;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let row = e.position().map(|p| p.line() as usize).unwrap_or(fallback_row);
                out.errors.push(RowError {
                    row,
                    company_id: None,
                    kind: RowErrorKind::Unreadable { message: e.to_string() },
                });
                continue;
            }
        };
        let row = record.position().map(|p| p.line() as usize).unwrap_or(fallback_row);
        if record.len() != width {
            out.errors.push(RowError {
                row,
                company_id: None,
                kind: RowErrorKind::FieldCount { expected: width, found: record.len() },
            });
            continue;
        }
        match parse_row(row, &record, &positions, schema) {
            Ok(rec) => {
                if !seen.insert(rec.company_id.clone()) {
                    out.errors.push(RowError {
                        row,
                        company_id: Some(rec.company_id.clone()),
                        kind: RowErrorKind::DuplicateId { company_id: rec.company_id },
                    });
                } else {
                    out.records.push(rec);
                }
            }
            Err((company_id, kind)) => out.errors.push(RowError { row, company_id, kind }),
        }
    }
    Ok(out)
}

type RowFailure = (Option<String>, RowErrorKind);

fn parse_row(
    row: usize,
    record: &csv::StringRecord,
    positions: &[(Field, Option<usize>)],
    schema: &Schema,
) -> Result<CompanyRecord, RowFailure> {
    let text = |field: Field| -> String {
        positions
            .iter()
            .find(|(f, _)| *f == field)
            .and_then(|(_, p)| *p)
            .map(|p| record[p].trim().to_string())
            .unwrap_or_default()
    };
    let company_id = text(Field::CompanyId);
    if company_id.is_empty() {
        return Err((None, RowErrorKind::EmptyId));
    }
    let mut rec = CompanyRecord {
        row,
        company_id: company_id.clone(),
        name: text(Field::Name),
        country: text(Field::Country),
        sector: text(Field::Sector),
        industry: text(Field::Industry),
        ..Default::default()
    };
    for &(field, pos) in positions.iter().filter(|(f, _)| f.is_numeric()) {
        let Some(pos) = pos else { continue };
        let raw = record[pos].trim();
        let column = schema.column(field).unwrap_or_default();
        let value = parse_number(raw, column).map_err(|k| (Some(company_id.clone()), k))?;
        let slot = match field {
            Field::Employees => &mut rec.employees,
            Field::MarketCap => &mut rec.market_cap,
            Field::Assets => &mut rec.assets,
            Field::Revenue => &mut rec.revenue,
            Field::Co2e => &mut rec.co2e,
            Field::Energy => &mut rec.energy,
            Field::Water => &mut rec.water,
            Field::Waste => &mut rec.waste,
            _ => unreachable!(),
        };
        *slot = value;
    }
    Ok(rec)
}

fn parse_number(raw: &str, column: &str) -> Result<Option<f64>, RowErrorKind> {
    if raw.is_empty() {
        return Ok(None);
    }
    let malformed = || RowErrorKind::MalformedNumber {
        column: column.to_string(),
        value: raw.to_string(),
    };
    // Rust's float grammar also accepts "inf"/"nan"; only plain decimal literals are allowed.
    if !raw
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
    {
        return Err(malformed());
    }
    let v: f64 = raw.parse().map_err(|_| malformed())?;
    if !v.is_finite() {
        return Err(malformed());
    }
    if v < 0.0 {
        return Err(RowErrorKind::NonPositiveValue {
            column: column.to_string(),
            value: raw.to_string(),
        });
    }
    Ok(Some(v))
}

/// Writes records in the default column layout with deterministic number formatting.
pub fn write_dataset<W: Write>(out: W, records: &[CompanyRecord]) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let header: Vec<&str> = Field::ALL.iter().map(|f| f.default_column()).collect();
    w.write_record(&header).map_err(|e| IngestError::Csv(e.to_string()))?;
    let num = |v: Option<f64>| v.map(sig17).unwrap_or_default();
    for r in records {
        w.write_record([
            r.company_id.clone(),
            r.name.clone(),
            r.country.clone(),
            r.sector.clone(),
            r.industry.clone(),
            num(r.employees),
            num(r.market_cap),
            num(r.assets),
            num(r.revenue),
            num(r.co2e),
            num(r.energy),
            num(r.water),
            num(r.waste),
        ])
        .map_err(|e| IngestError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| IngestError::Csv(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "company_id,name,country,sector,industry,employees,market_cap_eur,assets_eur,revenue_eur,co2e_tonnes,energy_gj,water_m3,waste_tonnes\n";

    fn parse(body: &str) -> ParsedDataset {
        parse_dataset(format!("{HEADER}{body}").as_bytes(), &Schema::default()).unwrap()
    }

    #[test]
    fn well_formed_row() {
        let ds = parse("c1,Acme,DE,Utilities,Electric Utilities,120,5e6,7e6,3e6,1500.5,9000,400,12\n");
        assert!(ds.errors.is_empty());
        assert_eq!(ds.records.len(), 1);
        let r = &ds.records[0];
        assert_eq!(r.row, 2);
        assert_eq!(r.employees, Some(120.0));
        assert_eq!(r.co2e, Some(1500.5));
        assert_eq!(r.waste, Some(12.0));
        assert_eq!(r.industry, "Electric Utilities");
    }

    #[test]
    fn empty_cell_is_missing_and_zero_is_kept() {
        let ds = parse("c1,Acme,DE,U,EU,120,5,7,,0,,,\n");
        assert!(ds.errors.is_empty());
        assert_eq!(ds.records[0].revenue, None);
        assert_eq!(ds.records[0].co2e, Some(0.0));
    }

    #[test]
    fn negative_value_is_row_error_only_for_that_row() {
        let ds = parse("c1,A,DE,U,EU,-5,1,1,1,1,1,1,1\nc2,B,FR,U,EU,5,1,1,1,1,1,1,1\n");
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].company_id, "c2");
        assert_eq!(ds.errors.len(), 1);
        assert_eq!(ds.errors[0].row, 2);
        assert!(matches!(ds.errors[0].kind, RowErrorKind::NonPositiveValue { ref column, .. } if column == "employees"));
    }

    #[test]
    fn locale_and_non_finite_numbers_are_malformed() {
        let ds = parse("c1,A,DE,U,EU,\"1,5\",1,1,1,1,1,1,1\nc2,A,DE,U,EU,inf,1,1,1,1,1,1,1\nc3,A,DE,U,EU,NaN,1,1,1,1,1,1,1\nc4,A,DE,U,EU,1e999,1,1,1,1,1,1,1\n");
        assert!(ds.records.is_empty());
        assert_eq!(ds.errors.len(), 4);
        assert!(ds.errors.iter().all(|e| matches!(e.kind, RowErrorKind::MalformedNumber { .. })));
    }

    #[test]
    fn duplicate_ids_keep_first() {
        let ds = parse("c1,A,DE,U,EU,1,1,1,1,1,1,1,1\nc1,B,DE,U,EU,2,1,1,1,1,1,1,1\n");
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].name, "A");
        assert_eq!(
            ds.errors[0].kind,
            RowErrorKind::DuplicateId { company_id: "c1".into() }
        );
        assert_eq!(ds.errors[0].row, 3);
    }

    #[test]
    fn short_rows_and_empty_ids() {
        let ds = parse("c1,A,DE\n,A,DE,U,EU,1,1,1,1,1,1,1,1\n");
        assert!(ds.records.is_empty());
        assert_eq!(ds.errors[0].kind, RowErrorKind::FieldCount { expected: 13, found: 3 });
        assert_eq!(ds.errors[1].kind, RowErrorKind::EmptyId);
    }

    #[test]
    fn missing_header_names_column() {
        let err = parse_dataset("company_id,name\nc1,A\n".as_bytes(), &Schema::default()).unwrap_err();
        assert_eq!(err, IngestError::MissingHeader { column: "country".into() });
        let err = parse_dataset("".as_bytes(), &Schema::default()).unwrap_err();
        assert!(matches!(err, IngestError::MissingHeader { .. }));
    }

    #[test]
    fn unmapped_columns_are_not_required() {
        let schema = Field::ALL[1..]
            .iter()
            .filter(|f| !matches!(f, Field::Revenue | Field::Co2e))
            .fold(Schema::default(), |s, f| s.with_column(*f, None))
            .with_column(Field::Revenue, Some("turnover"));
        let ds = parse_dataset("company_id,turnover,co2e_tonnes\nx,10,3\n".as_bytes(), &schema).unwrap();
        assert_eq!(ds.records[0].revenue, Some(10.0));
        assert_eq!(ds.records[0].co2e, Some(3.0));
        assert_eq!(ds.records[0].country, "");
    }

    #[test]
    fn write_then_parse_preserves_records() {
        let ds = parse("c1,\"Acme, Inc.\",DE,U,EU,120,5e6,,3.25e6,0,9000,400,12\n");
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds.records).unwrap();
        let back = parse_dataset(buf.as_slice(), &Schema::default()).unwrap();
        assert_eq!(back.records, ds.records);
    }
}
