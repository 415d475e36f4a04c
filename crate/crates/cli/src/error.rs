use corpscale_core::benchmark::BenchmarkError;
use corpscale_core::ingest::IngestError;
use corpscale_core::regress::FitError;
use corpscale_core::report::ReportError;
use corpscale_core::synthgen::SynthError;
use serde::Serialize;
use std::fmt::Display;
use std::path::Path;

pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// A fatal diagnostic, printed to stderr as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    #[serde(skip)]
    pub exit: i32,
    pub level: &'static str,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl CliError {
    pub fn validation(code: &str, message: impl Display) -> Self {
        Self {
            exit: EXIT_VALIDATION,
            level: "error",
            code: code.to_string(),
            message: message.to_string(),
            column: None,
            path: None,
        }
    }

    pub fn io(path: &Path, err: impl Display) -> Self {
        Self {
            exit: EXIT_IO,
            level: "error",
            code: "Io".to_string(),
            message: err.to_string(),
            column: None,
            path: Some(path.display().to_string()),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let code = match &e {
            IngestError::MissingHeader { .. } => "MissingHeader",
            IngestError::EmptySample => "EmptySample",
            IngestError::InvalidMinGroupSize(_) => "InvalidMinGroupSize",
            IngestError::Csv(_) => "MalformedCsv",
        };
        let mut err = Self::validation(code, &e);
        if let IngestError::MissingHeader { column } = e {
            err.column = Some(column);
        }
        err
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        match e {
            BenchmarkError::Ingest(inner) => inner.into(),
            BenchmarkError::EmptySample => Self::validation("EmptySample", e),
            BenchmarkError::NonPositiveSize(_) => Self::validation("NonPositiveSize", e),
            BenchmarkError::MismatchedFits { .. } => Self::validation("MismatchedFits", e),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Ingest(inner) => inner.into(),
            SynthError::InvalidSpec(_) => Self::validation("InvalidSpec", e),
            SynthError::DuplicateGroupKey(_) => Self::validation("DuplicateGroupKey", e),
            SynthError::Parse(_) => Self::validation("SpecParse", e),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::MixedMetrics(_) => "MixedMetrics",
            ReportError::GroupNotFitted(_) => "GroupNotFitted",
            ReportError::NoFits => "NoFits",
        };
        Self::validation(code, e)
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        let code = match e {
            FitError::TooFewPoints(_) => "TooFewPoints",
            FitError::NonPositiveValue { .. } => "NonPositiveValue",
            FitError::DegenerateInput => "DegenerateInput",
            FitError::InvalidDf(_) => "InvalidDf",
            FitError::InvalidArgument(_) => "InvalidArgument",
            FitError::DegenerateResamples { .. } => "DegenerateResamples",
            FitError::NoConvergence { .. } => "NoConvergence",
        };
        Self::validation(code, e)
    }
}
