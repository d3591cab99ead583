use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed annotation: {0}")]
    MalformedAnnotation(String),

    /// A covered read position lies in an intron or outside the gene.
    #[error("unmappable position {0}: not inside any subexon")]
    UnmappablePosition(u64),

    #[error("read {read} is not compatible with isoform {isoform}")]
    Incompatible { read: String, isoform: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no usable reads")]
    NoUsableReads,

    #[error("sample {0} has no usable reads")]
    EmptySample(usize),

    #[error("row {row} has no positive generating probability")]
    ZeroRow { row: usize },

    #[error("read {read} of sample {sample} is assigned to isoform {isoform} with zero generating probability")]
    InvalidAssignment {
        sample: usize,
        read: usize,
        isoform: usize,
    },

    #[error("exact enumeration needs {needed:e} configurations, guard is {guard}")]
    EnumerationTooLarge { needed: f64, guard: u64 },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable tag used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::MalformedAnnotation(_) => "malformed_annotation",
            Error::UnmappablePosition(_) => "unmappable_position",
            Error::Incompatible { .. } => "incompatible",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::NoUsableReads => "no_usable_reads",
            Error::EmptySample(_) => "empty_sample",
            Error::ZeroRow { .. } => "zero_row",
            Error::InvalidAssignment { .. } => "invalid_assignment",
            Error::EnumerationTooLarge { .. } => "enumeration_too_large",
            Error::MissingInput(_) => "missing_input",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
