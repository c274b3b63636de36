use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid ring layout: {0}")]
    Layout(String),

    #[error("invalid mapping: {0}")]
    Mapping(String),

    #[error("invalid radii: {0}")]
    Radii(String),

    #[error("invalid angles: {0}")]
    Angles(String),

    #[error("constellation breaks {symmetry} symmetry: {detail}")]
    Symmetry {
        symmetry: &'static str,
        detail: String,
    },

    #[error("chromosome does not fit its layout: {0}")]
    Chromosome(String),

    #[error("label {0} is outside 0..64")]
    LabelOutOfRange(u32),

    #[error("label {0} is not present in the mapping")]
    UnknownLabel(u8),

    #[error("amplitude must be non-negative, got {0}")]
    NegativeAmplitude(f64),

    #[error("exact MSE is limited to {limit} symbols, constellation has {size}")]
    TooManySymbols { size: usize, limit: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("tournament of size {k} drawn from population of {population}")]
    Tournament { k: usize, population: usize },

    #[error("bad GA configuration: {0}")]
    GaConfig(String),

    #[error("bad image: {0}")]
    Image(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
