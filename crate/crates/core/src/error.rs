use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter (α, H, scale, δ, ...) is outside its admissible range.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// A computation produced or received a non-finite or sign-invalid value.
    #[error("numeric domain error: {0}")]
    Numeric(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("inadmissible wavelet `{name}`: {reason}")]
    Inadmissible { name: String, reason: String },

    #[error("unknown wavelet `{0}`")]
    UnknownWavelet(String),

    #[error("level {0} not present in pyramid")]
    MissingLevel(u32),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownWavelet(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}
