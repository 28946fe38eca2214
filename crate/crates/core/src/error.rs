use serde::de::DeserializeOwned;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{element}: mode {mode} is out of range for {modes} modes")]
    ModeOutOfRange {
        element: String,
        mode: usize,
        modes: usize,
    },

    #[error("{element}: beam splitter couples mode {mode} to itself")]
    SameMode { element: String, mode: usize },

    #[error("state holds {photons} photons, above the photon cap of {cap}")]
    PhotonCapExceeded { photons: usize, cap: usize },

    #[error("photon number mismatch: input carries {input}, output carries {output}")]
    PhotonMismatch { input: usize, output: usize },

    #[error("mode count mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: usize, found: usize },

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("unknown builtin scheme '{0}'")]
    UnknownBuiltin(String),

    #[error(
        "operation needs a dual-rail two-qubit scheme (4 signal modes), found {0} signal modes"
    )]
    NotTwoQubit(usize),

    #[error("genome layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    fn at_path<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> Self {
        let path = e.path().to_string();
        let path = if path == "." {
            "$".to_string()
        } else {
            format!("$.{path}")
        };
        Error::parse(path, e.into_inner().to_string())
    }

    /// True for errors caused by a resource guard rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::PhotonCapExceeded { .. })
    }
}

/// Deserializes JSON, reporting failures with the JSON path of the offending value.
pub(crate) fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(Error::at_path)
}

pub(crate) fn from_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::parse("$", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(Error::at_path)
}
