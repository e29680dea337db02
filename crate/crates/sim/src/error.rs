use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] survdiff::Error),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("censoring rate {target} cannot be reached for this lifetime model")]
    NoConvergence { target: f64 },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("cannot parse scenario file: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
