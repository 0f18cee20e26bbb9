use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] shadowrdm::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("refusing to mix results from configs {0} and {1}")]
    MixedConfig(String, String),
    #[error("malformed results: {0}")]
    Results(String),
    #[error("stopped after {0} batches; rerun to resume from the checkpoint")]
    Interrupted(u64),
}

impl LabError {
    /// Stable machine-readable category for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Config(_) => "config",
            LabError::Core(_) => "numerics",
            LabError::Io(_) => "io",
            LabError::Csv(_) => "csv",
            LabError::Json(_) => "json",
            LabError::Toml(_) => "config-parse",
            LabError::MixedConfig(..) => "mixed-config",
            LabError::Results(_) => "results",
            LabError::Interrupted(_) => "interrupted",
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
