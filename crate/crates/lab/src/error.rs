use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config: {field}{}: {message}", LineSuffix(*line))]
    Config {
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] bulkedge::Error),
    #[error("baseline: {0}")]
    Baseline(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

struct LineSuffix(Option<usize>);

impl fmt::Display for LineSuffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(l) => write!(f, " (line {l})"),
            None => Ok(()),
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
