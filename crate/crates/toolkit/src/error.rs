use thiserror::Error;

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ToolError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::ValidationFailed(_) => 1,
            ToolError::Config(_) => 2,
            ToolError::Numerical(_) | ToolError::Io(_) => 3,
        }
    }
}

impl From<cs_aging::analysis::AnalysisError> for ToolError {
    fn from(e: cs_aging::analysis::AnalysisError) -> Self {
        use cs_aging::analysis::AnalysisError as A;
        match e {
            A::Model(cs_aging::ModelError::Invalid(v)) => ToolError::Config(v.join("; ")),
            A::Workload(v) => ToolError::Config(v.join("; ")),
            other => ToolError::Numerical(other.to_string()),
        }
    }
}

impl From<cs_aging::simulator::SimError> for ToolError {
    fn from(e: cs_aging::simulator::SimError) -> Self {
        use cs_aging::simulator::SimError as S;
        match e {
            S::AllCensored(_) => ToolError::Numerical(e.to_string()),
            other => ToolError::Config(other.to_string()),
        }
    }
}

impl From<csv::Error> for ToolError {
    fn from(e: csv::Error) -> Self {
        ToolError::Io(std::io::Error::other(e.to_string()))
    }
}
