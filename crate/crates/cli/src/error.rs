use std::path::PathBuf;

use crate::config::ConfigIssue;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n{}", join_issues(.0))]
    Invalid(Vec<ConfigIssue>),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", .path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {message}", .path.display())]
    Trace { path: PathBuf, message: String },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("{0} run(s) failed")]
    RunsFailed(usize),
    #[error(transparent)]
    Core(#[from] combeo::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl HarnessError {
    /// 1 for validation failures, 2 for everything that went wrong at run time.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Invalid(_) => 1,
            _ => 2,
        }
    }
}
