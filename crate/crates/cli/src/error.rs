use bifluxon_client::ClientError;
use bifluxon_core::formats::FormatError;
use bifluxon_core::CoreError;
use bifluxon_service::ServiceError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or unreadable input; exit 2.
    #[error("{0}")]
    Input(String),
    /// Optimizer ran out of budget; the result was still written. Exit 3.
    #[error("fit did not converge (result written to {0})")]
    NotConverged(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::Unidentifiable(_) => CliError::Input(e.to_string()),
            CoreError::AtFlux { ref source, .. } if matches!(**source, CoreError::InvalidParameter { .. }) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        if e.is_rejection() {
            CliError::Input(e.to_string())
        } else {
            CliError::Failed(e.to_string())
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Format(f) => f.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}
