use thiserror::Error;

use crate::channel::ChannelDiagnostic;

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid channel model: {}", format_diagnostics(.0))]
    InvalidChannel(Vec<ChannelDiagnostic>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no sign change of lambda_avg - mu_avg over loads {loads:?}")]
    NoCriticalLoad { loads: Vec<f64>, gaps: Vec<f64> },

    #[error(transparent)]
    Lp(#[from] svcrb_lp::LpError),
}

fn format_diagnostics(d: &[ChannelDiagnostic]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
