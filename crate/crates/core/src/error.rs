use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("synthesis infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("model fingerprint mismatch: gains built for {expected}, model is {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("simulation aborted at t = {t}: {msg}")]
    Simulation { t: f64, msg: String },
    #[error(transparent)]
    Sdp(#[from] dsas_sdp::SdpError),
}

pub type Result<T> = std::result::Result<T, CoreError>;

pub(crate) fn domain(msg: impl Into<String>) -> CoreError {
    CoreError::Domain(msg.into())
}
