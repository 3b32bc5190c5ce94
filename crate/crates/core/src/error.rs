use thiserror::Error;

/// Errors raised by the signal, flow and synthesis pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not make progress.
    #[error("integration failure at t = {t}: step size {h:e} below minimum ({reason})")]
    Integration { t: f64, h: f64, reason: String },

    /// A signal construction whose seam or shape checks failed.
    #[error("construction error: {0}")]
    Construction(String),

    /// A numerical breakdown (vanishing trace, failed eigen-decomposition, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Rejection sampling ran out of budget.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// The brute-force oracle found no feasible minimum.
    #[error("oracle failure: {0}")]
    Oracle(String),

    /// A stage of the extremal pipeline produced a residual above tolerance.
    #[error("extremal stage `{stage}` failed: residual {residual:e} > {tol:e}")]
    Residual {
        stage: &'static str,
        residual: f64,
        tol: f64,
    },

    /// A window of a GPE schedule could not be synthesized.
    #[error("window {index}: {source}")]
    Window {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
