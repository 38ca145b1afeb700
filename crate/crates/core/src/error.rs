use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// The problem has no feasible solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Some transportation supply nodes cannot be routed to any demand.
    #[error("transportation problem infeasible; unroutable supply nodes {nodes:?}")]
    Unroutable { nodes: Vec<usize> },

    /// A device that no UAV can reach under the LoS radius constraint.
    #[error("device {device} is outside every UAV's LoS radius")]
    DeviceUnreachable { device: usize },

    /// A numerical routine failed to converge within its budget.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Mismatched dimensions between related inputs.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid configuration value.
    #[error("invalid config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Config syntax error.
    #[error("config parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// A simulation epoch failed.
    #[error("epoch {epoch} failed: {source}")]
    Epoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
