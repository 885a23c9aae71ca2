use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Frequency query outside a tabulated interval.
    #[error("frequency {omega:e} rad/s outside tabulated range [{lo:e}, {hi:e}]")]
    Range { omega: f64, lo: f64, hi: f64 },

    /// Physically inconsistent parameter combination.
    #[error("model error: {0}")]
    Model(String),

    /// A numerical procedure failed to meet its contract.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the scenario or other user input rather than
    /// by the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Context { source, .. } => source.is_config(),
            other => matches!(other, Error::Config { .. } | Error::Invalid(_) | Error::Io { .. }),
        }
    }
}
