use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ncakit_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{}: {source}", path.display())]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("{0}")]
    Invalid(String),

    /// Self-check failures; the only case mapped to exit code 2.
    #[error("{0} invariant check(s) failed")]
    Invariant(usize),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> Error {
        let path = path.into();
        move |source| Error::Csv { path, source }
    }

    /// 1 for user-facing errors, 2 for invariant failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Invariant(_)
            | Error::Core(
                ncakit_core::Error::NonFiniteGradient { .. }
                | ncakit_core::Error::NonFiniteLoss { .. },
            ) => 2,
            _ => 1,
        }
    }
}
