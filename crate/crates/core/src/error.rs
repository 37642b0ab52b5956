use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error; every variant carries the module it originates from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("mesh: {0}")]
    Mesh(#[from] crate::mesh::MeshError),
    #[error("solver: {0}")]
    Solver(#[from] crate::fem::SolverError),
    #[error("candidates: {0}")]
    Candidates(#[from] crate::candidates::CandidateError),
    #[error("deviation: {0}")]
    Deviation(#[from] crate::deviation::DeviationError),
    #[error("search: {0}")]
    Search(#[from] crate::search::SearchError),
    #[error("config: {0}")]
    Config(#[from] crate::report::ConfigError),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
