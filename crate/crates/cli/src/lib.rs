//! End-to-end demos built on `templar` and `templar-libs`: gradient-based
//! drone motion planning, a one-unit tanh model fit and a pendulum
//! swing-up by gradient ascent through the dynamics.

pub mod fc;
pub mod pendulum;
pub mod plan;
pub mod plot;
pub mod scene;

use std::path::PathBuf;

use templar::backend::{self, BackendRef};

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Tensor(#[from] templar::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed scene: {0}")]
    Scene(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DemoError>;

/// Backend named `name`, else the top of the global stack (seeded from
/// `TEMPLAR_BACKEND`), else autodiff.
pub fn select_backend(name: Option<&str>) -> Result<BackendRef> {
    match name {
        Some(n) => backend::by_id(n).ok_or_else(|| {
            let known: Vec<_> = backend::registered().iter().map(|b| b.id()).collect();
            templar::Error::InvalidArgument(format!("unknown backend `{n}` (known: {})", known.join(", "))).into()
        }),
        None => Ok(templar::handler::global().current().unwrap_or_else(backend::autodiff)),
    }
}

pub(crate) fn write_json<T: serde::Serialize>(value: &T, path: &std::path::Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|source| DemoError::Write { path: path.to_owned(), source })
}
