//! Backend resolution.
//!
//! A call resolves its backend in priority order: an explicit `f` argument,
//! then the innermost entry of the global stack, then the backend tag of the
//! tensor arguments.

use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::backend::{self, BackendRef};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Environment variable naming the backend the global stack starts with.
pub const BACKEND_ENV: &str = "TEMPLAR_BACKEND";

/// A stack of globally selected backends.
#[derive(Debug, Default)]
pub struct DispatchContext {
    stack: RwLock<Vec<BackendRef>>,
}

impl DispatchContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// A context seeded from `TEMPLAR_BACKEND`, if set.
    pub fn from_env() -> Result<Self> {
        let ctx = Self::new();
        if let Ok(name) = std::env::var(BACKEND_ENV) {
            let name = name.trim();
            if !name.is_empty() {
                let f = backend::by_id(name)
                    .ok_or_else(|| Error::State(format!("{BACKEND_ENV}={name} names no registered backend")))?;
                ctx.set_framework(f);
            }
        }
        Ok(ctx)
    }

    pub fn set_framework(&self, f: BackendRef) {
        self.stack.write().push(f);
    }

    pub fn unset_framework(&self) -> Result<BackendRef> {
        self.stack
            .write()
            .pop()
            .ok_or_else(|| Error::State("unset_framework on an empty stack".into()))
    }

    /// The innermost global selection.
    pub fn current(&self) -> Option<BackendRef> {
        self.stack.read().last().copied()
    }

    pub fn depth(&self) -> usize {
        self.stack.read().len()
    }

    pub fn resolve(&self, args: &[&Tensor], f: Option<BackendRef>) -> Result<BackendRef> {
        if let Some(f) = f {
            return Ok(f);
        }
        if let Some(f) = self.current() {
            return Ok(f);
        }
        infer(args)
    }
}

/// Backend named by the tensors' tags. Reads tags only, never payloads.
pub fn infer(args: &[&Tensor]) -> Result<BackendRef> {
    let Some(first) = args.first() else {
        return Err(Error::NoBackend);
    };
    let id = first.backend_id();
    if args.iter().any(|t| t.backend_id() != id) {
        let mut ids: Vec<String> = args.iter().map(|t| t.backend_id().to_string()).collect();
        ids.sort();
        ids.dedup();
        return Err(Error::AmbiguousBackend(ids));
    }
    backend::by_id(id).ok_or(Error::NoBackend)
}

static GLOBAL: Lazy<DispatchContext> = Lazy::new(|| {
    DispatchContext::from_env().unwrap_or_else(|e| {
        log_invalid_env(&e);
        DispatchContext::new()
    })
});

fn log_invalid_env(e: &Error) {
    eprintln!("warning: ignoring {BACKEND_ENV}: {e}");
}

/// The process-wide context.
pub fn global() -> &'static DispatchContext {
    &GLOBAL
}

pub fn get_framework(args: &[&Tensor], f: Option<BackendRef>) -> Result<BackendRef> {
    GLOBAL.resolve(args, f)
}

pub fn set_framework(f: BackendRef) {
    GLOBAL.set_framework(f)
}

pub fn unset_framework() -> Result<BackendRef> {
    GLOBAL.unset_framework()
}
