//! Instrumentation points between code groups.
//!
//! Every op splits its work into three groups: the backend kernel, tensor
//! ops that are overhead but still graph-resident (`ivy_compilable`), and
//! host-side argument handling that only runs eagerly (`ivy_eager`). Entries
//! into each group are always counted; wall time is only accumulated while
//! a [`measure`] call is active on the current thread.

use std::cell::RefCell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeGroup {
    Backend,
    IvyCompilable,
    IvyEager,
}

impl CodeGroup {
    pub const ALL: [CodeGroup; 3] = [CodeGroup::Backend, CodeGroup::IvyCompilable, CodeGroup::IvyEager];

    pub fn name(self) -> &'static str {
        match self {
            CodeGroup::Backend => "backend",
            CodeGroup::IvyCompilable => "ivy_compilable",
            CodeGroup::IvyEager => "ivy_eager",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Per-group values indexed by [`CodeGroup`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerGroup(pub [u64; 3]);

impl PerGroup {
    pub fn get(&self, g: CodeGroup) -> u64 {
        self.0[g.slot()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

#[derive(Default)]
struct State {
    timing: bool,
    stack: Vec<(CodeGroup, Option<Instant>)>,
    nanos: [u64; 3],
    entries: [u64; 3],
}

thread_local! {
    static STATE: RefCell<State> = RefCell::new(State::default());
}

struct ScopeGuard;

impl Drop for ScopeGuard {
    fn drop(&mut self) {
        STATE.with(|s| {
            let mut s = s.borrow_mut();
            let now = s.timing.then(Instant::now);
            if let Some((g, Some(start))) = s.stack.pop() {
                if let Some(now) = now {
                    s.nanos[g.slot()] += now.duration_since(start).as_nanos() as u64;
                }
            }
            if let Some(top) = s.stack.last_mut() {
                top.1 = now;
            }
        });
    }
}

/// Runs `f` attributed to `group`. Nested scopes pause the enclosing one.
#[inline]
pub fn scope<R>(group: CodeGroup, f: impl FnOnce() -> R) -> R {
    STATE.with(|s| {
        let mut s = s.borrow_mut();
        s.entries[group.slot()] += 1;
        let now = s.timing.then(Instant::now);
        if let (Some(now), Some((g, Some(start)))) = (now, s.stack.last().copied()) {
            s.nanos[g.slot()] += now.duration_since(start).as_nanos() as u64;
        }
        s.stack.push((group, now));
    });
    let _guard = ScopeGuard;
    f()
}

/// Eager-only argument handling.
#[inline]
pub fn eager<R>(f: impl FnOnce() -> R) -> R {
    scope(CodeGroup::IvyEager, f)
}

/// The innermost active group on this thread.
pub fn current() -> Option<CodeGroup> {
    STATE.with(|s| s.borrow().stack.last().map(|(g, _)| *g))
}

/// Cumulative scope entries per group on this thread.
pub fn entry_counts() -> PerGroup {
    STATE.with(|s| PerGroup(s.borrow().entries))
}

/// Runs `f` with timing enabled and returns nanoseconds spent per group.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, PerGroup) {
    let was = STATE.with(|s| {
        let mut s = s.borrow_mut();
        s.nanos = [0; 3];
        std::mem::replace(&mut s.timing, true)
    });
    let r = f();
    let nanos = STATE.with(|s| {
        let mut s = s.borrow_mut();
        s.timing = was;
        std::mem::take(&mut s.nanos)
    });
    (r, PerGroup(nanos))
}
