//! Sequential / data-parallel execution of per-client work.
//!
//! Clients inside a round are pure functions of broadcast state and their own
//! keyed randomness, so they can be evaluated in any order. `map_clients`
//! preserves input order in its output, and callers reduce the returned
//! vector in ascending position, which keeps floating-point results identical
//! between the two modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to evaluate the per-client closures of a round.
///
/// `Parallel` uses the rayon pool when the crate is built with the `parallel`
/// feature (the default) and silently degrades to sequential execution when
/// it is not. Results are bit-identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// Apply `f` to every item, returning results in input order.
pub fn map_clients<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync + Copy,
    U: Send,
    F: Fn(T) -> U + Sync,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => items.par_iter().map(|&t| f(t)).collect(),
        _ => items.iter().map(|&t| f(t)).collect(),
    }
}
