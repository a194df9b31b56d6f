//! Pluggable evaluation of independent per-probe work.
//!
//! Certification evaluates seminorms probe by probe and then reduces in
//! probe order, so any executor that returns results in index order gives
//! identical certificates.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Returns `[f(0), …, f(len-1)]` in index order.
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
