//! Trajectory-parallel map with order-preserving collection.
//!
//! Every trajectory draws from its own `RngStream`, results are collected in
//! index order and reduced sequentially, so outputs do not depend on the
//! size of the rayon pool.

use rayon::prelude::*;

use crate::error::Result;

pub fn map_indexed<T, F>(count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}
