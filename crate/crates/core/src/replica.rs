//! Replica-parallel Monte Carlo. Replica `r` always draws from stream `r`
//! of the given seed, and results come back in replica order, so output does
//! not depend on the worker count or on scheduling.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::RngState;

pub fn replicate<T, F>(seed: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngState) -> T + Sync + Send,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| f(&mut RngState::new(seed, r)))
        .collect()
}

pub fn try_replicate<T, F>(seed: u64, replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngState) -> Result<T> + Sync + Send,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| f(&mut RngState::new(seed, r)))
        .collect()
}
