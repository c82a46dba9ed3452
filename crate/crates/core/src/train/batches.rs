//! Epoch batching: a seeded shuffle per epoch, final short batch kept.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Shuffle `0..n_items` and split into batches. Every item appears exactly
/// once per epoch.
pub fn make_batches(n_items: usize, batch_size: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if n_items == 0 {
        return Err(Error::Data("empty manifest: nothing to batch".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..n_items).collect();
    rng.shuffle(&mut order);
    Ok(order.chunks(batch_size).map(|c| c.to_vec()).collect())
}
