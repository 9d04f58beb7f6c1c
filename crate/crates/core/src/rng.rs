//! Seeded per-UE random substreams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream keyed by
//! `seed ^ ue_index`, with a separate stream id per purpose. Results therefore
//! do not depend on the order (or thread) in which UEs are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Placement = 1,
    Channel = 2,
}

pub fn substream(seed: u64, ue_index: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ue_index as u64);
    rng.set_stream(purpose as u64);
    rng
}
