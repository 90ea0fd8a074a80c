#![allow(dead_code)]

pub mod checks;
pub mod fuzz;
pub mod sha256;

use flightnft_core::merkle::DataBlock;
use rand::Rng;

pub fn random_dataset<R: Rng>(rng: &mut R, n: u64) -> Vec<DataBlock> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(0..48);
            DataBlock {
                index: i,
                timestamp: 1_000_000 * i + rng.gen_range(0..1000),
                payload: (0..len).map(|_| rng.gen()).collect(),
            }
        })
        .collect()
}
