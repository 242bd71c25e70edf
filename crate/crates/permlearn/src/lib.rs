//! Unsupervised learning of image transformations from unordered sets of
//! binary images.
//!
//! Transformations are modeled as pixel permutations. Given only a bag of
//! `L`×`L` binary images, the learner jointly optimizes a permutation `t`
//! and a working set of image pairs so that the first image of every pair,
//! transformed by `t`, lands close (in Hamming distance) to the second.
//! Candidate partners come from an approximate close-match search over
//! replicated random-ordering bit-tries.
//!
//! The crate provides:
//!
//! - [`bits`]: packed bit vectors, Hamming/dot kernels, permutation algebra
//! - [`image`] and [`pgm`]: image containers and Netpbm I/O
//! - [`match_index`]: the replicated-trie close-match search
//! - [`pairset`]: the pair set, its column-major bit matrices, and the
//!   add/drop/remove-worst update policy
//! - [`optimizer`]: the hill-climbing minimization loop
//! - [`datasets`]: synthetic triangle generation and natural-patch ingestion
//! - [`affine`]: affine fitting and decomposition of learned permutations
//! - [`render`]: checkerboard/pattern visualization of permutations
//! - [`config`]: run parameters and sizing heuristics

pub mod affine;
pub mod bits;
pub mod config;
pub mod datasets;
mod error;
pub mod image;
pub mod match_index;
pub mod optimizer;
pub mod pairset;
pub mod pgm;
pub mod render;

pub use bits::{BitVector, Permutation};
pub use config::LearnConfig;
pub use error::{Error, Result};
pub use image::{BinaryRaster, BitImage, GrayImage};
pub use match_index::{ImageSet, Match, MatchIndex};
pub use optimizer::{LearnState, LearnedTransformation, Provenance};
pub use pairset::PairSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG stream ids, so one run seed yields independent streams per concern.
pub mod rng_stream {
    pub const DATASET: u64 = 0;
    pub const INDEX: u64 = 1;
    pub const LEARN: u64 = 2;
}

/// Seeded generator on a dedicated stream (see [`rng_stream`]).
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
