//! Frame selection for embedding-based text-to-video retrieval.
//!
//! Everything here operates on precomputed per-frame and per-query embedding
//! vectors. The crate provides:
//!
//! * [`kernels`]: cosine similarity, softmax, mean and weighted pooling,
//!   scaled dot-product attention;
//! * [`corpus`]: the embedding corpus model, its binary file format and a
//!   synthetic generator with planted redundancy, noise and query targets;
//! * [`clustering`]: k-medoids++ over cosine distance plus a brute-force oracle;
//! * [`selectors`]: the six frame selection policies and score combination;
//! * [`learn`]: contrastive losses, analytic gradients and training loops for
//!   the quality scorer and the attention selector;
//! * [`retrieval`]: similarity matrices, shortlisting and ranking metrics;
//! * [`bench`]: interaction op counting and per-query timing;
//! * [`cli`]: the `framesel` command-line surface.

pub mod bench;
pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod kernels;
pub mod learn;
pub mod retrieval;
pub mod selectors;

pub use error::{Error, Result};
pub use kernels::Matrix;

/// Derives an independent stream seed from a base seed (splitmix64 finalizer).
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
