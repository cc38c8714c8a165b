//! Exact-oracle experiments on small boolean-circuit distribution families:
//! maximum-likelihood puzzles, agnostic and proper learners, the
//! reductions between them, and the inequalities they rely on.

pub mod bits;
pub mod bounds;
pub mod circuit;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod family;
pub mod fixtures;
pub mod instance;
pub mod learner;
pub mod limits;
pub mod mle;
pub mod owpuzz;
pub mod reductions;
pub mod report;
pub mod rng;
pub mod stats;
pub mod verify;

pub use bits::BitString;
pub use circuit::{Circuit, CircuitBuilder};
pub use dist::{kl_divergence, statistical_distance, tensor_power, Distribution};
pub use error::{Error, Result};
pub use family::{dist_vector, draw_samples, exact_prob, CircuitFamily, Family, SampleSet, TableFamily};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/likelihood.md")]
    mod likelihood {}
    #[doc = include_str!("../../../book/src/puzzles.md")]
    mod puzzles {}
    #[doc = include_str!("../../../book/src/learning.md")]
    mod learning {}
    #[doc = include_str!("../../../book/src/reductions.md")]
    mod reductions {}
    #[doc = include_str!("../../../book/src/claims.md")]
    mod claims {}
}
