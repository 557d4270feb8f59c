//! Hash class Z and its applications.
//!
//! * [`hashfam`] / [`zclass`]: polynomial building blocks and the class Z
//!   with its deficiency classifier.
//! * [`hypergraph`]: the labeled d-partite hypergraph `G(S, h)` and its
//!   structural analytics (components, excess, 2-core, orientation).
//! * [`cuckoo`], [`gcuckoo`], [`mphf`], [`uniformsim`], [`loadbal`]: the data
//!   structures and simulators driven by Z.
//! * [`experiment`]: seeded Monte-Carlo harness behind the `zhash` binary.
//! * [`oracles`]: brute-force reference implementations for tests.

pub mod error;
pub mod prng;
pub mod hashfam;
pub mod zclass;
pub mod hypergraph;
pub mod cuckoo;
pub mod gcuckoo;
pub mod uniformsim;
pub mod mphf;
pub mod loadbal;
pub mod stats;
pub mod experiment;
pub mod oracles;

pub use error::{Error, Result};
pub use prng::Prng;
pub use zclass::{FullyRandom, HashSequence, ZFamily, ZParams};
