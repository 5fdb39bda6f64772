//! Deterministic, data-oblivious distribution and compaction of marked
//! arrays in linear time, over a simulated word-RAM.
//!
//! An array of `n` words has `m` marked words and `m` marked positions.
//! *Distribution* permutes the words so every marked word lands on a marked
//! position; *tight compaction* is the special case where the marked
//! positions are the first `m`. Everything here is deterministic, and
//! oblivious in the sense that the sequence of memory addresses touched
//! depends only on `n` and the configuration, never on the data — verified
//! by recording and comparing access traces.
//!
//! The machinery follows one chain: pseudorandom bipartite multigraph
//! families ([`graph`]) feed a distributed-style matching protocol
//! ([`matching`]), matchings drive block-level two-fold compaction at three
//! scales plus a loose-compaction ladder ([`compaction`]), and a red/blue
//! pair-swapping recursion turns compaction into full distribution
//! ([`distribution`]). [`baseline`] holds an `O(n log^2 n)` oblivious
//! sorting-network compactor and non-oblivious oracles for differential
//! testing and scaling comparisons.
//!
//! Start with the `examples/` directory: each major capability has one
//! runnable example. A thin `oblidist` binary exposes the same operations
//! as subcommands for scripting.

pub mod baseline;
pub mod compaction;
pub mod config;
pub mod distribution;
pub mod error;
pub mod graph;
pub mod io;
pub mod matching;
pub mod mem;
pub mod rng;

pub use error::{Error, Result};
