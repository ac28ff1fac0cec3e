//! Doc-test shims for the guide in `book/`. Each chapter is included as a
//! module's documentation so `cargo test` compiles and runs every rust
//! snippet in the book; a drifting chapter fails the build instead of
//! rotting. Only compiled under `cfg(doctest)`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/distributions.md")]
pub mod distributions {}

#[doc = include_str!("../../../book/src/permutations.md")]
pub mod permutations {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/typicality.md")]
pub mod typicality {}

#[doc = include_str!("../../../book/src/matching.md")]
pub mod matching {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
