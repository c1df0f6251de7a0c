//! Keeps the book honest: each chapter is included as rustdoc, so
//! `cargo test --doc -p guide-tests` compiles and runs every code block
//! the guide shows.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/meshes.md")]
pub mod meshes {}

#[doc = include_str!("../../../book/src/descriptors.md")]
pub mod descriptors {}

#[doc = include_str!("../../../book/src/novelty.md")]
pub mod novelty {}

#[doc = include_str!("../../../book/src/inheritance.md")]
pub mod inheritance {}

#[doc = include_str!("../../../book/src/landscape.md")]
pub mod landscape {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
