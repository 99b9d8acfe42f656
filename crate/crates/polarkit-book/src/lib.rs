//! Doc-test harness for the book in `book/`.
//!
//! mdbook cannot run snippets against crate dependencies, so each
//! chapter is mounted here as module documentation and `cargo test
//! --doc` compiles and executes every code block. One module per
//! chapter keeps test failures attributable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/images.md")]
pub mod images {}

#[doc = include_str!("../../../book/src/polarization.md")]
pub mod polarization {}

#[doc = include_str!("../../../book/src/fresnel.md")]
pub mod fresnel {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/mosaic.md")]
pub mod mosaic {}

#[doc = include_str!("../../../book/src/alignment.md")]
pub mod alignment {}

#[doc = include_str!("../../../book/src/separation.md")]
pub mod separation {}

#[doc = include_str!("../../../book/src/diffusion.md")]
pub mod diffusion {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
