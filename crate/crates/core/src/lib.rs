//! Cartan connections on local models: Lie algebra data, exact differential
//! forms, curvature and characteristic forms, developing maps, Spencer
//! prolongation and truncated jet groups.
//!
//! The guide in `book/` walks through each module; its snippets are compiled
//! as doc-tests of this crate.

pub mod error;
pub mod extension;
pub mod cartan;
pub mod developing;
pub mod chart;
pub mod chern_weil;
pub mod forms;
pub mod group;
pub mod lie;
pub mod jets;
pub mod linalg;
pub mod poly;
pub mod prolongation;
pub mod sampling;
pub mod taylor;

pub use error::{Error, Result};

/// Guide chapters, compiled so their snippets stay in sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/lie_algebras.md")]
    pub struct LieAlgebras;
    #[doc = include_str!("../../../book/src/forms.md")]
    pub struct Forms;
    #[doc = include_str!("../../../book/src/cartan.md")]
    pub struct Cartan;
    #[doc = include_str!("../../../book/src/chern_weil.md")]
    pub struct ChernWeil;
    #[doc = include_str!("../../../book/src/extension.md")]
    pub struct Extension;
    #[doc = include_str!("../../../book/src/developing.md")]
    pub struct Developing;
    #[doc = include_str!("../../../book/src/prolongation.md")]
    pub struct Prolongation;
    #[doc = include_str!("../../../book/src/jets.md")]
    pub struct Jets;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
