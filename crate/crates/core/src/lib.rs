pub mod autodiff;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod hyperbolic;
pub mod influence;
pub mod matrix;
pub mod meta;
pub mod params;
pub mod proto;

pub use error::{Error, Result};

/// Runs the guide's snippets as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/poincare-ball.md")]
    pub struct PoincareBall;
    #[doc = include_str!("../../../book/src/autodiff.md")]
    pub struct Autodiff;
    #[doc = include_str!("../../../book/src/graphs.md")]
    pub struct Graphs;
    #[doc = include_str!("../../../book/src/encoder.md")]
    pub struct Encoder;
    #[doc = include_str!("../../../book/src/prototypes.md")]
    pub struct Prototypes;
    #[doc = include_str!("../../../book/src/meta-learning.md")]
    pub struct MetaLearning;
    #[doc = include_str!("../../../book/src/influence.md")]
    pub struct Influence;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
