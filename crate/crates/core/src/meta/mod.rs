//! Episodic meta-learning over subgraph encoders.
//!
//! Episodes are built by [`make_meta_split`] for single- or multi-graph
//! setups with shared or disjoint labels. [`meta_train`] repeatedly adapts
//! the encoder to sampled episodes ([`inner_adapt`]) and moves the shared
//! initialization with the query-loss gradient taken at the adapted
//! parameters ([`meta_step`]). [`meta_test`] adapts a fresh copy per test
//! episode and reports query accuracy.

mod ablation;
mod episode;
mod optim;
mod stats;
mod train;

pub use ablation::{run_ablation, AblationRow, AblationTable, Variant};
pub use episode::{
    make_meta_split, Episode, MetaSplit, Setup, SplitConfig, Task, LINK_SUPPORT_FRACTION,
};
pub use optim::{apply_step, riemannian_adam_step, rsgd_step, MetaOptimizer, OptimizerState};
pub use stats::{summarize, Summary};
pub use train::{
    inner_adapt, meta_step, meta_test, meta_train, Head, LogSplit, StepRecord, StepStats,
    TestMetrics, TrainConfig, TrainOutcome,
};

#[cfg(test)]
mod tests;
