//! Semi-automatic validation of clone-detector output.

pub mod action;
pub mod analysis;
pub mod classifier;
pub mod corpus;
pub mod java;
pub mod key;
pub mod knowledge;
pub mod metrics;
pub mod outcome;
pub mod pairs_csv;
pub mod pipeline;
pub mod ratio;
pub mod stats;
pub mod study;
