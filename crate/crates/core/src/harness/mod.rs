//! Reproducible Monte Carlo orchestration: seeds, estimators, configuration, experiments and
//! the acceptance suite.

pub mod config;
pub mod estimate;
pub mod experiment;
pub mod seeds;
pub mod suite;
