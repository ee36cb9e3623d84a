//! Decision support for keeping quality control plans up to date.
//!
//! - [`mcdm`]: AHP priorities and Choquet aggregation (manual choice).
//! - [`cbr`]: case representation, retrieval, revision and retention.
//! - [`workflow`]: the decision-session state machine and scenario catalog.
//! - [`store`]: JSON persistence and the audit log.

pub mod cbr;
pub mod mcdm;
pub mod store;
pub mod workflow;
