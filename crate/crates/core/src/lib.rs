//! Preference elicitation for generalized additive independence (GAI)
//! utility models.
//!
//! The crate covers the model representation and canonical decomposition
//! ([`model`], [`plan`], [`utility`]), exact elicitation with local standard
//! gambles ([`elicit`]), mixture-of-uniforms beliefs ([`belief`]), constrained
//! max-sum variable elimination ([`inference`]), myopic value-of-information
//! query selection ([`evoi`]), pluggable query strategies ([`strategy`]),
//! simulation experiments ([`harness`]) and persistent elicitation sessions
//! ([`session`]).

pub mod model;
pub mod plan;
pub mod belief;
pub mod utility;
pub mod inference;
pub mod elicit;
pub mod evoi;
pub mod strategy;
pub mod problem;
pub mod harness;
pub mod session;
