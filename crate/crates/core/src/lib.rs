//! Data-driven supply-chain disruption response engine.
//!
//! The crate is organised along the flow of a disruption response:
//!
//! * [`ingest`] parses and cleans the demand and supplier datasets and builds
//!   the [`ProfileStore`](ingest::ProfileStore).
//! * [`recommender`] holds the ranking primitives: criterion normalization,
//!   hard-constraint filtering, content-based and collaborative similarity,
//!   weighted multi-criteria scoring and algorithm selection.
//! * [`learning`] fits the supervised performance scorer and clusters
//!   suppliers when profiles are too vague to rank directly.
//! * [`response`] detects shortfalls and builds response plans: internal
//!   redundancy first, constrained external suppliers second.
//! * [`timeline`] turns a plan into a piecewise performance curve and
//!   resilience metrics for baseline vs. assisted comparison.

pub mod ingest;
pub mod learning;
pub mod recommender;
pub mod response;
pub mod timeline;
