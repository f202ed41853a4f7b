//! Multi-robot task planning: plan language, coalition formation, a
//! deterministic world simulator, metrics and the benchmark harness.

pub mod coalition;
pub mod dsl;
pub mod executor;
pub mod issue;
pub mod model;
pub mod metrics;
pub mod planner;
pub mod bench;
