//! Simulation and evaluation harness for tool-using radiology agents.
//!
//! Tool sets are generated for eight availability conditions, an agent
//! backend (scripted or a live chat endpoint) is driven through
//! decomposition, step-wise tool execution and conclusion, and the session
//! transcript is scored with chain, outcome and text metrics.

pub mod corpus;
pub mod tools;
pub mod toolset_sim;
pub mod engine;
pub mod strategies;
pub mod metrics;
pub mod harness;
