//! Context-management strategies for tool-using LLM agents, evaluated over
//! recorded or simulated trajectories with a prefix-cache cost model.
//!
//! - [`trajectory`]: data model and the line-delimited log format
//! - [`strategy`]: raw, masking, summary and hybrid context views
//! - [`summarizer`]: extractive and chat-completion summary backends
//! - [`cost`]: tokens, cache splits, pricing, ledgers
//! - [`simulator`]: synthetic trajectories and sweeps
//! - [`analysis`]: paired bootstrap, token shares, length statistics
//! - [`config`] and [`cli`]: the `ctxcost` command

pub mod analysis;
pub mod cli;
pub mod config;
pub mod cost;
pub mod run;
pub mod simulator;
pub mod strategy;
pub mod summarizer;
pub mod trajectory;

pub use strategy::{ContextView, StrategyConfig, SummaryState, Variant};
pub use trajectory::{Segment, TokenCount, Trajectory, Turn};
