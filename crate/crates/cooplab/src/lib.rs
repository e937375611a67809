//! Cooperation laboratory for parameterized 2x2 dyadic games.
//!
//! The crate computes cooperation matrices over an (S, T) payoff grid three
//! ways and compares them:
//!
//! - analytically, from replicator-dynamics fixed points and their stability
//!   ([`equilibrium`]),
//! - from behavioral phenotype populations ([`phenotype`]),
//! - from live agents, including an LLM chat pipeline with staged answer
//!   extraction and logical verification ([`llm`], [`runner`]).
//!
//! [`analysis`] holds the comparison metrics, dataset ingestion, and heatmap
//! rendering; [`cli`] exposes everything as one binary.

pub mod analysis;
pub mod cli;
pub mod equilibrium;
pub mod game;
pub mod llm;
pub mod matrix;
pub mod phenotype;
pub mod runner;

pub use game::{Choice, Game, GameClass, GridSpec};
pub use matrix::CooperationMatrix;
