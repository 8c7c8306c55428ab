//! Core of the `xlate` code-translation pipeline.
//!
//! Everything in this crate is pure computation over owned values: prompt
//! rendering, completion extraction, the mock chat transcript, error-message
//! sanitizing, output comparison, coverage normalization, spectrum-based
//! fault localization, and the refinement state machine itself. Anything
//! that touches processes, files or the network is reached through the
//! [`gateway::Backend`] and [`harness::TestHarness`] traits, implemented by
//! the std companion crate.

#![no_std]

extern crate alloc;

pub mod compare;
pub mod coverage;
pub mod extract;
pub mod gateway;
pub mod harness;
pub mod literal;
pub mod metrics;
pub mod model;
pub mod prompt;
pub mod refine;
pub mod sbfl;
pub mod scope;
pub mod summarize;
pub mod testgen;
pub mod translate;

pub use model::{LanguageId, SourceProgram, TranslationTask};
