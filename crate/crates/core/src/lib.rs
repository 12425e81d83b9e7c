//! Desired-state management for distributed component applications.
//!
//! A description written in the `.deladas` language ([`lang`]) is compiled
//! ([`compiler`]) into a binary linear constraint problem ([`csp`]), whose
//! solutions decode into concrete configurations ([`config`]). The
//! [`sim`] module enacts a chosen configuration inside a deterministic
//! deployment simulator and keeps it compliant as hosts fail.

pub mod lang;
pub mod compiler;
pub mod config;
pub mod csp;
pub mod experiments;
pub mod sim;
