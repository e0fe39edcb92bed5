//! Continuous double auction simulator with zero-intelligence, adaptive PRZI
//! and genetic-programming traders, plus recurrence analysis of the
//! resulting strategy dynamics.

pub mod analysis;
pub mod cli;
pub mod coevo;
pub mod lob;
pub mod rng;
pub mod session;
pub mod stgp;
pub mod traders;
