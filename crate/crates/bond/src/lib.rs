//! Simulator, input files, reports and the `bond` command line on top of
//! [`bond_core`].

pub mod cli;
pub mod input;
pub mod report;
pub mod rng;
pub mod sim;
