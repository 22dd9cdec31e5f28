//! File formats, campaign runner and command-line front end around
//! [`blockfw_core`].

pub mod campaign;
pub mod cli;
pub mod instance;
pub mod manifest;
pub mod output;

pub use blockfw_core as core;
