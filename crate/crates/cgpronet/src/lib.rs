//! Standard-library companion to `cgpronet-core`: file formats, run
//! configuration, experiment drivers, plot emission, and the `cgpronet` CLI.

pub mod checkpoint;
pub mod config;
pub mod experiments;
pub mod io;
pub mod plot;
