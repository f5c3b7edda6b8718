//! Library side of the experiment front-end: configs, the scene runner and
//! the subcommand implementations. The `motiondepth` binary is a thin clap
//! wrapper over [`commands`].

pub mod commands;
pub mod config;
pub mod runner;
