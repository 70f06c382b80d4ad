//! Configuration layer of the `esst` command-line tool.

pub mod config;
