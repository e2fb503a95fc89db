//! Library side of the `walsh-noise` command-line tool.

pub mod commands;
pub mod model;
pub mod output;
pub mod pipeline;
pub mod run;
pub mod table;
