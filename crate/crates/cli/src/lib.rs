//! Result documents written by the `polycycle` command.

pub mod document;
