//! Command line front end: reads a system description, runs one of the
//! `resonances`, `normalize`, `brjuno`, `iterate` or `verify` commands and
//! renders the report as text or JSON.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 mathematical failure
//! (zero divisor, A-condition, failed verification), 4 bound violation
//! under `--strict`.

pub mod args;
pub mod backend;
pub mod commands;
pub mod input;

pub use args::{Cli, Command, Format};
pub use commands::{run, CliError, Outcome};
pub use input::{parse_system, InputError, SystemSpec};
