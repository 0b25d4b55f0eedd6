//! Core Chisel tooling: parser, static validator, cycle-accurate
//! interpreter, communication analysis, and a translator to standard
//! Chisel.
//!
//! Core Chisel describes datapath architectures as communicating finite
//! state machines. Modules own registers and memory banks and exchange
//! values over statically allocated one-way channels with a ready/valid
//! handshake. The [`interp`] module executes a design one clock cycle at a
//! time until it stops changing; the [`analysis`] module computes every
//! reachable combination of channel status bits and module states, which
//! exposes where a design can block or sit idle.

pub mod analysis;
pub mod ast;
pub mod chisel;
pub mod diag;
pub mod env;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod validate;

pub use ast::{pretty_print, Program};
pub use diag::{Diagnostic, ParseResult, Severity};
pub use parser::parse_program;
pub use validate::validate_program;
