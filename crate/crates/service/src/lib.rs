//! Control service: live knot evolutions steered over line-delimited JSON.
//!
//! A connection creates a session with `load` or attaches to one with
//! `join`; every command is answered with a status or an error, and frames
//! of the attached session stream in between.

pub mod protocol;
mod server;
mod session;

pub use protocol::{parse_command, Command, EffectiveParams, ServerMessage, SETTABLE};
pub use server::{serve, Server, ServiceConfig};
