//! Localization service over [`indoorloc`]: a TCP line protocol that
//! ingests fingerprints, answers locate queries and runs per-connection
//! dead-reckoning tracks, plus the `indoorloc` command-line tool.

pub mod cli;
pub mod client;
pub mod protocol;
pub mod server;

pub use client::Client;
pub use protocol::{parse_request, parse_response, ErrorCode, ProtocolError, Request, Response};
pub use server::{handle_line, handle_request, Server, ServerConfig, ServerState, Session};
