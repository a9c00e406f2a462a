//! Messages exchanged over a connection, one JSON object per line.

use serde::{Deserialize, Serialize};

use knotdyn_core::dynamics::{Mode, SimParams};

/// Client to server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase", deny_unknown_fields)]
pub enum Command {
    Load {
        spec: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beads: Option<usize>,
    },
    Run {},
    Pause {},
    Mode { value: Mode },
    Perturb { magnitude: f64, seed: u64 },
    Set { param: String, value: f64 },
    Snapshot { path: String },
    /// Subscribe to an existing session instead of loading a new one.
    Join { session: u64 },
}

/// The parameters a client may change with `set`, plus the rest length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub dt: f64,
    pub spring_k: f64,
    pub gamma: f64,
    pub repulsion_exponent: f64,
    pub repulsion_strength: f64,
    pub frame_stride: u64,
    pub max_disp_fraction: f64,
    pub rest_edge_length: Option<f64>,
}

impl EffectiveParams {
    pub fn of(p: &SimParams, frame_stride: u64) -> Self {
        Self {
            dt: p.dt,
            spring_k: p.spring_constant,
            gamma: p.viscous_damping,
            repulsion_exponent: p.repulsion_exponent,
            repulsion_strength: p.repulsion_strength,
            frame_stride,
            max_disp_fraction: p.max_disp_fraction,
            rest_edge_length: p.rest_edge_length,
        }
    }
}

/// Names accepted by `set`.
pub const SETTABLE: [&str; 7] =
    ["dt", "spring_k", "gamma", "repulsion_exponent", "repulsion_strength", "frame_stride", "max_disp_fraction"];

/// Server to client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    Status {
        session: u64,
        params: EffectiveParams,
        step: u64,
        mode: Mode,
        running: bool,
        beads: usize,
    },
    Frame {
        session: u64,
        step: u64,
        energy: f64,
        points: Vec<[f64; 3]>,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn error(message: impl Into<String>) -> Self {
        Self::Error { message: message.into() }
    }

    /// The message as one line of JSON, newline included.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("server messages always serialize");
        s.push('\n');
        s
    }
}

/// Parses one client line. Errors carry the JSON parser's line and
/// column, or name the unknown command.
pub fn parse_command(line: &str) -> Result<Command, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| format!("malformed message: {e}"))?;
    match value.get("cmd").and_then(|c| c.as_str()) {
        None => return Err("malformed message: missing \"cmd\"".into()),
        Some(c) if !["load", "run", "pause", "mode", "perturb", "set", "snapshot", "join"].contains(&c) => {
            return Err(format!("unknown command {c:?}"))
        }
        Some(_) => {}
    }
    serde_json::from_value(value).map_err(|e| format!("malformed message: {e}"))
}
