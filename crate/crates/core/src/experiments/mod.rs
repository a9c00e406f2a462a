//! Named scenarios with persisted trajectories and summary reports.

mod io;
mod scenario;
mod table;

pub use io::{
    curve_to_string, frame_curve, load_curve, parse_curve, read_trajectory, save_curve, TrajectoryHeader,
    TrajectoryWriter, CURVE_FORMAT, TRAJECTORY_FORMAT,
};
pub use scenario::{initial_curve, run_all, run_scenario, swing_phase, Overrides, PhaseSummary, ScenarioReport, SCENARIOS};
pub use table::{report_table, write_report_json};

use std::path::{Path, PathBuf};

use crate::curve::CurveError;
use crate::dynamics::DynamicsError;
use crate::embedding::EmbedError;
use crate::tangle::TangleError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: malformed file: {message}")]
    Malformed { path: PathBuf, line: usize, column: usize, message: String },
    #[error("no reports to tabulate")]
    EmptyReports,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Tangle(#[from] TangleError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}
