//! Self-repulsion evolution of bead curves.

mod constraint;
mod evolve;
mod forces;
mod shape;
#[cfg(target_arch = "x86_64")]
mod simd;
mod step;
mod swept;

pub use evolve::{evolve, evolve_with, Convergence, Frame, Phase, PhaseOutcome, ScheduleEntry, StopRule, Trajectory};
pub use forces::{repulsion_forces, repulsion_potential, simon_energy, spring_forces, spring_potential};
pub use shape::{is_round_circle, perturb};
pub use step::{step, stiffness_bound, StepReport};
pub use swept::swept_crossing_check;
pub(crate) use constraint::project_edges;

use serde::{Deserialize, Serialize};

use crate::curve::{CurveError, KnotCurve, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("beads {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("step collapsed at step {step}: {reason} persisted after {halvings} halvings of dt")]
    StepCollapse { step: u64, halvings: u32, reason: String },
    #[error("schedule has no phases")]
    EmptySchedule,
    #[error("no admissible perturbation after {0} attempts")]
    PerturbationFailed(usize),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Overdamped descent with rigid edge lengths.
    #[default]
    Constrained,
    /// Inertial beads joined by springs.
    #[serde(alias = "freesprings")]
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub repulsion_exponent: f64,
    pub repulsion_strength: f64,
    pub spring_constant: f64,
    /// `None` takes the mean edge length of the curve when a phase starts.
    pub rest_edge_length: Option<f64>,
    pub mode: Mode,
    pub dt: f64,
    pub max_disp_fraction: f64,
    pub viscous_damping: f64,
    pub energy_include_adjacent: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            repulsion_exponent: 5.0,
            repulsion_strength: 1.0,
            spring_constant: 0.0,
            rest_edge_length: None,
            mode: Mode::Constrained,
            dt: 1e-3,
            max_disp_fraction: 0.2,
            viscous_damping: 0.0,
            energy_include_adjacent: true,
        }
    }
}

fn check(ok: bool, what: &str) -> Result<(), DynamicsError> {
    if ok {
        Ok(())
    } else {
        Err(DynamicsError::Param(what.to_string()))
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        check(self.repulsion_exponent >= 2.0 && self.repulsion_exponent.is_finite(), "repulsion_exponent must be >= 2")?;
        check(self.repulsion_strength > 0.0 && self.repulsion_strength.is_finite(), "repulsion_strength must be > 0")?;
        check(self.spring_constant >= 0.0 && self.spring_constant.is_finite(), "spring_constant must be >= 0")?;
        if let Some(l) = self.rest_edge_length {
            check(l > 0.0 && l.is_finite(), "rest_edge_length must be > 0")?;
        }
        check(self.dt > 0.0 && self.dt.is_finite(), "dt must be > 0")?;
        check(
            self.max_disp_fraction > 0.0 && self.max_disp_fraction < 1.0,
            "max_disp_fraction must lie in (0, 1)",
        )?;
        check(self.viscous_damping >= 0.0 && self.viscous_damping.is_finite(), "viscous_damping must be >= 0")?;
        Ok(())
    }

    /// Validated copy with the rest length fixed from `curve` when unset.
    pub fn resolved_for(&self, curve: &KnotCurve) -> Result<SimParams, DynamicsError> {
        self.validate()?;
        let mut p = self.clone();
        if p.rest_edge_length.is_none() {
            p.rest_edge_length = Some(curve.total_length() / curve.len() as f64);
        }
        Ok(p)
    }

    pub(crate) fn rest(&self, curve: &KnotCurve) -> f64 {
        self.rest_edge_length.unwrap_or_else(|| curve.total_length() / curve.len() as f64)
    }
}

/// Forces and gap of the current configuration, kept between steps.
#[derive(Clone, Debug)]
pub(crate) struct Cache {
    exponent: f64,
    strength: f64,
    include_adjacent: bool,
    forces: Vec<Vec3>,
    simon: f64,
    potential: f64,
    /// Lower bound on the minimum non-adjacent segment distance.
    gap: f64,
    /// Exact distance at the last full recomputation.
    gap_exact: f64,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub curve: KnotCurve,
    pub velocities: Vec<Vec3>,
    pub step_index: u64,
    pub last_energy: f64,
    /// Time step the next Constrained step starts from; shrinks after
    /// rejected attempts and grows back toward the phase's `dt`.
    pub dt_hint: Option<f64>,
    /// Displacement of the last accepted Constrained step.
    pub(crate) last_move: Vec<Vec3>,
    pub(crate) cache: Option<Cache>,
}

impl PartialEq for SimState {
    fn eq(&self, other: &Self) -> bool {
        self.curve == other.curve
            && self.velocities == other.velocities
            && self.step_index == other.step_index
            && self.last_energy.to_bits() == other.last_energy.to_bits()
    }
}

impl SimState {
    /// At rest, step 0, with the Simon energy of `curve` (adjacent pairs
    /// included).
    pub fn new(curve: KnotCurve) -> Result<Self, DynamicsError> {
        curve.check_embedded()?;
        let last_energy = simon_energy(&curve, true)?;
        let n = curve.len();
        Ok(Self { curve, velocities: vec![Vec3::zeros(); n], step_index: 0, last_energy, dt_hint: None, last_move: Vec::new(), cache: None })
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.velocities.iter().map(|v| v.norm_squared()).sum::<f64>()
    }

    pub fn momentum(&self) -> Vec3 {
        self.velocities.iter().sum()
    }

    /// Current repulsion forces (cached).
    pub fn forces(&mut self, p: &SimParams) -> Result<&[Vec3], DynamicsError> {
        self.refresh(p)?;
        Ok(&self.cache.as_ref().unwrap().forces)
    }

    pub(crate) fn refresh(&mut self, p: &SimParams) -> Result<&Cache, DynamicsError> {
        let fresh = matches!(&self.cache, Some(c)
            if c.exponent == p.repulsion_exponent
                && c.strength == p.repulsion_strength
                && c.include_adjacent == p.energy_include_adjacent);
        if !fresh {
            self.cache = Some(evaluate(self.curve.points(), p, None)?);
        }
        let c = self.cache.as_ref().unwrap();
        self.last_energy = c.simon;
        Ok(c)
    }
}

/// `c` with every edge set to `rest` by the Constrained-mode projection,
/// provided the move keeps it embedded and passes no strand through
/// another.
pub fn project_to_rest(c: &KnotCurve, rest: f64) -> Result<KnotCurve, DynamicsError> {
    check(rest > 0.0 && rest.is_finite(), "rest length must be > 0")?;
    let mut pts = c.points().to_vec();
    if constraint::project_edges(&mut pts, rest).is_none() {
        return Err(DynamicsError::Param("edge projection did not converge".into()));
    }
    let out = KnotCurve::embedded(pts)?;
    if swept::swept_crossing_check(c, &out) {
        return Err(DynamicsError::Param("edge projection passes a strand through another".into()));
    }
    Ok(out)
}

/// Tension in each edge (edge `i` joins beads `i` and `i + 1`) that the
/// length constraints must supply against the repulsion at `c`.
pub fn edge_tensions(c: &KnotCurve, p: &SimParams) -> Result<Vec<f64>, DynamicsError> {
    let f = forces::repulsion_forces(c, p.repulsion_exponent, p.repulsion_strength)?;
    Ok(constraint::edge_tensions(c.points(), &f))
}

/// Forces and energy at `points`. `moved` carries the previous gap bound,
/// its exact reference and the largest bead displacement since; the exact
/// gap is recomputed once the bound has halved.
pub(crate) fn evaluate(points: &[Vec3], p: &SimParams, moved: Option<(f64, f64, f64)>) -> Result<Cache, DynamicsError> {
    let mut forces = vec![Vec3::zeros(); points.len()];
    let sums = forces::pair_pass(
        points,
        p.repulsion_exponent,
        p.repulsion_strength,
        p.energy_include_adjacent,
        Some(&mut forces),
    )?;
    let (gap, gap_exact) = match moved {
        Some((bound, exact, step)) if bound - 2.0 * step > 0.5 * exact => (bound - 2.0 * step, exact),
        _ => {
            let g = crate::curve::min_nonadjacent_distance(points);
            (g, g)
        }
    };
    Ok(Cache {
        exponent: p.repulsion_exponent,
        strength: p.repulsion_strength,
        include_adjacent: p.energy_include_adjacent,
        forces,
        simon: sums.simon,
        potential: sums.potential,
        gap,
        gap_exact,
    })
}
