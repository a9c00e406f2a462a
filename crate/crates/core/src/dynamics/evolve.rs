//! Running schedules of phases and recording frames.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::step::step;
use super::{DynamicsError, Mode, SimParams, SimState};
use crate::curve::Vec3;

/// Stop once both the relative Simon energy change and the largest
/// per-bead force change (relative to the largest force) over the last
/// `window` steps fall below their tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Convergence {
    pub window: usize,
    pub force_tol: f64,
    pub energy_tol: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self { window: 100, force_tol: 1e-8, energy_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<Convergence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub params: SimParams,
    pub stop: StopRule,
    pub record_every: u64,
}

impl Phase {
    pub fn fixed(params: SimParams, steps: u64, record_every: u64) -> Self {
        Self { params, stop: StopRule { max_steps: steps, converge: None }, record_every }
    }

    pub fn until_converged(params: SimParams, max_steps: u64, record_every: u64) -> Self {
        Self { params, stop: StopRule { max_steps, converge: Some(Convergence::default()) }, record_every }
    }
}

/// One entry of a schedule file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub mode: Mode,
    pub steps: u64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spring_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "one")]
    pub record_every: u64,
    /// Stop early on convergence (default tolerances).
    #[serde(default)]
    pub converge: bool,
}

fn one() -> u64 {
    1
}

impl ScheduleEntry {
    /// The phase this entry describes, on top of `base`.
    pub fn to_phase(&self, base: &SimParams) -> Phase {
        let mut params = base.clone();
        params.mode = self.mode;
        params.dt = self.dt;
        if let Some(k) = self.spring_k {
            params.spring_constant = k;
        }
        if let Some(g) = self.gamma {
            params.viscous_damping = g;
        }
        Phase {
            params,
            stop: StopRule { max_steps: self.steps, converge: self.converge.then(Convergence::default) },
            record_every: self.record_every.max(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: u64,
    pub energy: f64,
    pub points: Vec<[f64; 3]>,
}

impl Frame {
    pub fn of(s: &SimState) -> Self {
        Self { step: s.step_index, energy: s.last_energy, points: s.curve.points().iter().map(|p| [p.x, p.y, p.z]).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub schedule: Vec<Phase>,
    pub frames: Vec<Frame>,
    /// Per phase: whether it stopped on convergence.
    pub converged: Vec<bool>,
}

/// Per-phase outcome of [`evolve_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOutcome {
    pub steps: u64,
    pub converged: bool,
}

struct Window {
    size: usize,
    past: VecDeque<(f64, Vec<Vec3>)>,
}

impl Window {
    fn push_and_test(&mut self, energy: f64, forces: &[Vec3], c: &Convergence) -> bool {
        self.past.push_back((energy, forces.to_vec()));
        if self.past.len() <= self.size {
            return false;
        }
        let (e0, f0) = self.past.pop_front().unwrap();
        let fmax2 = forces.iter().map(|f| f.norm_squared()).fold(0.0, f64::max);
        let df2 = forces.iter().zip(&f0).map(|(a, b)| (a - b).norm_squared()).fold(0.0, f64::max);
        let de = (energy - e0).abs() / energy.abs();
        de < c.energy_tol && df2 <= c.force_tol * c.force_tol * fmax2
    }
}

/// Runs the phases in order, passing every recorded frame to `sink`: the
/// starting frame, every `record_every` steps, and the end of each phase.
/// Velocities are zeroed on entering a Constrained phase.
pub fn evolve_with<F>(s: &mut SimState, schedule: &[Phase], mut sink: F) -> Result<Vec<PhaseOutcome>, DynamicsError>
where
    F: FnMut(&Frame),
{
    if schedule.is_empty() {
        return Err(DynamicsError::EmptySchedule);
    }
    for ph in schedule {
        ph.params.validate()?;
    }
    let mut last_recorded = s.step_index;
    s.refresh(&schedule[0].params)?;
    sink(&Frame::of(s));
    let mut outcomes = Vec::with_capacity(schedule.len());
    for ph in schedule {
        let p = ph.params.resolved_for(&s.curve)?;
        if p.mode == Mode::Constrained {
            s.velocities.iter_mut().for_each(|v| *v = Vec3::zeros());
        }
        s.refresh(&p)?;
        let every = ph.record_every.max(1);
        let mut window = ph.stop.converge.as_ref().map(|c| Window { size: c.window.max(1), past: VecDeque::new() });
        let mut done = 0;
        let mut converged = false;
        while done < ph.stop.max_steps {
            step(s, &p)?;
            done += 1;
            if done % every == 0 {
                sink(&Frame::of(s));
                last_recorded = s.step_index;
            }
            if let (Some(w), Some(c)) = (window.as_mut(), ph.stop.converge.as_ref()) {
                let forces = &s.cache.as_ref().unwrap().forces;
                if w.push_and_test(s.last_energy, forces, c) {
                    converged = true;
                    break;
                }
            }
        }
        if s.step_index != last_recorded {
            sink(&Frame::of(s));
            last_recorded = s.step_index;
        }
        outcomes.push(PhaseOutcome { steps: done, converged });
    }
    Ok(outcomes)
}

/// [`evolve_with`], collecting the frames.
pub fn evolve(s: &mut SimState, schedule: &[Phase]) -> Result<Trajectory, DynamicsError> {
    let mut frames = Vec::new();
    let outcomes = evolve_with(s, schedule, |f| frames.push(f.clone()))?;
    Ok(Trajectory {
        schedule: schedule.to_vec(),
        frames,
        converged: outcomes.iter().map(|o| o.converged).collect(),
    })
}
