//! The scenario catalogue and its runner.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::io::{save_curve, TrajectoryHeader, TrajectoryWriter};
use super::ExperimentError;
use crate::curve::{resample_uniform, KnotCurve};
use crate::dynamics::{
    edge_tensions, evolve_with, is_round_circle, perturb, project_to_rest, stiffness_bound, swept_crossing_check, Frame, Mode,
    Phase, SimParams, SimState,
};
use crate::embedding::{default_beads, diagram_crossings, embed_closure, torus_knot_curve, EmbedParams};
use crate::tangle::{classify_two_bridge, parse_closure, reduce_closure, ExtendedRational};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Start {
    Torus(i64, i64),
    Closure(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Plan {
    /// One Constrained phase run to convergence.
    Descend,
    /// Descend, a FreeSprings interlude, descend again.
    Swing,
    /// One Constrained phase with a short step budget.
    Challenge,
}

struct Scenario {
    name: &'static str,
    start: Start,
    plan: Plan,
}

const CATALOGUE: [Scenario; 10] = [
    Scenario { name: "k11-7777", start: Start::Closure("K(11;(7,7,7,7))"), plan: Plan::Challenge },
    Scenario { name: "knot-15-10", start: Start::Closure("[15.10]"), plan: Plan::Challenge },
    Scenario { name: "n7777", start: Start::Closure("N((7,7,7,7))"), plan: Plan::Challenge },
    Scenario { name: "torus25", start: Start::Torus(2, 5), plan: Plan::Descend },
    Scenario { name: "torus32", start: Start::Torus(3, 2), plan: Plan::Descend },
    Scenario { name: "torus32-swing", start: Start::Torus(3, 2), plan: Plan::Swing },
    Scenario { name: "torus52", start: Start::Torus(5, 2), plan: Plan::Descend },
    Scenario { name: "trefoil23", start: Start::Torus(2, 3), plan: Plan::Descend },
    Scenario { name: "unknot-11-10", start: Start::Closure("[11.10]"), plan: Plan::Challenge },
    Scenario { name: "unknot-3-2", start: Start::Closure("[3.2]"), plan: Plan::Descend },
];

/// Scenario names in report order.
pub const SCENARIOS: [&str; 10] = [
    "k11-7777",
    "knot-15-10",
    "n7777",
    "torus25",
    "torus32",
    "torus32-swing",
    "torus52",
    "trefoil23",
    "unknot-11-10",
    "unknot-3-2",
];

const TORUS_BEADS: usize = 200;
const DESCENT_STEPS: u64 = 3_000_000;
const CHALLENGE_STEPS: u64 = 100_000;
const DESCENT_STRIDE: u64 = 5000;
const SWING_STRIDE: u64 = 25;
const SWING_STEPS: u64 = 5000;
/// Default perturbation, as a fraction of the rest edge length.
const PERTURBATION: f64 = 0.1;
/// Stretch of a mean-tension edge under the interlude springs.
const SWING_STRETCH: f64 = 0.05;
/// Interlude time step relative to the stability limit `2 / sqrt(bound)`.
const SWING_DT_FRACTION: f64 = 0.25;
/// Interlude steps per unit of interlude time, and damping per unit time.
const SWING_STEPS_PER_UNIT: f64 = 1000.0;
const SWING_GAMMA: f64 = 0.05;

/// Adjustments to a scenario's documented set-up. Unset fields keep the
/// scenario default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub beads: Option<usize>,
    pub repulsion_exponent: Option<f64>,
    pub repulsion_strength: Option<f64>,
    pub dt: Option<f64>,
    pub max_disp_fraction: Option<f64>,
    /// Step budget of each Constrained phase.
    pub max_steps: Option<u64>,
    /// Seeded perturbation of the start, as a fraction of the edge length.
    pub perturbation: Option<f64>,
    /// Stride of stored frames in Constrained phases.
    pub record_every: Option<u64>,
    pub swing_steps: Option<u64>,
    pub tube_scale: Option<f64>,
    pub strand_gap: Option<f64>,
    pub cell_size: Option<f64>,
    /// Directory for trajectories and reports (default `runs`).
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub mode: Mode,
    pub steps: u64,
    pub converged: bool,
    pub final_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub beads: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// The last phase stopped on convergence.
    pub converged: bool,
    /// Final curve passes the round-circle test at tolerance 0.05.
    pub round: bool,
    pub classification: String,
    pub trajectory: PathBuf,
    pub final_curve: PathBuf,
    pub wall_time_s: f64,
    pub steps: u64,
    pub phases: Vec<PhaseSummary>,
    /// Largest relative Simon energy rise over one Constrained step, not
    /// counting the step that re-enters the constraint after a Free phase.
    pub max_energy_rise: f64,
    pub frames: usize,
    /// Consecutive stored frame pairs failing the swept-crossing check.
    pub swept_crossings: usize,
}

fn lookup(name: &str) -> Result<&'static Scenario, ExperimentError> {
    CATALOGUE.iter().find(|s| s.name == name).ok_or_else(|| ExperimentError::UnknownScenario(name.to_string()))
}

fn embed_params(o: &Overrides, beads: Option<usize>) -> EmbedParams {
    let d = EmbedParams::default();
    EmbedParams {
        beads,
        strand_gap: o.strand_gap.unwrap_or(d.strand_gap),
        cell_size: o.cell_size.unwrap_or(d.cell_size),
        tube_scale: o.tube_scale.unwrap_or(d.tube_scale),
    }
}

/// The unperturbed start of a scenario: equal edges, unit length.
pub fn initial_curve(name: &str, o: &Overrides) -> Result<KnotCurve, ExperimentError> {
    match lookup(name)?.start {
        Start::Torus(a, b) => {
            let n = o.beads.unwrap_or(TORUS_BEADS);
            let c = torus_knot_curve(a, b, &embed_params(o, Some(n)), 1.0)?;
            Ok(resample_uniform(&c, n)?.normalized_length())
        }
        Start::Closure(text) => {
            let expr = parse_closure(text)?;
            let n = match o.beads {
                Some(n) => n,
                None => default_beads(diagram_crossings(&expr)?),
            };
            Ok(embed_closure(&expr, &embed_params(o, Some(n)))?)
        }
    }
}

fn classification(start: Start) -> Result<String, ExperimentError> {
    Ok(match start {
        Start::Torus(a, b) => {
            let (lo, hi) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
            if lo == 2 {
                format!("torus ({a},{b}): {}", classify_two_bridge(&ExtendedRational::new(hi, 1)?))
            } else {
                format!("torus ({a},{b})")
            }
        }
        Start::Closure(text) => format!("{text}: {}", reduce_closure(&parse_closure(text)?)?.class),
    })
}

fn base_params(o: &Overrides, n: usize) -> SimParams {
    let d = SimParams::default();
    SimParams {
        repulsion_exponent: o.repulsion_exponent.unwrap_or(d.repulsion_exponent),
        repulsion_strength: o.repulsion_strength.unwrap_or(d.repulsion_strength),
        dt: o.dt.unwrap_or(d.dt),
        max_disp_fraction: o.max_disp_fraction.unwrap_or(d.max_disp_fraction),
        rest_edge_length: Some(1.0 / n as f64),
        ..d
    }
}

/// The FreeSprings interlude started from `c`: springs that let an edge
/// under mean tension stretch by 5%, a time step a quarter of the
/// stability limit, and light damping on the interlude's own time scale.
pub fn swing_phase(c: &KnotCurve, base: &SimParams, steps: u64) -> Result<Phase, ExperimentError> {
    let rest = base.rest_edge_length.unwrap_or(c.total_length() / c.len() as f64);
    let t = edge_tensions(c, base)?;
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let mut p = base.clone();
    p.mode = Mode::Free;
    p.rest_edge_length = Some(rest);
    p.spring_constant = mean.max(0.0) / (SWING_STRETCH * rest);
    p.dt = SWING_DT_FRACTION * 2.0 / stiffness_bound(c, &p).sqrt();
    p.viscous_damping = SWING_GAMMA / (SWING_STEPS_PER_UNIT * p.dt);
    Ok(Phase::fixed(p, steps, SWING_STRIDE))
}

/// Stored frames closer than this fraction of the anchor's gap are
/// certified crossing-free by the swept check's displacement bound.
const ANCHOR_FRACTION: f64 = 0.4;

/// Sees every step's frame and stores the phase boundaries, the frames on
/// the stride, and enough frames in between that no bead moves more than
/// `ANCHOR_FRACTION` of the last stored frame's gap between stored frames.
struct Recorder {
    frames: Vec<Frame>,
    last: Option<Frame>,
    stride: u64,
    constrained: bool,
    /// The next step re-enters the constraint after a Free phase.
    reentry: bool,
    max_rise: f64,
    anchor_gap: f64,
}

fn max_displacement(a: &Frame, b: &Frame) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
        .fold(0.0, f64::max)
        .sqrt()
}

impl Recorder {
    fn new(stride: u64) -> Self {
        Self { frames: Vec::new(), last: None, stride, constrained: true, reentry: false, max_rise: 0.0, anchor_gap: f64::INFINITY }
    }

    fn store(&mut self, f: Frame) {
        let pts: Vec<crate::curve::Vec3> = f.points.iter().map(|p| crate::curve::Vec3::new(p[0], p[1], p[2])).collect();
        self.anchor_gap = if pts.len() >= 4 { crate::curve::min_nonadjacent_distance(&pts) } else { f64::INFINITY };
        self.frames.push(f);
    }

    fn see(&mut self, f: &Frame) {
        if let Some(prev) = &self.last {
            if prev.step == f.step {
                return;
            }
            if self.constrained && !std::mem::take(&mut self.reentry) {
                self.max_rise = self.max_rise.max((f.energy - prev.energy) / prev.energy.abs());
            }
        }
        let far = self.frames.last().is_some_and(|a| max_displacement(a, f) >= ANCHOR_FRACTION * self.anchor_gap);
        if far {
            if let Some(prev) = self.last.take() {
                if self.frames.last().map(|g| g.step) != Some(prev.step) {
                    self.store(prev);
                }
            }
        }
        if self.frames.is_empty() || f.step % self.stride == 0 {
            self.store(f.clone());
        }
        self.last = Some(f.clone());
    }

    fn close_phase(&mut self) {
        if let Some(f) = self.last.clone() {
            if self.frames.last().map(|g| g.step) != Some(f.step) {
                self.store(f);
            }
        }
    }
}

fn run_phase(s: &mut SimState, ph: &Phase, rec: &mut Recorder) -> Result<PhaseSummary, ExperimentError> {
    let mut every_step = ph.clone();
    every_step.record_every = 1;
    rec.stride = ph.record_every.max(1);
    let constrained = ph.params.mode == Mode::Constrained;
    rec.reentry = constrained && !rec.constrained;
    rec.constrained = constrained;
    let out = evolve_with(s, std::slice::from_ref(&every_step), |f| rec.see(f))?;
    rec.close_phase();
    Ok(PhaseSummary { mode: ph.params.mode, steps: out[0].steps, converged: out[0].converged, final_energy: s.last_energy })
}

fn count_swept(frames: &[Frame]) -> Result<usize, ExperimentError> {
    let mut bad = 0;
    let mut prev: Option<KnotCurve> = None;
    for f in frames {
        let c = super::io::frame_curve(f)?;
        if let Some(p) = &prev {
            if swept_crossing_check(p, &c) {
                bad += 1;
            }
        }
        prev = Some(c);
    }
    Ok(bad)
}

/// Builds the scenario's start (perturbed with `seed`, then put back on
/// the rest edge length), runs its schedule,
/// and writes `<name>-s<seed>.jsonl` (trajectory), `.json` (report) and
/// `.curve.json` (final curve) under the output directory.
pub fn run_scenario(name: &str, o: &Overrides, seed: u64) -> Result<ScenarioReport, ExperimentError> {
    let sc = lookup(name)?;
    let clock = Instant::now();
    let start = initial_curve(name, o)?;
    let n = start.len();
    let h = start.total_length() / n as f64;
    let base = base_params(o, n);
    let start = perturb(&start, o.perturbation.unwrap_or(PERTURBATION) * h, seed)?;
    let start = project_to_rest(&start, base.rest_edge_length.unwrap())?;
    let stride = o.record_every.unwrap_or(DESCENT_STRIDE).max(1);
    let budget = o.max_steps.unwrap_or(match sc.plan {
        Plan::Challenge => CHALLENGE_STEPS,
        _ => DESCENT_STEPS,
    });
    let descend = Phase::until_converged(base.clone(), budget, stride);

    let mut s = SimState::new(start)?;
    let initial_energy = s.last_energy;
    let mut rec = Recorder::new(stride);
    let mut schedule = vec![descend.clone()];
    let mut phases = vec![run_phase(&mut s, &descend, &mut rec)?];
    if sc.plan == Plan::Swing {
        let swing = swing_phase(&s.curve, &base, o.swing_steps.unwrap_or(SWING_STEPS))?;
        phases.push(run_phase(&mut s, &swing, &mut rec)?);
        phases.push(run_phase(&mut s, &descend, &mut rec)?);
        schedule.push(swing);
        schedule.push(descend);
    }

    let dir = o.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    std::fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
    let stem = format!("{name}-s{seed}");
    let trajectory = dir.join(format!("{stem}.jsonl"));
    let mut w = TrajectoryWriter::create(&trajectory, &TrajectoryHeader::new(base, schedule))?;
    for f in &rec.frames {
        w.frame(f)?;
    }
    w.finish()?;
    let final_curve = dir.join(format!("{stem}.curve.json"));
    save_curve(&s.curve, &final_curve)?;

    let report = ScenarioReport {
        name: name.to_string(),
        seed,
        beads: n,
        initial_energy,
        final_energy: s.last_energy,
        converged: phases.last().unwrap().converged,
        round: is_round_circle(&s.curve, 0.05),
        classification: classification(sc.start)?,
        trajectory,
        final_curve,
        wall_time_s: 0.0,
        steps: phases.iter().map(|p| p.steps).sum(),
        phases,
        max_energy_rise: rec.max_rise,
        frames: rec.frames.len(),
        swept_crossings: count_swept(&rec.frames)?,
    };
    let report = ScenarioReport { wall_time_s: clock.elapsed().as_secs_f64(), ..report };
    write_json(&dir.join(format!("{stem}.json")), &report)?;
    Ok(report)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::io(path, e.into()))?;
    std::fs::write(path, text + "\n").map_err(|e| ExperimentError::io(path, e))
}

/// Every scenario with the same seed and overrides, one after another.
pub fn run_all(o: &Overrides, seed: u64) -> Result<Vec<ScenarioReport>, ExperimentError> {
    SCENARIOS.iter().map(|name| run_scenario(name, o, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_and_names_agree() {
        let names: Vec<&str> = CATALOGUE.iter().map(|s| s.name).collect();
        assert_eq!(names, SCENARIOS);
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(sorted, names);
    }

    #[test]
    fn bead_counts_follow_the_catalogue() {
        let o = Overrides::default();
        for (name, n) in [("trefoil23", 200), ("torus52", 200), ("unknot-3-2", 100), ("unknot-11-10", 168), ("k11-7777", 408)] {
            let c = initial_curve(name, &o).unwrap();
            assert_eq!(c.len(), n, "{name}");
            assert!((c.total_length() - 1.0).abs() < 1e-12);
            let e = c.edge_lengths();
            let (lo, hi) = e.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(hi - lo < 1e-9 * hi, "{name}: {lo} {hi}");
        }
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(matches!(run_scenario("trefoil", &Overrides::default(), 0), Err(ExperimentError::UnknownScenario(_))));
    }

    #[test]
    fn recorder_keeps_stride_and_boundaries() {
        let f = |step, energy| Frame { step, energy, points: vec![[0.0; 3]; 3] };
        let mut r = Recorder::new(3);
        for k in 0..8 {
            r.see(&f(k, 10.0 - k as f64));
        }
        r.close_phase();
        r.see(&f(7, 3.0));
        r.constrained = false;
        r.see(&f(8, 100.0));
        r.close_phase();
        let steps: Vec<u64> = r.frames.iter().map(|g| g.step).collect();
        assert_eq!(steps, [0, 3, 6, 7, 8]);
        assert_eq!(r.max_rise, 0.0);
        r.constrained = true;
        r.reentry = true;
        r.see(&f(9, 110.0));
        assert_eq!(r.max_rise, 0.0);
        r.see(&f(10, 121.0));
        assert!((r.max_rise - 0.1).abs() < 1e-12);
    }

    #[test]
    fn recorder_stores_before_large_moves() {
        let square = |x: f64| vec![[x, 0.0, 0.0], [x + 1.0, 0.0, 0.0], [x + 1.0, 1.0, 0.0], [x, 1.0, 0.0]];
        let mut r = Recorder::new(1000);
        for k in 0..10 {
            r.see(&Frame { step: k, energy: 1.0, points: square(0.15 * k as f64) });
        }
        r.close_phase();
        let steps: Vec<u64> = r.frames.iter().map(|g| g.step).collect();
        // gap 1, so each stored frame is within 0.4 of the previous one
        assert_eq!(steps, [0, 2, 4, 6, 8, 9]);
    }
}
