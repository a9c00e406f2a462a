//! One accepted step in either mode.

use super::constraint::{edge_error, project_edges, tangent_component, EDGE_TOLERANCE};
use super::forces::add_spring_forces;
use super::swept::swept_points;
use super::{evaluate, Cache, DynamicsError, Mode, SimParams, SimState};
use crate::curve::{KnotCurve, Vec3};

pub(crate) const MAX_HALVINGS: u32 = 20;
const GROWTH: f64 = 1.1;
/// Relative rise of the repulsion potential tolerated in a Constrained
/// step.
pub(crate) const ENERGY_SLACK: f64 = 1e-12;
/// Relative rise of the Simon energy tolerated in a Constrained step.
pub(crate) const SIMON_SLACK: f64 = 5e-10;
/// Relative fall of the potential below which a step counts as standing
/// still.
const PROGRESS: f64 = 1e-15;

/// Gershgorin bound on the largest eigenvalue of the repulsion Hessian:
/// a pair at distance `r` contributes a block of norm at most
/// `e * strength * r^-(e+1)` to its row and to the diagonal.
fn repulsion_bound(points: &[Vec3], exponent: f64, strength: f64) -> f64 {
    let n = points.len();
    let mut row = vec![0.0; n];
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let k = exponent * strength * (points[i] - points[j]).norm().powf(-(exponent + 1.0));
            row[i] += k;
            row[j] += k;
        }
    }
    2.0 * row.iter().cloned().fold(0.0, f64::max)
}

/// What an accepted step did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Time step actually used.
    pub dt: f64,
    pub halvings: u32,
    /// Largest bead displacement.
    pub max_move: f64,
}

/// Upper bound on the squared angular frequency of the fastest mode in
/// Free mode (and on the stiffest descent rate in Constrained mode): the
/// repulsion bound plus `4 k` for the springs.
pub fn stiffness_bound(c: &KnotCurve, p: &SimParams) -> f64 {
    repulsion_bound(c.points(), p.repulsion_exponent, p.repulsion_strength) + 4.0 * p.spring_constant
}

fn max_norm(v: &[Vec3]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Advances `s` by one step. On error the state is left as it was.
///
/// Every attempt is checked for strands passing through each other over
/// the whole linear move, and in Constrained mode for a rise in the
/// repulsion potential or the Simon energy; a failed attempt halves `dt` and retries, up to 20
/// times. In Constrained mode `dt` is first shrunk to respect the
/// displacement cap. The next step starts from the last accepted `dt`,
/// adjusted by how the last two moves line up, and never exceeds `p.dt`.
pub fn step(s: &mut SimState, p: &SimParams) -> Result<StepReport, DynamicsError> {
    p.validate()?;
    if s.velocities.len() != s.curve.len() {
        return Err(DynamicsError::Param("velocity count differs from bead count".into()));
    }
    let rest = p.rest(&s.curve);
    s.refresh(p)?;
    let mut start = match s.dt_hint {
        Some(h) => h.min(p.dt),
        None if p.mode == Mode::Constrained => {
            p.dt.min(2.0 / repulsion_bound(s.curve.points(), p.repulsion_exponent, p.repulsion_strength))
        }
        None => p.dt,
    };
    let tangent = match p.mode {
        Mode::Constrained => {
            let cache = s.cache.as_ref().unwrap();
            let f = tangent_component(s.curve.points(), &cache.forces);
            let fmax = max_norm(&f);
            let cap = p.max_disp_fraction * cache.gap;
            if start * fmax > cap {
                start = cap / fmax;
            }
            f
        }
        Mode::Free => Vec::new(),
    };
    let mut reason = String::new();
    for halvings in 0..=MAX_HALVINGS {
        let dt = start / f64::powi(2.0, halvings as i32);
        let cache = s.cache.as_ref().unwrap();
        let attempt = match p.mode {
            Mode::Constrained => constrained(&s.curve, &tangent, cache, p, rest, dt),
            Mode::Free => free(&s.curve, &s.velocities, cache, p, rest, dt),
        };
        match attempt {
            Ok((points, velocities, next, max_move)) => {
                let moved: Vec<Vec3> = points.iter().zip(s.curve.points()).map(|(a, b)| a - b).collect();
                let factor = match p.mode {
                    Mode::Constrained => {
                        let old = s.cache.as_ref().unwrap().potential;
                        pace(&s.last_move, &moved, next.potential < old * (1.0 - PROGRESS))
                    }
                    Mode::Free => GROWTH,
                };
                s.dt_hint = Some((dt * factor).min(p.dt));
                s.last_move = if p.mode == Mode::Constrained { moved } else { Vec::new() };
                s.curve = KnotCurve::new(points)?;
                s.velocities = velocities;
                s.last_energy = next.simon;
                s.cache = Some(next);
                s.step_index += 1;
                return Ok(StepReport { dt, halvings, max_move });
            }
            Err(why) => reason = why,
        }
    }
    Err(DynamicsError::StepCollapse { step: s.step_index, halvings: MAX_HALVINGS, reason })
}

/// Step-size factor from two consecutive moves: back-and-forth motion
/// means the stiffest mode is oscillating, so `dt` is halved; moves that
/// keep their direction and lower the potential let it grow.
fn pace(prev: &[Vec3], cur: &[Vec3], progressed: bool) -> f64 {
    if prev.len() != cur.len() {
        return 1.0;
    }
    let dot: f64 = prev.iter().zip(cur).map(|(a, b)| a.dot(b)).sum();
    let n2: f64 = prev.iter().map(|a| a.norm_squared()).sum::<f64>() * cur.iter().map(|a| a.norm_squared()).sum::<f64>();
    if n2 == 0.0 {
        return 1.0;
    }
    let cos = dot / n2.sqrt();
    if cos < 0.0 {
        0.5
    } else if cos > 0.9 && progressed {
        GROWTH
    } else {
        1.0
    }
}

type Attempt = Result<(Vec<Vec3>, Vec<Vec3>, Cache, f64), String>;

fn finish(old: &[Vec3], new: Vec<Vec3>, velocities: Vec<Vec3>, cache: &Cache, p: &SimParams) -> Attempt {
    if swept_points(old, &new, Some(cache.gap)) {
        return Err("strand crossing".into());
    }
    let max_move = old.iter().zip(&new).map(|(a, b)| (b - a).norm()).fold(0.0, f64::max);
    let next = evaluate(&new, p, Some((cache.gap, cache.gap_exact, max_move))).map_err(|e| e.to_string())?;
    Ok((new, velocities, next, max_move))
}

fn constrained(c: &KnotCurve, force: &[Vec3], cache: &Cache, p: &SimParams, rest: f64, dt: f64) -> Attempt {
    let mut new: Vec<Vec3> = c.points().iter().zip(force).map(|(x, f)| x + f * dt).collect();
    project_edges(&mut new, rest).ok_or_else(|| "edge restoration failed".to_string())?;
    let n = new.len();
    let done = finish(c.points(), new, vec![Vec3::zeros(); n], cache, p)?;
    // a curve that starts off its constraints may have to gain energy to
    // reach them
    let settled = edge_error(c.points(), rest) < 10.0 * EDGE_TOLERANCE;
    if settled && done.2.potential > cache.potential * (1.0 + ENERGY_SLACK) {
        return Err("energy increase".into());
    }
    if settled && done.2.simon > cache.simon * (1.0 + SIMON_SLACK) {
        return Err("Simon energy increase".into());
    }
    Ok(done)
}

fn accelerations(rep: &[Vec3], points: &[Vec3], p: &SimParams, rest: f64) -> Vec<Vec3> {
    let mut a = rep.to_vec();
    if p.spring_constant > 0.0 {
        add_spring_forces(points, p.spring_constant, rest, &mut a);
    }
    a
}

fn free(c: &KnotCurve, v: &[Vec3], cache: &Cache, p: &SimParams, rest: f64, dt: f64) -> Attempt {
    let x = c.points();
    let a0 = accelerations(&cache.forces, x, p, rest);
    let g = p.viscous_damping;
    let half: Vec<Vec3> = v.iter().zip(&a0).map(|(vi, ai)| vi + (ai - vi * g) * (0.5 * dt)).collect();
    let cap = p.max_disp_fraction * cache.gap;
    if dt * max_norm(&half) > cap {
        return Err("displacement cap".into());
    }
    let new: Vec<Vec3> = x.iter().zip(&half).map(|(xi, hi)| xi + hi * dt).collect();
    let (new, _, next, max_move) = finish(x, new, Vec::new(), cache, p)?;
    let a1 = accelerations(&next.forces, &new, p, rest);
    let damp = 1.0 / (1.0 + 0.5 * dt * g);
    let vel: Vec<Vec3> = half.iter().zip(&a1).map(|(hi, ai)| (hi + ai * (0.5 * dt)) * damp).collect();
    Ok((new, vel, next, max_move))
}
