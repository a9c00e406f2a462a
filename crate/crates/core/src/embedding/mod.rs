//! Turning knot expressions into bead curves, plus parametric torus knots
//! and a projection audit.

mod audit;
mod diagram;

pub use audit::{diagram_audit, AuditReport, Crossing};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::curve::{resample_uniform, CurveError, KnotCurve, Vec3};
use crate::tangle::{CFTerms, KnotSpecExpr, TangleError, TangleExpr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error(transparent)]
    Tangle(#[from] TangleError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("unsupported diagram: {0}")]
    Unsupported(String),
    #[error("closure has {0} components, expected a knot")]
    Link(usize),
    #[error("{beads} beads cannot carry {crossings} crossings (need at least {min})")]
    BeadBudget { beads: usize, crossings: u64, min: u64 },
    #[error("{0}")]
    Resolution(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedParams {
    /// Bead count; `None` picks one from the crossing number.
    pub beads: Option<usize>,
    /// Height of over and under strands above and below the diagram plane.
    pub strand_gap: f64,
    /// Spacing of the diagram lanes.
    pub cell_size: f64,
    /// Tube radius over core radius for torus knots.
    pub tube_scale: f64,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self { beads: None, strand_gap: 0.25, cell_size: 1.0, tube_scale: 0.4 }
    }
}

impl EmbedParams {
    pub fn with_beads(beads: usize) -> Self {
        Self { beads: Some(beads), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if let Some(b) = self.beads {
            if b < 12 {
                return Err(EmbedError::Param(format!("beads must be at least 12, got {b}")));
            }
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(EmbedError::Param("cell_size must be positive".into()));
        }
        if !(self.strand_gap > 0.0 && self.strand_gap < self.cell_size / 2.0) {
            return Err(EmbedError::Param("strand_gap must lie in (0, cell_size / 2)".into()));
        }
        if !(self.tube_scale > 0.0 && self.tube_scale < 1.0) {
            return Err(EmbedError::Param("tube_scale must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Default bead count for a diagram with the given number of crossings.
pub fn default_beads(crossings: u64) -> usize {
    (8 * crossings as usize).max(100)
}

const MAX_REFINE: usize = 24;
const PHASES: usize = 16;

/// A closed diagram for the closure, before resampling.
struct Plan {
    points: Vec<Vec3>,
    crossings: u64,
}

fn twist_terms(t: &TangleExpr) -> Result<CFTerms, EmbedError> {
    t.as_twist_form()
        .ok_or_else(|| EmbedError::Unsupported(format!("{t} is not in twist form")))
}

fn plan(expr: &KnotSpecExpr, params: &EmbedParams) -> Result<Plan, EmbedError> {
    let (t, s) = match expr.expand()? {
        KnotSpecExpr::Numerator(t) => {
            let parts = t.summands();
            match parts.as_slice() {
                [a] => (twist_terms(a)?, None),
                [a, b] => (twist_terms(a)?, Some(twist_terms(b)?)),
                _ => {
                    return Err(EmbedError::Unsupported(format!(
                        "numerator closures of more than two summands ({t})"
                    )))
                }
            }
        }
        // D(T) is N of the quarter-turned tangle (0, -a1, ..., -an)
        KnotSpecExpr::Denominator(t) => {
            let terms = twist_terms(&t)?;
            let mut rot = vec![0];
            rot.extend(terms.as_slice().iter().map(|a| -a));
            (CFTerms::new(rot), None)
        }
        KnotSpecExpr::Family { .. } => unreachable!("expand removes families"),
    };
    let crossings = t.crossings() + s.as_ref().map_or(0, |s| s.crossings());
    let mut loops = diagram::numerator_closure(t.as_slice(), s.as_ref().map(|s| s.as_slice()));
    if loops.len() != 1 {
        return Err(EmbedError::Link(loops.len()));
    }
    let points = diagram::to_space(&loops.pop().unwrap(), params.cell_size, params.strand_gap);
    Ok(Plan { points, crossings })
}

/// Number of crossings of the diagram drawn for `expr`.
pub fn diagram_crossings(expr: &KnotSpecExpr) -> Result<u64, EmbedError> {
    Ok(plan(expr, &EmbedParams::default())?.crossings)
}

/// Draws the closure as a twist-form diagram in the plane, lifts over and
/// under strands by the strand gap, resamples to equal edges and scales to
/// unit length.
///
/// Supports `N(T)`, `N(T + S)` and `D(T)` with `T`, `S` in twist form, and
/// the named families. When `beads` is not given the count starts at
/// [`default_beads`] and grows until the sampled polygon keeps the
/// diagram's crossings.
pub fn embed_closure(expr: &KnotSpecExpr, params: &EmbedParams) -> Result<KnotCurve, EmbedError> {
    params.validate()?;
    let plan = plan(expr, params)?;
    let dense = KnotCurve::new(plan.points)?;
    let word = gauss_word(&dense)
        .filter(|w| w.len() as u64 == 2 * plan.crossings)
        .ok_or_else(|| EmbedError::Resolution("the drawn diagram does not project cleanly".into()))?;
    let min = 4 * plan.crossings;
    let mut beads = match params.beads {
        Some(b) if (b as u64) < min => {
            return Err(EmbedError::BeadBudget { beads: b, crossings: plan.crossings, min })
        }
        Some(b) => b,
        None => default_beads(plan.crossings),
    };
    for _ in 0..MAX_REFINE {
        if let Some(c) = best_sampling(&dense, beads, &word)? {
            return Ok(c.normalized_length());
        }
        if params.beads.is_some() {
            break;
        }
        beads += beads / 4;
    }
    Err(EmbedError::Resolution(format!(
        "{beads} beads do not resolve the {}-crossing diagram",
        plan.crossings
    )))
}

/// The dense polygon restarted at arc length `s` from bead 0.
fn restarted(dense: &KnotCurve, s: f64) -> Result<KnotCurve, CurveError> {
    let pts = dense.points();
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let len = (b - a).norm();
        if acc + len > s {
            let start = a + (b - a) * ((s - acc) / len);
            let mut out = vec![start];
            out.extend((1..=n).map(|k| pts[(i + k) % n]).filter(|p| *p != start));
            return KnotCurve::new(out);
        }
        acc += len;
    }
    Ok(dense.clone())
}

/// Equal-edge samplings of `dense` started at evenly spaced phases within
/// one edge; keeps the faithful one whose closest non-adjacent segments are
/// farthest apart.
fn best_sampling(dense: &KnotCurve, beads: usize, word: &[Letter]) -> Result<Option<KnotCurve>, EmbedError> {
    let h = dense.total_length() / beads as f64;
    let mut best: Option<(f64, KnotCurve)> = None;
    for k in 0..PHASES {
        let Ok(sampled) = resample_uniform(&restarted(dense, h * k as f64 / PHASES as f64)?, beads) else { continue };
        if !faithful(&sampled, word) {
            continue;
        }
        let gap = sampled.min_nonadjacent_distance();
        if best.as_ref().map_or(true, |(g, _)| gap > *g) {
            best = Some((gap, sampled));
        }
    }
    Ok(best.map(|(_, c)| c))
}

/// Over or under, crossing sign, and the crossing's label in order of first
/// visit.
type Letter = (bool, i8, usize);

/// The signed Gauss word of the z projection, read from bead 0.
fn gauss_word(c: &KnotCurve) -> Option<Vec<Letter>> {
    let audit = diagram_audit(c, Vec3::z()).ok()?;
    let pos = |(seg, t): (usize, f64)| seg as f64 + t;
    let mut events: Vec<(f64, bool, i8, usize)> = audit
        .crossings
        .iter()
        .enumerate()
        .flat_map(|(k, x)| [(pos(x.over), true, x.sign, k), (pos(x.under), false, x.sign, k)])
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(relabel(events.into_iter().map(|(_, o, s, k)| (o, s, k))))
}

fn relabel(letters: impl Iterator<Item = Letter>) -> Vec<Letter> {
    let mut seen = std::collections::HashMap::new();
    letters
        .map(|(o, s, k)| {
            let next = seen.len();
            (o, s, *seen.entry(k).or_insert(next))
        })
        .collect()
}

/// Embedded, and draws the same diagram as `word` up to where it is read
/// from.
fn faithful(c: &KnotCurve, word: &[Letter]) -> bool {
    if c.check_embedded().is_err() {
        return false;
    }
    let Some(w) = gauss_word(c) else { return false };
    w.len() == word.len()
        && (0..w.len().max(1)).any(|r| relabel(w.iter().cycle().skip(r).take(w.len()).copied()) == word)
}

/// The `(a, b)` torus knot on a torus of core radius `radius` and tube
/// radius `tube_scale * radius`: it winds `a` times around the tube and `b`
/// times around the core axis.
pub fn torus_knot_curve(a: i64, b: i64, params: &EmbedParams, radius: f64) -> Result<KnotCurve, EmbedError> {
    params.validate()?;
    if a == 0 || b == 0 || a.gcd(&b) != 1 {
        return Err(EmbedError::Param(format!("torus knot ({a}, {b}) needs non-zero coprime indices")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(EmbedError::Param("torus radius must be positive".into()));
    }
    let n = params.beads.unwrap_or(200);
    let r = params.tube_scale * radius;
    let pts: Vec<Vec3> = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            let (u, v) = (a as f64 * t, b as f64 * t);
            let rho = radius + r * u.cos();
            Vec3::new(rho * v.cos(), rho * v.sin(), r * u.sin())
        })
        .collect();
    let c = KnotCurve::new(pts)?;
    c.check_embedded()
        .map_err(|_| EmbedError::Resolution(format!("{n} beads are too few for the ({a}, {b}) torus knot")))?;
    Ok(c)
}

fn torus_indices(text: &str) -> Option<(i64, i64)> {
    let inner = text.trim().strip_prefix("T(")?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Curve for a knot specification: `T(a,b)` for a torus knot (200 beads
/// unless given) or any closure expression the tangle parser accepts.
/// Edges are equal and the total length is 1.
pub fn curve_from_spec(text: &str, params: &EmbedParams) -> Result<KnotCurve, EmbedError> {
    if let Some((a, b)) = torus_indices(text) {
        let c = torus_knot_curve(a, b, params, 1.0)?;
        return Ok(resample_uniform(&c, c.len())?.normalized_length());
    }
    embed_closure(&crate::tangle::parse_closure(text)?, params)
}
