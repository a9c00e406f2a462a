//! Crossing census of a projected polygon.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::EmbedError;
use crate::curve::{segments_adjacent, KnotCurve, Vec3};

/// One transverse crossing of two segments in the projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Segment index and parameter of the strand nearer the viewer.
    pub over: (usize, f64),
    pub under: (usize, f64),
    /// `+1` or `-1` for the curve's bead order.
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// The projection direction actually used (unit length).
    pub direction: [f64; 3],
    pub crossings: Vec<Crossing>,
}

impl AuditReport {
    pub fn count(&self) -> usize {
        self.crossings.len()
    }

    pub fn writhe(&self) -> i64 {
        self.crossings.iter().map(|c| c.sign as i64).sum()
    }
}

const MAX_ATTEMPTS: usize = 100;

/// Projects along `direction` (toward the viewer) and lists every crossing
/// of non-adjacent segments. A projection with tangencies, vertices on
/// edges or touching strands is retried along a slightly tilted direction.
pub fn diagram_audit(curve: &KnotCurve, direction: Vec3) -> Result<AuditReport, EmbedError> {
    let n0 = direction.norm();
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(EmbedError::Param("projection direction must be non-zero and finite".into()));
    }
    let base = direction / n0;
    for attempt in 0..MAX_ATTEMPTS {
        let dir = if attempt == 0 { base } else { (base + tilt(attempt)).normalize() };
        if let Some(crossings) = census(curve.points(), &dir) {
            return Ok(AuditReport { direction: [dir.x, dir.y, dir.z], crossings });
        }
    }
    Err(EmbedError::Degenerate(format!("no generic projection near {base:?} after {MAX_ATTEMPTS} tries")))
}

/// Deterministic small offsets that grow with the attempt number.
fn tilt(k: usize) -> Vec3 {
    let t = k as f64;
    let v = Vec3::new((t * 1.618_033_988_7).sin(), (t * 2.414_213_562).cos(), (t * 0.577_215_664_9).sin());
    v * (1e-4 * t)
}

fn cross2(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

fn census(points: &[Vec3], dir: &Vec3) -> Option<Vec<Crossing>> {
    let n = points.len();
    let helper = if dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = dir.cross(&helper).normalize();
    let e2 = dir.cross(&e1);
    let flat: Vec<Vector2<f64>> = points.iter().map(|p| Vector2::new(p.dot(&e1), p.dot(&e2))).collect();
    let depth: Vec<f64> = points.iter().map(|p| p.dot(dir)).collect();
    let scale = flat.iter().fold(0.0f64, |m, p| m.max(p.norm())).max(1e-300);
    let eps = 1e-12 * scale * scale;

    // adjacent segments folding onto each other in projection
    for i in 0..n {
        let a = flat[(i + n - 1) % n] - flat[i];
        let b = flat[(i + 1) % n] - flat[i];
        if a.norm_squared() <= eps || b.norm_squared() <= eps {
            return None;
        }
        if cross2(a, b).abs() <= eps && a.dot(&b) > 0.0 {
            return None;
        }
    }

    let mut out = Vec::new();
    for i in 0..n {
        let (p0, p1) = (flat[i], flat[(i + 1) % n]);
        let r = p1 - p0;
        let (lox, hix) = (p0.x.min(p1.x), p0.x.max(p1.x));
        let (loy, hiy) = (p0.y.min(p1.y), p0.y.max(p1.y));
        for j in (i + 1)..n {
            if segments_adjacent(i, j, n) {
                continue;
            }
            let (q0, q1) = (flat[j], flat[(j + 1) % n]);
            if q0.x.max(q1.x) < lox || q0.x.min(q1.x) > hix || q0.y.max(q1.y) < loy || q0.y.min(q1.y) > hiy {
                continue;
            }
            let s = q1 - q0;
            let d1 = cross2(r, q0 - p0);
            let d2 = cross2(r, q1 - p0);
            let d3 = cross2(s, p0 - q0);
            let d4 = cross2(s, p1 - q0);
            if d1.abs() <= eps || d2.abs() <= eps || d3.abs() <= eps || d4.abs() <= eps {
                // an end point on the other segment's line; generic only if
                // the boxes are apart along that line
                if touches(p0, p1, q0, q1, eps) {
                    return None;
                }
                continue;
            }
            if (d1 > 0.0) == (d2 > 0.0) || (d3 > 0.0) == (d4 > 0.0) {
                continue;
            }
            let denom = cross2(r, s);
            let t = cross2(q0 - p0, s) / denom;
            let u = cross2(q0 - p0, r) / denom;
            let zi = depth[i] + t * (depth[(i + 1) % n] - depth[i]);
            let zj = depth[j] + u * (depth[(j + 1) % n] - depth[j]);
            if (zi - zj).abs() <= 1e-12 * scale {
                return None;
            }
            let di = points[(i + 1) % n] - points[i];
            let dj = points[(j + 1) % n] - points[j];
            let (over, under, d_over, d_under) =
                if zi > zj { ((i, t), (j, u), di, dj) } else { ((j, u), (i, t), dj, di) };
            let sign = if d_over.cross(&d_under).dot(dir) > 0.0 { 1 } else { -1 };
            out.push(Crossing { over, under, sign });
        }
    }
    Some(out)
}

/// Whether two nearly collinear or end-touching projected segments share a
/// point.
fn touches(p0: Vector2<f64>, p1: Vector2<f64>, q0: Vector2<f64>, q1: Vector2<f64>, eps: f64) -> bool {
    let on = |a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>| {
        cross2(b - a, c - a).abs() <= eps
            && c.x >= a.x.min(b.x) - eps.sqrt()
            && c.x <= a.x.max(b.x) + eps.sqrt()
            && c.y >= a.y.min(b.y) - eps.sqrt()
            && c.y <= a.y.max(b.y) + eps.sqrt()
    };
    on(p0, p1, q0) || on(p0, p1, q1) || on(q0, q1, p0) || on(q0, q1, p1)
}
