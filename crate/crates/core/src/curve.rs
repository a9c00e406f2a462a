//! Closed polygonal curves in 3-space and the geometric queries the rest of
//! the crate leans on.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurveError {
    #[error("a knot curve needs at least 3 beads, got {0}")]
    TooFewBeads(usize),
    #[error("beads {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error("segments {0} and {1} touch; the polygon is not embedded")]
    NotEmbedded(usize, usize),
    #[error("non-finite coordinate at bead {0}")]
    NonFinite(usize),
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("degenerate curve: {0}")]
    Degenerate(String),
}

/// A cyclic sequence of beads; bead `i` is joined to bead `i + 1` and the
/// last bead to the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct KnotCurve {
    points: Vec<Vec3>,
}

impl KnotCurve {
    /// Checks size, finiteness and that consecutive beads differ.
    pub fn new(points: Vec<Vec3>) -> Result<Self, CurveError> {
        let n = points.len();
        if n < 3 {
            return Err(CurveError::TooFewBeads(n));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(CurveError::NonFinite(i));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if points[i] == points[j] {
                return Err(CurveError::CoincidentPoints(i, j));
            }
        }
        Ok(Self { points })
    }

    /// Like [`KnotCurve::new`], and also requires an embedded polygon.
    pub fn embedded(points: Vec<Vec3>) -> Result<Self, CurveError> {
        let c = Self::new(points)?;
        c.check_embedded()?;
        Ok(c)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment(&self, i: usize) -> (Vec3, Vec3) {
        let n = self.points.len();
        (self.points[i], self.points[(i + 1) % n])
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|i| {
            let (a, b) = self.segment(i);
            (b - a).norm()
        }).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    pub fn centroid(&self) -> Vec3 {
        self.points.iter().sum::<Vec3>() / self.points.len() as f64
    }

    /// Uniform scaling about the centroid.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.centroid();
        Self { points: self.points.iter().map(|p| c + (p - c) * factor).collect() }
    }

    pub fn translated(&self, by: Vec3) -> Self {
        Self { points: self.points.iter().map(|p| p + by).collect() }
    }

    /// Rescales about the centroid to total length 1.
    pub fn normalized_length(&self) -> Self {
        self.scaled(1.0 / self.total_length())
    }

    /// Smallest distance between two segments that share no bead.
    pub fn min_nonadjacent_distance(&self) -> f64 {
        min_nonadjacent_distance(&self.points)
    }

    pub fn check_embedded(&self) -> Result<(), CurveError> {
        let n = self.points.len();
        for i in 0..n {
            let a = self.points[(i + n - 1) % n];
            let b = self.points[i];
            let c = self.points[(i + 1) % n];
            let (u, v) = (b - a, c - b);
            if u.cross(&v).norm() <= 1e-15 * u.norm() * v.norm() && u.dot(&v) < 0.0 {
                return Err(CurveError::NotEmbedded((i + n - 1) % n, i));
            }
        }
        match closest_nonadjacent_pair(&self.points) {
            Some((d, i, j)) if d <= 0.0 => Err(CurveError::NotEmbedded(i, j)),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<[f64; 3]>> for KnotCurve {
    type Error = CurveError;

    fn try_from(v: Vec<[f64; 3]>) -> Result<Self, Self::Error> {
        KnotCurve::new(v.into_iter().map(Vec3::from).collect())
    }
}

impl From<KnotCurve> for Vec<[f64; 3]> {
    fn from(c: KnotCurve) -> Self {
        c.points.iter().map(|p| [p.x, p.y, p.z]).collect()
    }
}

/// Whether segments `i` and `j` of an `n`-gon share a bead.
#[inline]
pub fn segments_adjacent(i: usize, j: usize, n: usize) -> bool {
    let d = if i > j { i - j } else { j - i };
    d <= 1 || d == n - 1
}

/// Closest distance between segments `[p0, p1]` and `[q0, q1]`.
pub fn segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let (s, t) = closest_params(p0, p1, q0, q1);
    let a = p0 + (p1 - p0) * s;
    let b = q0 + (q1 - q0) * t;
    (a - b).norm()
}

/// Parameters `(s, t)` in `[0, 1]²` of the closest points on two segments.
pub fn closest_params(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> (f64, f64) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-300;
    if a <= eps && e <= eps {
        return (0.0, 0.0);
    }
    if a <= eps {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(&r);
    if e <= eps {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// `(distance, i, j)` for the closest pair of non-adjacent segments, or
/// `None` when every pair is adjacent (triangles).
pub fn closest_nonadjacent_pair(points: &[Vec3]) -> Option<(f64, usize, usize)> {
    let n = points.len();
    let mids: Vec<Vec3> = (0..n).map(|i| (points[i] + points[(i + 1) % n]) * 0.5).collect();
    let halves: Vec<f64> = (0..n).map(|i| 0.5 * (points[(i + 1) % n] - points[i]).norm()).collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in (i + 2)..n {
            if segments_adjacent(i, j, n) {
                continue;
            }
            if let Some((d, _, _)) = best {
                let reach = d + halves[i] + halves[j];
                if (mids[i] - mids[j]).norm_squared() >= reach * reach {
                    continue;
                }
            }
            let d = segment_distance(&points[i], &points[(i + 1) % n], &points[j], &points[(j + 1) % n]);
            if best.is_none_or(|(b, _, _)| d < b) {
                best = Some((d, i, j));
            }
        }
    }
    best
}

pub fn min_nonadjacent_distance(points: &[Vec3]) -> f64 {
    closest_nonadjacent_pair(points).map_or(f64::INFINITY, |(d, _, _)| d)
}

/// Regular planar `n`-gon inscribed in a circle of radius `radius`.
pub fn circle_curve(n: usize, radius: f64) -> Result<KnotCurve, CurveError> {
    if n < 3 {
        return Err(CurveError::Range(format!("circle needs n >= 3, got {n}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CurveError::Range(format!("circle radius must be positive, got {radius}")));
    }
    let pts = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            Vec3::new(radius * t.cos(), radius * t.sin(), 0.0)
        })
        .collect();
    KnotCurve::new(pts)
}

struct Polyline<'a> {
    pts: &'a [Vec3],
    cum: Vec<f64>,
    total: f64,
}

impl<'a> Polyline<'a> {
    fn new(pts: &'a [Vec3]) -> Self {
        let n = pts.len();
        let mut cum = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for i in 0..n {
            acc += (pts[(i + 1) % n] - pts[i]).norm();
            cum.push(acc);
        }
        Self { pts, cum, total: acc }
    }

    /// Walks `count` chords of length `c` starting at bead 0. Returns the
    /// points and the arc position (unwrapped) of the final point.
    fn march(&self, c: f64, count: usize, keep: bool) -> (Vec<Vec3>, f64) {
        let n = self.pts.len();
        let mut out = Vec::new();
        let mut cur = self.pts[0];
        if keep {
            out.push(cur);
        }
        let (mut seg, mut t, mut lap) = (0usize, 0.0f64, 0usize);
        for _ in 0..count {
            loop {
                let a = self.pts[seg];
                let b = self.pts[(seg + 1) % n];
                let d = b - a;
                let w = a - cur;
                let qa = d.norm_squared();
                let qb = 2.0 * w.dot(&d);
                let qc = w.norm_squared() - c * c;
                let disc = qb * qb - 4.0 * qa * qc;
                let root = if qa > 0.0 && disc >= 0.0 {
                    let sq = disc.sqrt();
                    // numerically stable larger root
                    let r = if qb >= 0.0 { (2.0 * qc) / (-qb - sq) } else { (-qb + sq) / (2.0 * qa) };
                    if r.is_finite() { Some(r) } else { None }
                } else {
                    None
                };
                match root {
                    Some(r) if r >= t && r <= 1.0 => {
                        t = r;
                        cur = a + d * r;
                        break;
                    }
                    _ => {
                        seg += 1;
                        t = 0.0;
                        if seg == n {
                            seg = 0;
                            lap += 1;
                            if lap > count + 1 {
                                return (out, f64::INFINITY);
                            }
                        }
                    }
                }
            }
            if keep {
                out.push(cur);
            }
        }
        let len = (self.cum[seg + 1] - self.cum[seg]).max(0.0);
        (out, lap as f64 * self.total + self.cum[seg] + t * len)
    }
}

/// Resamples to `n` beads with all edges of equal length, starting from
/// bead 0, then rescales about the centroid so the total length is kept.
/// A closing chord that misses the common length is fixed by projecting
/// all edges onto it.
pub fn resample_uniform(curve: &KnotCurve, n: usize) -> Result<KnotCurve, CurveError> {
    if n < 3 {
        return Err(CurveError::Range(format!("resampling needs n >= 3, got {n}")));
    }
    let poly = Polyline::new(curve.points());
    let total = poly.total;
    if !(total > 0.0) {
        return Err(CurveError::Degenerate("zero total length".into()));
    }
    // chord <= arc, so n chords of length total/n reach at least the full length
    let (mut lo, mut hi) = (0.0, total / n as f64 * (1.0 + 1e-9));
    if poly.march(hi, n, false).1 < total {
        return Err(CurveError::Degenerate("chord marching failed to close".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if poly.march(mid, n, false).1 < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut pts, _) = poly.march(hi, n - 1, true);
    if pts.len() != n {
        return Err(CurveError::Degenerate("chord marching lost beads".into()));
    }
    // the march can jump across a sharp corner, leaving a short closing chord
    let closing = (pts[n - 1] - pts[0]).norm();
    if (closing / hi - 1.0).abs() > 1e-9 && crate::dynamics::project_edges(&mut pts, hi).is_none() {
        return Err(CurveError::Degenerate("could not equalise the closing edge".into()));
    }
    let marched = KnotCurve::new(std::mem::take(&mut pts))?;
    let scale = total / marched.total_length();
    Ok(marched.scaled(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn segment_distance_cases() {
        let o = Vec3::zeros();
        let x = Vec3::x();
        // parallel, offset
        assert_relative_eq!(segment_distance(&o, &x, &Vec3::new(0.0, 1.0, 0.0), &Vec3::new(1.0, 1.0, 0.0)), 1.0);
        // skew crossing over the middle
        let d = segment_distance(&o, &x, &Vec3::new(0.5, -1.0, 0.3), &Vec3::new(0.5, 1.0, 0.3));
        assert_relative_eq!(d, 0.3, epsilon = 1e-15);
        // endpoint to endpoint
        let d = segment_distance(&o, &x, &Vec3::new(2.0, 0.0, 0.0), &Vec3::new(3.0, 0.0, 0.0));
        assert_relative_eq!(d, 1.0);
        // intersecting
        assert_eq!(segment_distance(&o, &x, &Vec3::new(0.5, -1.0, 0.0), &Vec3::new(0.5, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(matches!(KnotCurve::new(vec![Vec3::zeros(), Vec3::x()]), Err(CurveError::TooFewBeads(2))));
        assert!(matches!(
            KnotCurve::new(vec![Vec3::zeros(), Vec3::x(), Vec3::x()]),
            Err(CurveError::CoincidentPoints(1, 2))
        ));
        // bow-tie: segments 0 and 2 cross
        let bowtie = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        assert!(matches!(KnotCurve::embedded(bowtie), Err(CurveError::NotEmbedded(_, _))));
        // fold-back at a bead
        let fold = vec![Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0)];
        assert!(KnotCurve::embedded(fold).is_err());
    }

    #[test]
    fn circle_is_embedded_and_regular() {
        let c = circle_curve(12, 2.0).unwrap();
        c.check_embedded().unwrap();
        let e = c.edge_lengths();
        assert!(e.iter().all(|l| (l - e[0]).abs() < 1e-12));
        assert!(circle_curve(2, 1.0).is_err());
        assert!(circle_curve(5, 0.0).is_err());
    }

    #[test]
    fn resample_circle_to_regular_polygon() {
        let c = circle_curve(100, 1.0).unwrap();
        let r = resample_uniform(&c, 50).unwrap();
        assert_eq!(r.len(), 50);
        let e = r.edge_lengths();
        let mean = e.iter().sum::<f64>() / 50.0;
        assert!(e.iter().all(|l| ((l - mean) / mean).abs() < 1e-9));
        assert_relative_eq!(r.total_length(), c.total_length(), max_relative = 1e-12);
        let radii: Vec<f64> = r.points().iter().map(|p| (p - r.centroid()).norm()).collect();
        assert!(radii.iter().all(|x| (x - radii[0]).abs() < 1e-9));
    }

    #[test]
    fn resample_equalises_edges_around_sharp_corners() {
        // a plus-shaped outline sampled densely along its straight sides
        let corners = [
            (1.0, 0.0), (3.0, 0.0), (3.0, 1.0), (4.0, 1.0), (4.0, 3.0), (3.0, 3.0),
            (3.0, 4.0), (1.0, 4.0), (1.0, 3.0), (0.0, 3.0), (0.0, 1.0), (1.0, 1.0),
        ];
        let mut pts = Vec::new();
        for k in 0..corners.len() {
            let (a, b) = (corners[k], corners[(k + 1) % corners.len()]);
            for s in 0..10 {
                let t = s as f64 / 10.0;
                pts.push(Vec3::new(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t, 0.0));
            }
        }
        let c = KnotCurve::new(pts).unwrap();
        for n in [13, 17, 23, 31, 40] {
            let r = resample_uniform(&c, n).unwrap();
            let e = r.edge_lengths();
            assert!(e.iter().all(|l| (l / e[0] - 1.0).abs() < 1e-9), "{n}: {e:?}");
        }
    }

    #[test]
    fn resample_is_idempotent() {
        let pts: Vec<Vec3> = (0..37)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 37.0;
                Vec3::new(t.cos() * (1.0 + 0.3 * (3.0 * t).cos()), t.sin(), 0.2 * (2.0 * t).sin())
            })
            .collect();
        let c = KnotCurve::new(pts).unwrap();
        let once = resample_uniform(&c, 64).unwrap();
        let twice = resample_uniform(&once, 64).unwrap();
        for (a, b) in once.points().iter().zip(twice.points()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn serde_round_trip_keeps_bits() {
        let c = circle_curve(7, 0.3).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: KnotCurve = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
}
