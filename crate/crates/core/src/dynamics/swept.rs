//! Continuous collision test for a linear move between two bead
//! configurations.

use crate::curve::{min_nonadjacent_distance, segment_distance, segments_adjacent, KnotCurve, Vec3};

const MAX_DEPTH: u32 = 48;

/// True when some pair of non-adjacent segments touches at a time
/// `t` in `[0, 1]` while every bead moves on the straight line from
/// `before` to `after`.
///
/// Two segments can approach no faster than the sum of the largest
/// end-point displacements of each, so a time interval is cleared once the
/// distances at its ends add up to more than that bound times its length;
/// otherwise it is split. Intervals still unresolved after 48 splits are
/// reported as crossings.
pub fn swept_crossing_check(before: &KnotCurve, after: &KnotCurve) -> bool {
    swept_points(before.points(), after.points(), None)
}

/// As [`swept_crossing_check`]; `gap_before` may pass in a known minimum
/// non-adjacent distance of `before`.
pub(crate) fn swept_points(before: &[Vec3], after: &[Vec3], gap_before: Option<f64>) -> bool {
    assert_eq!(before.len(), after.len(), "swept check needs equal bead counts");
    let n = before.len();
    if n < 4 {
        return false;
    }
    let disp: Vec<f64> = before.iter().zip(after).map(|(a, b)| (b - a).norm()).collect();
    let seg_move: Vec<f64> = (0..n).map(|i| disp[i].max(disp[(i + 1) % n])).collect();
    let max_move = seg_move.iter().copied().fold(0.0, f64::max);
    if max_move == 0.0 {
        return false;
    }
    let gap = gap_before.unwrap_or_else(|| min_nonadjacent_distance(before));
    if 2.0 * max_move < gap {
        return false;
    }
    let mids: Vec<Vec3> = (0..n).map(|i| (before[i] + before[(i + 1) % n]) * 0.5).collect();
    let half: Vec<f64> = (0..n).map(|i| 0.5 * (before[(i + 1) % n] - before[i]).norm()).collect();
    for i in 0..n {
        for j in (i + 2)..n {
            if segments_adjacent(i, j, n) {
                continue;
            }
            let bound = seg_move[i] + seg_move[j];
            if (mids[i] - mids[j]).norm() - half[i] - half[j] > bound {
                continue;
            }
            let pair = Pair { before, after, i, j, bound };
            let (d0, d1) = (pair.distance(0.0), pair.distance(1.0));
            if pair.touches(0.0, 1.0, d0, d1, 0) {
                return true;
            }
        }
    }
    false
}

struct Pair<'a> {
    before: &'a [Vec3],
    after: &'a [Vec3],
    i: usize,
    j: usize,
    bound: f64,
}

impl Pair<'_> {
    fn at(&self, k: usize, t: f64) -> Vec3 {
        self.before[k] + (self.after[k] - self.before[k]) * t
    }

    fn distance(&self, t: f64) -> f64 {
        let n = self.before.len();
        segment_distance(
            &self.at(self.i, t),
            &self.at((self.i + 1) % n, t),
            &self.at(self.j, t),
            &self.at((self.j + 1) % n, t),
        )
    }

    fn touches(&self, t0: f64, t1: f64, d0: f64, d1: f64, depth: u32) -> bool {
        if d0 <= 0.0 || d1 <= 0.0 {
            return true;
        }
        if d0 + d1 > self.bound * (t1 - t0) {
            return false;
        }
        if depth >= MAX_DEPTH {
            return true;
        }
        let tm = 0.5 * (t0 + t1);
        let dm = self.distance(tm);
        self.touches(t0, tm, d0, dm, depth + 1) || self.touches(tm, t1, dm, d1, depth + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::circle_curve;

    #[test]
    fn rigid_moves_and_identity_are_clear() {
        let c = circle_curve(40, 1.0).unwrap();
        assert!(!swept_crossing_check(&c, &c));
        let moved = c.translated(Vec3::new(10.0, -3.0, 2.0));
        assert!(!swept_crossing_check(&c, &moved));
    }

    #[test]
    fn strand_pushed_through_is_caught() {
        // a square loop in the xy plane with a long bead hovering above the
        // middle of the opposite segment; moving it down through the plane
        // drags its two segments across segment 0
        let pts = vec![
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 2.0, 0.0),
            Vec3::new(0.0, -1.0, 0.5),
            Vec3::new(-1.0, 2.0, 0.0),
        ];
        let before = KnotCurve::embedded(pts.clone()).unwrap();
        let mut moved = pts;
        moved[3].z = -0.5;
        let after = KnotCurve::embedded(moved).unwrap();
        assert!(swept_crossing_check(&before, &after));
        // the same move stopping short of the plane is fine
        let mut short = before.points().to_vec();
        short[3].z = 0.1;
        assert!(!swept_crossing_check(&before, &KnotCurve::new(short).unwrap()));
    }
}
