//! Planar twist-form layout for numerator closures `N(T)` and `N(T + S)`.
//!
//! Each tangle is drawn with its corner region unrolled into three lanes
//! (y = 0, 2, 4 in half-cell units): horizontal twists act on lanes 2 and 1,
//! vertical twists on lanes 1 and 0. The innermost term sits on the left and
//! the outermost on the right. The numerator closure is a return track at
//! y = 6; for a sum the two lower leads of `T` pass under `S` on bypass
//! tracks at y = -2 and y = -4. No crossings occur outside twist cells.

use std::collections::HashMap;

use crate::curve::Vec3;

/// One polyline between two junction keys; `z` holds a multiple of the
/// strand gap.
type Piece = Vec<[f64; 3]>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Twist {
    Horizontal,
    Vertical,
}

struct Layout {
    pieces: Vec<Piece>,
}

const LANE: [f64; 3] = [0.0, 2.0, 4.0];
const TOP: f64 = 6.0;
const ARC_STEPS: usize = 12;

impl Layout {
    fn line(&mut self, pts: &[(f64, f64)]) {
        self.pieces.push(pts.iter().map(|&(x, y)| [x, y, 0.0]).collect());
    }

    /// Half circle from `(cx, cy - r)` to `(cx, cy + r)` bulging to the
    /// given side (`-1` left, `+1` right).
    fn half_circle(&mut self, cx: f64, cy: f64, r: f64, side: f64) {
        let steps = ARC_STEPS * (r.ceil() as usize).max(1);
        let pts = (0..=steps)
            .map(|k| {
                let th = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / steps as f64;
                let (x, y) = (cx + side * r * th.cos(), cy + r * th.sin());
                // pin the end points to their exact junction keys
                if k == 0 {
                    [cx, cy - r, 0.0]
                } else if k == steps {
                    [cx, cy + r, 0.0]
                } else {
                    [x, y, 0.0]
                }
            })
            .collect();
        self.pieces.push(pts);
    }

    fn passive(&mut self, x0: f64, x1: f64, lanes: &[usize]) {
        for &l in lanes {
            self.line(&[(x0, LANE[l]), (x1, LANE[l])]);
        }
    }

    /// One crossing cell of width 1 starting at `x`. `sign` is the sign of
    /// the continued-fraction term.
    fn cell(&mut self, x: f64, twist: Twist, sign: i64) {
        let (lo, hi, idle) = match twist {
            Twist::Horizontal => (1, 2, 0),
            Twist::Vertical => (0, 1, 2),
        };
        let (ylo, yhi) = (LANE[lo], LANE[hi]);
        // Positive horizontal twists put the lower-left to upper-right
        // strand on top; in the unrolled lanes a vertical twist is turned a
        // quarter, so there the upper-left to lower-right strand is on top.
        let rising_over = match twist {
            Twist::Horizontal => sign > 0,
            Twist::Vertical => sign < 0,
        };
        let z_rising = if rising_over { 1.0 } else { -1.0 };
        self.pieces.push(diagonal((x, ylo), (x + 1.0, yhi), z_rising));
        self.pieces.push(diagonal((x, yhi), (x + 1.0, ylo), -z_rising));
        self.passive(x, x + 1.0, &[idle]);
    }

    /// Twist regions of one tangle, innermost term first, from `x0`.
    /// Returns the x of the right-hand leads.
    fn regions(&mut self, terms: &[i64], x0: f64) -> f64 {
        self.passive(x0, x0 + 1.0, &[0, 1, 2]);
        let mut x = x0 + 1.0;
        for (k, &a) in terms.iter().enumerate().rev() {
            let twist = if k % 2 == 0 { Twist::Horizontal } else { Twist::Vertical };
            for _ in 0..a.unsigned_abs() {
                self.cell(x, twist, a.signum());
                x += 1.0;
            }
        }
        self.passive(x, x + 1.0, &[0, 1, 2]);
        x + 1.0
    }
}

fn diagonal(from: (f64, f64), to: (f64, f64), z: f64) -> Piece {
    [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&t| {
            let zz = if t == 0.0 || t == 1.0 { 0.0 } else { z };
            [from.0 + t * (to.0 - from.0), from.1 + t * (to.1 - from.1), zz]
        })
        .collect()
}

/// Whether the innermost tangle of a twist form is `[0]` (odd length) as
/// opposed to `[∞]` (even length, including empty).
fn starts_from_zero(terms: &[i64]) -> bool {
    terms.len() % 2 == 1
}

/// Builds the closed diagram curve(s) of `N(T)` or `N(T + S)` in layout
/// units (x, y in half cells; z in strand gaps). Returns one point list per
/// component.
pub(crate) fn numerator_closure(t: &[i64], s: Option<&[i64]>) -> Vec<Vec<[f64; 3]>> {
    let mut l = Layout { pieces: Vec::new() };

    // innermost tangle of T, opening to the right at x = 0
    if starts_from_zero(t) {
        l.half_circle(0.0, 1.0, 1.0, -1.0);
        l.half_circle(0.0, 5.0, 1.0, -1.0);
    } else {
        l.half_circle(0.0, 3.0, 1.0, -1.0);
        l.half_circle(0.0, 3.0, 3.0, -1.0);
    }
    let xt = l.regions(t, 0.0);

    let x_end = match s {
        None => {
            l.half_circle(xt, 1.0, 1.0, 1.0);
            l.half_circle(xt, 5.0, 1.0, 1.0);
            xt
        }
        Some(s) => {
            let xs = xt + 8.0;
            if starts_from_zero(s) {
                l.line(&[(xt, 4.0), (xs, 4.0)]);
                l.half_circle(xs, 1.0, 1.0, -1.0);
            } else {
                l.line(&[(xt, 4.0), (xs - 3.0, 4.0), (xs - 2.0, 3.0), (xs - 2.0, 1.0), (xs - 1.0, 0.0), (xs, 0.0)]);
                l.half_circle(xs, 3.0, 1.0, -1.0);
            }
            let xe = l.regions(s, xs);
            // lower leads of T run under S to the lower leads of S
            l.line(&[(xt, 0.0), (xt + 1.0, -1.0), (xt + 1.0, -3.0), (xt + 2.0, -4.0), (xe, -4.0)]);
            l.line(&[(xt, 2.0), (xt + 2.0, 2.0), (xt + 3.0, 1.0), (xt + 3.0, -1.0), (xt + 4.0, -2.0), (xe, -2.0)]);
            l.half_circle(xe, -1.0, 1.0, 1.0);
            l.half_circle(xe, -1.0, 3.0, 1.0);
            l.half_circle(xe, 5.0, 1.0, 1.0);
            xe
        }
    };
    l.line(&[(0.0, TOP), (x_end, TOP)]);
    stitch(l.pieces)
}

fn key(p: &[f64; 3]) -> (i64, i64) {
    ((p[0] * 2.0).round() as i64, (p[1] * 2.0).round() as i64)
}

/// Joins pieces at shared end points into closed loops.
fn stitch(pieces: Vec<Piece>) -> Vec<Vec<[f64; 3]>> {
    let mut at: HashMap<(i64, i64), Vec<(usize, bool)>> = HashMap::new();
    for (i, p) in pieces.iter().enumerate() {
        at.entry(key(&p[0])).or_default().push((i, true));
        at.entry(key(p.last().expect("pieces are non-empty"))).or_default().push((i, false));
    }
    debug_assert!(at.values().all(|v| v.len() == 2), "every junction joins exactly two pieces");
    let mut used = vec![false; pieces.len()];
    let mut loops = Vec::new();
    for start in 0..pieces.len() {
        if used[start] {
            continue;
        }
        let mut out: Vec<[f64; 3]> = Vec::new();
        let (mut cur, mut forward) = (start, true);
        loop {
            used[cur] = true;
            let p = &pieces[cur];
            let seq: Vec<[f64; 3]> = if forward { p.clone() } else { p.iter().rev().copied().collect() };
            out.extend_from_slice(&seq[..seq.len() - 1]);
            let tail = key(seq.last().unwrap());
            let next = at[&tail].iter().find(|&&(i, s)| !(i == cur && s != forward)).copied();
            match next {
                Some((i, s)) if !used[i] => {
                    cur = i;
                    forward = s;
                }
                _ => break,
            }
        }
        loops.push(out);
    }
    loops
}

/// Maps layout units to space.
pub(crate) fn to_space(pts: &[[f64; 3]], cell_size: f64, strand_gap: f64) -> Vec<Vec3> {
    let u = cell_size / 2.0;
    pts.iter().map(|p| Vec3::new(p[0] * u, p[1] * u, p[2] * strand_gap)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_for_knots() {
        assert_eq!(numerator_closure(&[1, 1, 1], None).len(), 1);
        assert_eq!(numerator_closure(&[3], None).len(), 1);
        assert_eq!(numerator_closure(&[], None).len(), 1);
        assert_eq!(numerator_closure(&[1; 11], Some(&[-1; 10])).len(), 1);
    }

    #[test]
    fn links_have_two_components() {
        assert_eq!(numerator_closure(&[0], None).len(), 2);
        assert_eq!(numerator_closure(&[2], None).len(), 2);
        assert_eq!(numerator_closure(&[1, 1], None).len(), 2);
    }
}
