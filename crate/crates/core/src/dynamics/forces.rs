//! Pair energies and forces.

use super::DynamicsError;
use crate::curve::{KnotCurve, Vec3};

/// Sums gathered in one sweep over bead pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairSums {
    pub simon: f64,
    pub potential: f64,
}

/// Inverse powers of the distance used by the pair loop.
trait Law: Copy {
    /// `r^-(e-1)` from `1/r` and `1/r^2`.
    fn potential(self, inv: f64, inv2: f64) -> f64;
    /// `r^-(e+1)`.
    fn force(self, inv: f64, inv2: f64) -> f64;
}

#[derive(Clone, Copy)]
struct Fifth;

impl Law for Fifth {
    #[inline(always)]
    fn potential(self, _: f64, inv2: f64) -> f64 {
        inv2 * inv2
    }
    #[inline(always)]
    fn force(self, _: f64, inv2: f64) -> f64 {
        inv2 * inv2 * inv2
    }
}

#[derive(Clone, Copy)]
struct Second;

impl Law for Second {
    #[inline(always)]
    fn potential(self, inv: f64, _: f64) -> f64 {
        inv
    }
    #[inline(always)]
    fn force(self, inv: f64, inv2: f64) -> f64 {
        inv2 * inv
    }
}

#[derive(Clone, Copy)]
struct Any(f64);

impl Law for Any {
    #[inline(always)]
    fn potential(self, inv: f64, _: f64) -> f64 {
        inv.powf(self.0 - 1.0)
    }
    #[inline(always)]
    fn force(self, inv: f64, _: f64) -> f64 {
        inv.powf(self.0 + 1.0)
    }
}

const LANES: usize = 8;

pub(crate) struct Soa {
    pub(crate) x: Vec<f64>,
    pub(crate) y: Vec<f64>,
    pub(crate) z: Vec<f64>,
}

/// Sweeps the non-adjacent pairs `(i, j)`, `j > i + 1`, in a fixed order
/// with four interleaved partial sums per row, so the result does not
/// depend on how the loop is vectorised.
#[inline(always)]
fn sweep<L: Law, const FORCES: bool>(p: &Soa, law: L, strength: f64, f: &mut Soa) -> (f64, f64, f64) {
    let n = p.x.len();
    let (mut simon, mut pot, mut min_r2) = (0.0, 0.0, f64::INFINITY);
    for i in 0..n {
        let (xi, yi, zi) = (p.x[i], p.y[i], p.z[i]);
        let start = i + 2;
        let end = if i == 0 { n - 1 } else { n };
        if start >= end {
            continue;
        }
        let mut s = [0.0; LANES];
        let mut u = [0.0; LANES];
        let mut m = [f64::INFINITY; LANES];
        let mut g = [[0.0; LANES]; 3];
        let full = start + (end - start) / LANES * LANES;
        let mut j = start;
        while j < full {
            let cx: &[f64; LANES] = p.x[j..j + LANES].try_into().unwrap();
            let cy: &[f64; LANES] = p.y[j..j + LANES].try_into().unwrap();
            let cz: &[f64; LANES] = p.z[j..j + LANES].try_into().unwrap();
            let dx: [f64; LANES] = std::array::from_fn(|l| xi - cx[l]);
            let dy: [f64; LANES] = std::array::from_fn(|l| yi - cy[l]);
            let dz: [f64; LANES] = std::array::from_fn(|l| zi - cz[l]);
            let r2: [f64; LANES] = std::array::from_fn(|l| dx[l] * dx[l] + dy[l] * dy[l] + dz[l] * dz[l]);
            let inv: [f64; LANES] = std::array::from_fn(|l| 1.0 / r2[l].sqrt());
            let inv2: [f64; LANES] = std::array::from_fn(|l| inv[l] * inv[l]);
            for l in 0..LANES {
                s[l] += inv[l];
                u[l] += law.potential(inv[l], inv2[l]);
                m[l] = m[l].min(r2[l]);
            }
            if FORCES {
                let c: [f64; LANES] = std::array::from_fn(|l| strength * law.force(inv[l], inv2[l]));
                let fx: &mut [f64; LANES] = (&mut f.x[j..j + LANES]).try_into().unwrap();
                for l in 0..LANES {
                    g[0][l] += dx[l] * c[l];
                    fx[l] -= dx[l] * c[l];
                }
                let fy: &mut [f64; LANES] = (&mut f.y[j..j + LANES]).try_into().unwrap();
                for l in 0..LANES {
                    g[1][l] += dy[l] * c[l];
                    fy[l] -= dy[l] * c[l];
                }
                let fz: &mut [f64; LANES] = (&mut f.z[j..j + LANES]).try_into().unwrap();
                for l in 0..LANES {
                    g[2][l] += dz[l] * c[l];
                    fz[l] -= dz[l] * c[l];
                }
            }
            j += LANES;
        }
        for (l, k) in (full..end).enumerate() {
            let (dx, dy, dz) = (xi - p.x[k], yi - p.y[k], zi - p.z[k]);
            let r2 = dx * dx + dy * dy + dz * dz;
            let inv = 1.0 / r2.sqrt();
            let inv2 = inv * inv;
            s[l] += inv;
            u[l] += law.potential(inv, inv2);
            m[l] = m[l].min(r2);
            if FORCES {
                let c = strength * law.force(inv, inv2);
                g[0][l] += dx * c;
                g[1][l] += dy * c;
                g[2][l] += dz * c;
                f.x[k] -= dx * c;
                f.y[k] -= dy * c;
                f.z[k] -= dz * c;
            }
        }
        let fold = |a: [f64; LANES]| ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
        simon += fold(s);
        pot += fold(u);
        min_r2 = m.iter().fold(min_r2, |a, &b| a.min(b));
        if FORCES {
            f.x[i] += fold(g[0]);
            f.y[i] += fold(g[1]);
            f.z[i] += fold(g[2]);
        }
    }
    (simon, pot, min_r2)
}

/// One pass over all unordered bead pairs. Accumulates the repulsion force
/// on non-adjacent pairs into `forces` (which must be zeroed) and returns
/// the Simon energy and the repulsion potential
/// `strength / ((e - 1) r^(e - 1))`.
pub(crate) fn pair_pass(
    points: &[Vec3],
    exponent: f64,
    strength: f64,
    include_adjacent: bool,
    forces: Option<&mut [Vec3]>,
) -> Result<PairSums, DynamicsError> {
    let n = points.len();
    let soa = Soa {
        x: points.iter().map(|p| p.x).collect(),
        y: points.iter().map(|p| p.y).collect(),
        z: points.iter().map(|p| p.z).collect(),
    };
    let mut acc = Soa { x: vec![0.0; n], y: vec![0.0; n], z: vec![0.0; n] };
    let want = forces.is_some();
    let (mut simon, pot, min_r2) = match (exponent, want) {
        #[cfg(target_arch = "x86_64")]
        (e, _) if (e == 5.0 || e == 2.0) && std::arch::is_x86_feature_detected!("avx512f") => {
            // SAFETY: the CPU feature was just detected
            unsafe {
                match (e == 5.0, want) {
                    (true, true) => super::simd::sweep::<true, true>(&soa, strength, &mut acc),
                    (true, false) => super::simd::sweep::<true, false>(&soa, strength, &mut acc),
                    (false, true) => super::simd::sweep::<false, true>(&soa, strength, &mut acc),
                    (false, false) => super::simd::sweep::<false, false>(&soa, strength, &mut acc),
                }
            }
        }
        (e, true) if e == 5.0 => sweep::<_, true>(&soa, Fifth, strength, &mut acc),
        (e, false) if e == 5.0 => sweep::<_, false>(&soa, Fifth, strength, &mut acc),
        (e, true) if e == 2.0 => sweep::<_, true>(&soa, Second, strength, &mut acc),
        (e, false) if e == 2.0 => sweep::<_, false>(&soa, Second, strength, &mut acc),
        (_, true) => sweep::<_, true>(&soa, Any(exponent), strength, &mut acc),
        (_, false) => sweep::<_, false>(&soa, Any(exponent), strength, &mut acc),
    };
    let mut adjacent = 0.0;
    for i in 0..n {
        let r2 = (points[(i + 1) % n] - points[i]).norm_squared();
        if r2 == 0.0 {
            return Err(DynamicsError::Coincident(i, (i + 1) % n));
        }
        adjacent += 1.0 / r2.sqrt();
    }
    if min_r2 == 0.0 {
        return Err(coincident(points));
    }
    if include_adjacent {
        simon += adjacent;
    }
    if let Some(f) = forces {
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += Vec3::new(acc.x[i], acc.y[i], acc.z[i]);
        }
    }
    Ok(PairSums { simon, potential: pot * strength / (exponent - 1.0) })
}

fn coincident(points: &[Vec3]) -> DynamicsError {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] == points[j] {
                return DynamicsError::Coincident(i, j);
            }
        }
    }
    unreachable!("a zero distance implies two equal beads")
}

/// Sum of `1 / |p - q|` over unordered pairs of distinct beads, with or
/// without cyclic neighbours.
pub fn simon_energy(c: &KnotCurve, include_adjacent: bool) -> Result<f64, DynamicsError> {
    Ok(pair_pass(c.points(), 2.0, 1.0, include_adjacent, None)?.simon)
}

/// Repulsion `strength * r^(-exponent)` along the separation of every
/// non-adjacent bead pair.
pub fn repulsion_forces(c: &KnotCurve, exponent: f64, strength: f64) -> Result<Vec<Vec3>, DynamicsError> {
    let mut f = vec![Vec3::zeros(); c.len()];
    pair_pass(c.points(), exponent, strength, false, Some(&mut f))?;
    Ok(f)
}

/// Potential whose negative gradient is [`repulsion_forces`].
pub fn repulsion_potential(c: &KnotCurve, exponent: f64, strength: f64) -> Result<f64, DynamicsError> {
    Ok(pair_pass(c.points(), exponent, strength, false, None)?.potential)
}

/// Hooke forces `k (|e| - rest)` on every edge.
pub fn spring_forces(c: &KnotCurve, k: f64, rest: f64) -> Vec<Vec3> {
    let mut f = vec![Vec3::zeros(); c.len()];
    add_spring_forces(c.points(), k, rest, &mut f);
    f
}

pub(crate) fn add_spring_forces(points: &[Vec3], k: f64, rest: f64, f: &mut [Vec3]) {
    let n = points.len();
    for i in 0..n {
        let j = (i + 1) % n;
        let e = points[j] - points[i];
        let len = e.norm();
        let fv = e * (k * (len - rest) / len);
        f[i] += fv;
        f[j] -= fv;
    }
}

/// `sum k (|e| - rest)^2 / 2`.
pub fn spring_potential(c: &KnotCurve, k: f64, rest: f64) -> f64 {
    c.edge_lengths().iter().map(|l| 0.5 * k * (l - rest) * (l - rest)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::circle_curve;

    #[test]
    fn triangle_and_square() {
        let tri = KnotCurve::new(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
        ])
        .unwrap();
        assert!((simon_energy(&tri, true).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(simon_energy(&tri, false).unwrap(), 0.0);
        let sq = circle_curve(4, 1.0).unwrap();
        assert!((simon_energy(&sq, true).unwrap() - (2.0 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn square_diagonal_repulsion() {
        let sq = circle_curve(4, 1.0).unwrap();
        let f = repulsion_forces(&sq, 5.0, 1.0).unwrap();
        for (p, fi) in sq.points().iter().zip(&f) {
            assert!((fi.norm() - 1.0 / 32.0).abs() < 1e-15);
            assert!((fi.normalize() - p.normalize()).norm() < 1e-12);
        }
    }

    #[test]
    fn springs_at_rest_and_stretched() {
        let sq = circle_curve(4, 1.0).unwrap();
        let side = 2f64.sqrt();
        assert!(spring_forces(&sq, 3.0, side).iter().all(|f| f.norm() < 1e-12));
        // trapezoid with one edge at 2 L0 and the others at L0
        let h = 0.75f64.sqrt();
        let t = KnotCurve::new(vec![
            Vec3::zeros(),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(1.5, h, 0.0),
            Vec3::new(0.5, h, 0.0),
        ])
        .unwrap();
        let f = spring_forces(&t, 3.0, 1.0);
        assert!((f[0] - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((f[1] - Vec3::new(-3.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(f.iter().sum::<Vec3>().norm() < 1e-12);
    }

    #[test]
    fn coincident_beads_error() {
        let c = KnotCurve::new(vec![Vec3::zeros(), Vec3::x(), Vec3::zeros(), Vec3::y()]).unwrap();
        assert!(matches!(simon_energy(&c, true), Err(DynamicsError::Coincident(0, 2))));
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn vector_sweep_matches_portable() {
        use rand::{Rng, SeedableRng};
        if !std::arch::is_x86_feature_detected!("avx512f") {
            return;
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        // odd length so the masked tail is exercised
        let n = 37;
        let p = Soa {
            x: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            y: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            z: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let zero = || Soa { x: vec![0.0; n], y: vec![0.0; n], z: vec![0.0; n] };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
        let (mut fa, mut fb, mut fc, mut fd) = (zero(), zero(), zero(), zero());
        let a = unsafe { super::super::simd::sweep::<true, true>(&p, 0.7, &mut fa) };
        let b = sweep::<_, true>(&p, Fifth, 0.7, &mut fb);
        let c = unsafe { super::super::simd::sweep::<false, true>(&p, 0.7, &mut fc) };
        let d = sweep::<_, true>(&p, Second, 0.7, &mut fd);
        for ((x, y), (u, v)) in [(a, b), (c, d)].into_iter().zip([(&fa, &fb), (&fc, &fd)]) {
            assert!(close(x.0, y.0) && close(x.1, y.1) && close(x.2, y.2), "{x:?} vs {y:?}");
            let scale = v.x.iter().chain(&v.y).chain(&v.z).fold(0.0f64, |m, g| m.max(g.abs()));
            for (g, h) in u.x.iter().chain(&u.y).chain(&u.z).zip(v.x.iter().chain(&v.y).chain(&v.z)) {
                assert!((g - h).abs() <= 1e-12 * scale, "{g} vs {h}");
            }
        }
    }
}
