//! Seeded perturbations and the round-circle test.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::swept::swept_points;
use super::DynamicsError;
use crate::curve::{KnotCurve, Vec3};

const PERTURB_ATTEMPTS: usize = 100;

fn in_unit_ball(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        if v.norm_squared() <= 1.0 {
            return v;
        }
    }
}

/// Moves each bead by a displacement drawn uniformly from the ball of
/// radius `magnitude`. Attempt `k` draws from stream `k` of the seeded
/// generator; the first attempt that stays embedded and does not pass a
/// strand through another wins.
pub fn perturb(c: &KnotCurve, magnitude: f64, seed: u64) -> Result<KnotCurve, DynamicsError> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(DynamicsError::Param("perturbation magnitude must be >= 0".into()));
    }
    if magnitude == 0.0 {
        return Ok(c.clone());
    }
    for attempt in 0..PERTURB_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let pts: Vec<Vec3> = c.points().iter().map(|p| p + in_unit_ball(&mut rng) * magnitude).collect();
        let Ok(next) = KnotCurve::embedded(pts) else { continue };
        if !swept_points(c.points(), next.points(), None) {
            return Ok(next);
        }
    }
    Err(DynamicsError::PerturbationFailed(PERTURB_ATTEMPTS))
}

/// True when the beads lie within `tol * R` of their least-squares plane
/// and their distances to the centroid have standard deviation at most
/// `tol * R`, with `R` the mean such distance.
pub fn is_round_circle(c: &KnotCurve, tol: f64) -> bool {
    let centre = c.centroid();
    let rel: Vec<Vec3> = c.points().iter().map(|p| p - centre).collect();
    let n = rel.len() as f64;
    let cov: Matrix3<f64> = rel.iter().map(|r| r * r.transpose()).sum::<Matrix3<f64>>() / n;
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(k).into_owned();
    let radii: Vec<f64> = rel.iter().map(|r| r.norm()).collect();
    let mean = radii.iter().sum::<f64>() / n;
    let sd = (radii.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt();
    let off_plane = rel.iter().map(|r| r.dot(&normal).abs()).fold(0.0, f64::max);
    off_plane <= tol * mean && sd <= tol * mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::circle_curve;

    #[test]
    fn perturb_basics() {
        let c = circle_curve(60, 1.0).unwrap();
        assert_eq!(perturb(&c, 0.0, 3).unwrap(), c);
        let a = perturb(&c, 0.01, 7).unwrap();
        let b = perturb(&c, 0.01, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb(&c, 0.01, 8).unwrap());
        for (p, q) in c.points().iter().zip(a.points()) {
            assert!((p - q).norm() <= 0.01);
        }
    }

    #[test]
    fn round_circle_test() {
        let c = circle_curve(100, 1.0).unwrap();
        assert!(is_round_circle(&c, 0.05));
        assert!(is_round_circle(&perturb(&c, 0.001, 1).unwrap(), 0.05));
        let tilted: Vec<Vec3> = c.points().iter().map(|p| Vec3::new(p.x, p.y, p.x)).collect();
        // an ellipse in a tilted plane is flat but not round
        assert!(!is_round_circle(&KnotCurve::new(tilted).unwrap(), 0.05));
    }
}
