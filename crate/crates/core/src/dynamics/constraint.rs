//! Restoring equal edge lengths after an unconstrained move.

use crate::curve::Vec3;

/// Factorisation of a symmetric cyclic tridiagonal matrix with diagonal
/// `diag` and `off[i]` at positions `(i, i+1)` and `(i+1, i)`, indices mod
/// n, n >= 3. The corner entries are handled by Sherman-Morrison.
pub(crate) struct Cyclic {
    /// `off[i-1] * pivot[i]`, the forward elimination factors.
    a: Vec<f64>,
    c: Vec<f64>,
    /// Reciprocal pivots.
    pivot: Vec<f64>,
    z: Vec<f64>,
    corner: f64,
    gamma: f64,
    denom: f64,
}

impl Cyclic {
    pub(crate) fn new(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        let corner = off[n - 1];
        let gamma = -diag[0];
        let mut a = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        pivot[0] = 1.0 / (diag[0] - gamma);
        c[0] = off[0] * pivot[0];
        for i in 1..n {
            let b = if i == n - 1 { diag[i] - corner * corner / gamma } else { diag[i] };
            pivot[i] = 1.0 / (-off[i - 1]).mul_add(c[i - 1], b);
            a[i] = off[i - 1] * pivot[i];
            c[i] = off[i] * pivot[i];
        }
        c[n - 1] = 0.0;
        let mut f = Self { a, c, pivot, z: Vec::new(), corner, gamma, denom: 1.0 };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = corner;
        f.banded(&mut u);
        f.denom = 1.0 + u[0] + corner * u[n - 1] / gamma;
        f.z = u;
        f
    }

    /// Solves the matrix without its corners in place.
    fn banded(&self, d: &mut [f64]) {
        let n = d.len();
        d[0] *= self.pivot[0];
        for i in 1..n {
            d[i] = (-self.a[i]).mul_add(d[i - 1], d[i] * self.pivot[i]);
        }
        for i in (0..n - 1).rev() {
            d[i] = (-self.c[i]).mul_add(d[i + 1], d[i]);
        }
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = rhs.to_vec();
        self.banded(&mut x);
        let fact = (x[0] + self.corner * x[n - 1] / self.gamma) / self.denom;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi = (-fact).mul_add(*zi, *xi);
        }
        x
    }
}

#[cfg(test)]
fn solve_cyclic(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    Cyclic::new(diag, off).solve(rhs)
}

pub(crate) const EDGE_TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200;

fn edges_into(points: &[Vec3], edges: &mut Vec<Vec3>) {
    edges.clear();
    edges.extend(points.windows(2).map(|w| w[1] - w[0]));
    edges.push(points[0] - points[points.len() - 1]);
}

/// The Gram matrix `J J^T` of the edge constraints `|e_i|^2`.
fn gram(edges: &[Vec3], diag: &mut Vec<f64>, off: &mut Vec<f64>) {
    let n = edges.len();
    diag.clear();
    diag.extend(edges.iter().map(|e| 8.0 * e.norm_squared()));
    off.clear();
    off.extend(edges.windows(2).map(|w| -4.0 * w[0].dot(&w[1])));
    off.push(-4.0 * edges[n - 1].dot(&edges[0]));
}

/// Subtracts `J^T mu` from `v`.
fn remove_normal(v: &mut [Vec3], edges: &[Vec3], mu: &[f64]) {
    let n = v.len();
    let mut prev = edges[n - 1] * (2.0 * mu[n - 1]);
    for j in 0..n {
        let cur = edges[j] * (2.0 * mu[j]);
        v[j] -= prev - cur;
        prev = cur;
    }
}

/// Largest relative deviation of an edge length from `rest`.
pub(crate) fn edge_error(points: &[Vec3], rest: f64) -> f64 {
    let mut edges = Vec::with_capacity(points.len());
    edges_into(points, &mut edges);
    edges.iter().map(|e| (e.norm() / rest - 1.0).abs()).fold(0.0, f64::max)
}

/// Removes from `forces` the part that would change edge lengths to first
/// order, leaving the component tangent to the constraint set.
pub(crate) fn tangent_component(points: &[Vec3], forces: &[Vec3]) -> Vec<Vec3> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n);
    edges_into(points, &mut edges);
    let (mut diag, mut off) = (Vec::with_capacity(n), Vec::with_capacity(n));
    gram(&edges, &mut diag, &mut off);
    let system = Cyclic::new(&diag, &off);
    let mut t = forces.to_vec();
    let mut rate = vec![0.0; n];
    // a second pass removes what cancellation left behind
    for _ in 0..2 {
        for i in 0..n {
            let next = if i + 1 == n { 0 } else { i + 1 };
            rate[i] = 2.0 * edges[i].dot(&(t[next] - t[i]));
        }
        let mu = system.solve(&rate);
        remove_normal(&mut t, &edges, &mu);
    }
    t
}

/// Tension carried by each edge when the constraints balance the normal
/// part of `forces`: positive when the edge pulls its beads together.
pub(crate) fn edge_tensions(points: &[Vec3], forces: &[Vec3]) -> Vec<f64> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n);
    edges_into(points, &mut edges);
    let (mut diag, mut off) = (Vec::with_capacity(n), Vec::with_capacity(n));
    gram(&edges, &mut diag, &mut off);
    let rate: Vec<f64> = (0..n)
        .map(|i| {
            let next = if i + 1 == n { 0 } else { i + 1 };
            2.0 * edges[i].dot(&(forces[next] - forces[i]))
        })
        .collect();
    let mu = Cyclic::new(&diag, &off).solve(&rate);
    mu.iter().zip(&edges).map(|(m, e)| 2.0 * m * e.norm()).collect()
}

/// Moves beads by the least-norm Newton correction for the constraints
/// `|e_i|^2 = rest^2` until every edge is within [`EDGE_TOLERANCE`] of
/// `rest` (then a few more digits if they come cheaply). Returns the final
/// relative error, or `None` if the iteration fails.
pub(crate) fn project_edges(points: &mut [Vec3], rest: f64) -> Option<f64> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n);
    let (mut diag, mut off) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        edges_into(points, &mut edges);
        let err = edges.iter().map(|e| (e.norm() / rest - 1.0).abs()).fold(0.0, f64::max);
        if !err.is_finite() {
            return None;
        }
        if err < 1e-14 || (err < EDGE_TOLERANCE && err >= 0.5 * last) {
            return Some(err);
        }
        last = err;
        let g: Vec<f64> = edges.iter().map(|e| e.norm_squared() - rest * rest).collect();
        gram(&edges, &mut diag, &mut off);
        let lambda = Cyclic::new(&diag, &off).solve(&g);
        remove_normal(points, &edges, &lambda);
    }
    let err = edge_error(points, rest);
    (err < EDGE_TOLERANCE).then_some(err)
}
