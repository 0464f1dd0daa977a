//! Euclidean distance from a point to the convex hull of a finite set, by a
//! fully corrective Frank-Wolfe method with away-step fallback.

use serde::Serialize;

/// Iteration cap per solve; hitting it is reported through `capped`.
pub const MAX_ITERATIONS: usize = 50_000;
const REFRESH_EVERY: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct HullDistance {
    /// Distance to the iterate; an upper bound on the true distance that is
    /// within `tol` of it unless `capped`.
    pub distance: f64,
    /// Lower bound on the true distance from the duality gap.
    pub lower_bound: f64,
    /// Support of the final convex combination as `(atom, weight)` pairs.
    pub weights: Vec<(usize, f64)>,
    pub iterations: usize,
    pub capped: bool,
}

impl HullDistance {
    /// Whether the solve certified `distance > threshold`.
    pub fn exceeds(&self, threshold: f64) -> bool {
        self.lower_bound > threshold
    }
}

/// Distance from `x` to the hull of the atoms stored row-major in `atoms`.
///
/// Each iteration adds the Frank-Wolfe vertex to the active set and then
/// moves to the nearest point of the active set's affine hull, shrinking the
/// set whenever that point leaves the simplex of active weights. When the
/// affine step is unavailable (dependent active set) an away-step or
/// forward Frank-Wolfe step with exact line search is taken instead.
///
/// The result is within `tol` of the true distance. With `threshold` set the
/// solve stops as soon as the answer to "distance > threshold?" is certain.
pub fn min_distance(x: &[f64], atoms: &[f64], dim: usize, tol: f64, threshold: Option<f64>) -> HullDistance {
    assert_eq!(x.len(), dim);
    let count = atoms.len() / dim;
    assert!(count > 0, "hull of an empty set");
    let atom = |j: usize| &atoms[j * dim..(j + 1) * dim];

    let mut start = 0;
    let mut best = f64::INFINITY;
    for j in 0..count {
        let d = sq_dist(x, atom(j));
        if d < best {
            best = d;
            start = j;
        }
    }

    let mut w = vec![0.0; count];
    w[start] = 1.0;
    let mut active = vec![start];
    let mut y = atom(start).to_vec();
    let mut r: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let mut dirv = vec![0.0; dim];
    let mut lower: f64 = 0.0;
    let mut iterations = 0;

    loop {
        let d2 = dot(&r, &r);
        let d = d2.sqrt();
        if d <= tol || threshold.is_some_and(|t| d <= t) {
            return finish(d, lower.min(d), &w, &active, iterations, false);
        }
        let gy = dot(&y, &r);
        let mut s = 0;
        let mut gs = f64::INFINITY;
        for j in 0..count {
            let g = dot(atom(j), &r);
            if g < gs {
                gs = g;
                s = j;
            }
        }
        let gap = (gy - gs).max(0.0);
        lower = (d2 - 2.0 * gap).max(0.0).sqrt().max(lower);
        if gap <= 0.5 * tol * d {
            return finish(d, lower.min(d), &w, &active, iterations, false);
        }
        if threshold.is_some_and(|t| lower > t) {
            return finish(d, lower, &w, &active, iterations, false);
        }
        if iterations >= MAX_ITERATIONS {
            return finish(d, lower.min(d), &w, &active, iterations, true);
        }
        iterations += 1;

        let mut corrected = false;
        if !active.contains(&s) {
            let saved = (w.clone(), active.clone());
            active.push(s);
            if corrective_step(x, &atom, &mut w, &mut active) {
                let mut trial = vec![0.0; dim];
                recompute(&atom, &mut w, &active, &mut trial);
                // Rounding in a nearly dependent active set can overshoot.
                if sq_dist(&trial, x) <= d2 {
                    y = trial;
                    corrected = true;
                }
            }
            if !corrected {
                (w, active) = saved;
            }
        }
        if !corrected {
            frank_wolfe_step(&atom, s, gap, gy, &r, &mut w, &mut active, &mut y, &mut dirv);
            if iterations % REFRESH_EVERY == 0 {
                recompute(&atom, &mut w, &active, &mut y);
            }
        }
        for t in 0..dim {
            r[t] = y[t] - x[t];
        }
    }
}

fn recompute<'a>(atom: &impl Fn(usize) -> &'a [f64], w: &mut [f64], active: &[usize], y: &mut [f64]) {
    let total: f64 = active.iter().map(|&j| w[j]).sum();
    y.iter_mut().for_each(|c| *c = 0.0);
    for &j in active {
        w[j] /= total;
        for (yc, pc) in y.iter_mut().zip(atom(j)) {
            *yc += w[j] * pc;
        }
    }
}

/// Minor cycles of the min-norm-point method on the active set (the newest
/// member enters with weight zero). An affinely dependent active set is first
/// thinned along a null combination, which leaves the current point fixed.
/// Returns `false` when the entering atom was dropped without progress.
fn corrective_step<'a>(x: &[f64], atom: &impl Fn(usize) -> &'a [f64], w: &mut [f64], active: &mut Vec<usize>) -> bool {
    let entering = *active.last().expect("non-empty active set");
    for _ in 0..=2 * active.len() + 2 {
        if !active.contains(&entering) {
            return false;
        }
        let alpha = match affine_minimizer(x, atom, active) {
            Affine::Weights(alpha) => alpha,
            Affine::Dependent(mu) => {
                let (t, hit) = ratio_test(active, w, &mu);
                for (&j, &m) in active.iter().zip(&mu) {
                    w[j] -= t * m;
                }
                w[active[hit]] = 0.0;
                prune(active, w);
                continue;
            }
        };
        if alpha.iter().all(|&a| a > 0.0) {
            for (&j, &a) in active.iter().zip(&alpha) {
                w[j] = a;
            }
            return true;
        }
        // Walk from the current weights towards alpha until one weight hits 0.
        let mut theta = f64::INFINITY;
        let mut hit = 0;
        for (i, (&j, &a)) in active.iter().zip(&alpha).enumerate() {
            if a <= 0.0 {
                let den = w[j] - a;
                let t = if den > 0.0 { w[j] / den } else { 0.0 };
                if t < theta {
                    theta = t;
                    hit = i;
                }
            }
        }
        let theta = theta.min(1.0);
        for (&j, &a) in active.iter().zip(&alpha) {
            w[j] = (1.0 - theta) * w[j] + theta * a;
        }
        w[active[hit]] = 0.0;
        prune(active, w);
        if active.len() == 1 {
            w[active[0]] = 1.0;
            return active[0] == entering;
        }
    }
    true
}

/// Largest `t` keeping `w - t mu >= 0`, and the position that reaches zero.
fn ratio_test(active: &[usize], w: &[f64], mu: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, (&j, &m)) in active.iter().zip(mu).enumerate() {
        if m > 0.0 {
            let t = w[j].max(0.0) / m;
            if t < best.0 {
                best = (t, i);
            }
        }
    }
    best
}

fn prune(active: &mut Vec<usize>, w: &mut [f64]) {
    active.retain(|&j| {
        let live = w[j] > 0.0;
        if !live {
            w[j] = 0.0;
        }
        live
    });
}

enum Affine {
    /// Affine weights of the point of the affine hull nearest to `x`.
    Weights(Vec<f64>),
    /// Coefficients summing to zero whose combination of the atoms vanishes.
    Dependent(Vec<f64>),
}

fn affine_minimizer<'a>(x: &[f64], atom: &impl Fn(usize) -> &'a [f64], active: &[usize]) -> Affine {
    let p0 = atom(active[0]);
    let q: Vec<f64> = p0.iter().zip(x).map(|(a, b)| a - b).collect();
    let cols = active.len() - 1;
    if cols == 0 {
        return Affine::Weights(vec![1.0]);
    }
    // Modified Gram-Schmidt on the edge vectors p_i - p_0.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut rmat = vec![vec![0.0; cols]; cols];
    for c in 0..cols {
        let mut v: Vec<f64> = atom(active[c + 1]).iter().zip(p0).map(|(a, b)| a - b).collect();
        let scale = dot(&v, &v).sqrt();
        for (b, e) in basis.iter().enumerate() {
            let proj = dot(e, &v);
            rmat[b][c] = proj;
            v.iter_mut().zip(e).for_each(|(vi, ei)| *vi -= proj * ei);
        }
        let nrm = dot(&v, &v).sqrt();
        if !(nrm > 1e-10 * scale) {
            // Edge c is a combination of the earlier edges.
            let coef = back_substitute(&rmat, c, |b| rmat[b][c]);
            let mut mu = vec![0.0; active.len()];
            mu[c + 1] = 1.0;
            for (b, &cb) in coef.iter().enumerate() {
                mu[b + 1] = -cb;
            }
            mu[0] = coef.iter().sum::<f64>() - 1.0;
            return Affine::Dependent(mu);
        }
        rmat[c][c] = nrm;
        v.iter_mut().for_each(|vi| *vi /= nrm);
        basis.push(v);
    }
    // Minimise |q + E beta|: R beta = -Q^T q.
    let rhs: Vec<f64> = basis.iter().map(|e| -dot(e, &q)).collect();
    let beta = back_substitute(&rmat, cols, |c| rhs[c]);
    let mut alpha = Vec::with_capacity(active.len());
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta);
    Affine::Weights(alpha)
}

/// Solves the leading `size x size` upper-triangular system of `r`.
fn back_substitute(r: &[Vec<f64>], size: usize, rhs: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; size];
    for c in (0..size).rev() {
        let s: f64 = (c + 1..size).map(|j| r[c][j] * out[j]).sum();
        out[c] = (rhs(c) - s) / r[c][c];
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn frank_wolfe_step<'a>(
    atom: &impl Fn(usize) -> &'a [f64],
    s: usize,
    gap: f64,
    gy: f64,
    r: &[f64],
    w: &mut [f64],
    active: &mut Vec<usize>,
    y: &mut [f64],
    dirv: &mut [f64],
) {
    let dim = y.len();
    let mut v = active[0];
    let mut gv = f64::NEG_INFINITY;
    for &j in active.iter() {
        let g = dot(atom(j), r);
        if g > gv {
            gv = g;
            v = j;
        }
    }
    let forward = gap >= gv - gy || active.len() == 1;
    let max_step = if forward {
        for t in 0..dim {
            dirv[t] = atom(s)[t] - y[t];
        }
        1.0
    } else {
        for t in 0..dim {
            dirv[t] = y[t] - atom(v)[t];
        }
        w[v] / (1.0 - w[v])
    };
    let dd = dot(dirv, dirv);
    if dd <= 0.0 {
        return;
    }
    let step = (-dot(r, dirv) / dd).clamp(0.0, max_step);
    if step <= 0.0 {
        return;
    }
    if forward {
        for &j in active.iter() {
            w[j] *= 1.0 - step;
        }
        if !active.contains(&s) {
            active.push(s);
        }
        w[s] += step;
        if step >= 1.0 {
            for &j in active.iter() {
                w[j] = 0.0;
            }
            w[s] = 1.0;
        }
    } else {
        for &j in active.iter() {
            w[j] *= 1.0 + step;
        }
        w[v] -= step;
        if step >= max_step {
            w[v] = 0.0;
        }
    }
    prune(active, w);
    for t in 0..dim {
        y[t] += step * dirv[t];
    }
}

fn finish(d: f64, lower: f64, w: &[f64], active: &[usize], iterations: usize, capped: bool) -> HullDistance {
    let mut weights: Vec<(usize, f64)> = active.iter().map(|&j| (j, w[j])).collect();
    weights.sort_by_key(|p| p.0);
    HullDistance {
        distance: d,
        lower_bound: lower,
        weights,
        iterations,
        capped,
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<f64> {
        vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]
    }

    #[test]
    fn inside_point_has_zero_distance() {
        let h = min_distance(&[0.3, 0.6], &square(), 2, 1e-9, None);
        assert!(h.distance <= 1e-9);
        assert!(!h.capped);
    }

    #[test]
    fn outside_point_distance_to_edge() {
        let h = min_distance(&[0.5, 2.0], &square(), 2, 1e-9, None);
        assert!((h.distance - 1.0).abs() <= 1e-9, "{}", h.distance);
        let h = min_distance(&[2.0, 2.0], &square(), 2, 1e-9, None);
        assert!((h.distance - 2f64.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn weights_reproduce_the_nearest_point() {
        let atoms = square();
        let x = [1.7, 0.25];
        let h = min_distance(&x, &atoms, 2, 1e-10, None);
        let mut y = [0.0; 2];
        let mut total = 0.0;
        for &(j, wj) in &h.weights {
            total += wj;
            y[0] += wj * atoms[2 * j];
            y[1] += wj * atoms[2 * j + 1];
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!((y[0] - 1.0).abs() < 1e-8 && (y[1] - 0.25).abs() < 1e-8, "{y:?}");
    }

    #[test]
    fn threshold_mode_decides_early() {
        let h = min_distance(&[0.5, 3.0], &square(), 2, 1e-9, Some(0.5));
        assert!(h.exceeds(0.5));
        let h = min_distance(&[0.5, 1.2], &square(), 2, 1e-9, Some(0.5));
        assert!(!h.exceeds(0.5));
        assert!(h.distance <= 0.5);
    }

    #[test]
    fn interior_of_a_thin_simplex_in_high_dimension() {
        let dim = 10;
        let mut atoms = vec![0.0; dim * dim];
        for i in 0..dim {
            atoms[i * dim + i] = 1.0;
        }
        let x = vec![0.1; dim];
        let h = min_distance(&x, &atoms, dim, 1e-9, None);
        assert!(h.distance <= 1e-9);
        let x = vec![0.0; dim];
        let h = min_distance(&x, &atoms, dim, 1e-9, None);
        let want = (1.0 / dim as f64).sqrt();
        assert!((h.distance - want).abs() <= 1e-9, "{} vs {want}", h.distance);
    }
}
