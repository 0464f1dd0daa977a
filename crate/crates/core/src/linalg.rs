//! Dense kernels: one-sided Jacobi SVD, null-space projections, pseudoinverse,
//! spectral norms and principal-angle distances.
//!
//! Everything here is deterministic for a fixed input. The SVD orthogonalises
//! the rows of the input with Hestenes rotations, so the left factor is always
//! a full `n x n` orthogonal matrix even when the input has fewer columns than
//! rows.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{GtmError, Result};
use crate::types::ProjectionEstimate;

const JACOBI_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 100;

/// Singular value decomposition `A = U diag(S) Vt`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `n x n` orthogonal.
    pub u: Array2<f64>,
    /// Non-increasing, length `min(n, m)` for [`svd`] and `n` for [`left_singular`].
    pub s: Vec<f64>,
    /// `min(n, m) x m`, absent for left-only queries.
    pub vt: Option<Array2<f64>>,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Option<Array2<f64>> {
        let vt = self.vt.as_ref()?;
        let r = self.s.len();
        let mut us = self.u.slice(s![.., ..r]).to_owned();
        for (j, mut col) in us.axis_iter_mut(Axis(1)).enumerate() {
            col *= self.s[j];
        }
        Some(us.dot(vt))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn frobenius(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Hestenes rotations on the rows of `a`. Returns the accumulated rotation `G`
/// (so that `G a` has mutually orthogonal rows) together with those rows.
fn orthogonalize_rows(a: ArrayView2<f64>) -> (Array2<f64>, Vec<Vec<f64>>) {
    let n = a.nrows();
    let mut rows: Vec<Vec<f64>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut g: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&rows[p], &rows[p]);
                let beta = dot(&rows[q], &rows[q]);
                let gamma = dot(&rows[p], &rows[q]);
                if gamma == 0.0 || gamma.abs() <= JACOBI_EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate_pair(&mut rows, p, q, c, sn);
                rotate_pair(&mut g, p, q, c, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut gm = Array2::zeros((n, n));
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            gm[[i, j]] = *v;
        }
    }
    (gm, rows)
}

fn rotate_pair(rows: &mut [Vec<f64>], p: usize, q: usize, c: f64, sn: f64) {
    let (head, tail) = rows.split_at_mut(q);
    let rp = &mut head[p];
    let rq = &mut tail[0];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - sn * xq;
        *y = sn * xp + c * xq;
    }
}

/// Order of singular values, descending; equal values keep factorization order.
fn descending_order(s: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Left singular vectors and all `n` singular values of `a` (`n x m`). When
/// `m < n` the trailing values are (numerically) zero.
pub fn left_singular(a: ArrayView2<f64>) -> SvdResult {
    let n = a.nrows();
    let (g, rows) = orthogonalize_rows(a);
    let norms: Vec<f64> = rows.iter().map(|r| norm(r)).collect();
    let order = descending_order(&norms);
    let mut u = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        u.column_mut(col).assign(&g.row(i));
    }
    SvdResult {
        u,
        s: order.iter().map(|&i| norms[i]).collect(),
        vt: None,
    }
}

/// Full SVD with every factor retained.
pub fn svd(a: ArrayView2<f64>) -> SvdResult {
    let (n, m) = a.dim();
    if n <= m {
        let (g, rows) = orthogonalize_rows(a);
        let norms: Vec<f64> = rows.iter().map(|r| norm(r)).collect();
        let order = descending_order(&norms);
        let mut u = Array2::zeros((n, n));
        let mut vt = Array2::zeros((n, m));
        for (col, &i) in order.iter().enumerate() {
            u.column_mut(col).assign(&g.row(i));
            if norms[i] > 0.0 {
                for (j, v) in rows[i].iter().enumerate() {
                    vt[[col, j]] = v / norms[i];
                }
            }
        }
        SvdResult {
            u,
            s: order.iter().map(|&i| norms[i]).collect(),
            vt: Some(vt),
        }
    } else {
        // A^T = U' S V'^T  =>  A = V' S U'^T
        let t = svd(a.t());
        let vt_t = t.vt.expect("full svd keeps vt");
        let mut u = Array2::zeros((n, n));
        u.slice_mut(s![.., ..m]).assign(&vt_t.t());
        complete_orthonormal(&mut u, m, &t.s);
        SvdResult {
            u,
            s: t.s,
            vt: Some(t.u.t().to_owned()),
        }
    }
}

/// Replaces zero columns among the first `filled` and fills the remaining
/// columns of `u` so that `u` is orthogonal.
fn complete_orthonormal(u: &mut Array2<f64>, filled: usize, s: &[f64]) {
    let n = u.nrows();
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(n);
    let mut missing: Vec<usize> = Vec::new();
    for j in 0..filled {
        if s[j] > 0.0 {
            basis.push(u.column(j).to_owned());
        } else {
            missing.push(j);
        }
    }
    missing.extend(filled..n);
    let mut candidate = 0;
    for col in missing {
        loop {
            let mut e = Array1::<f64>::zeros(n);
            e[candidate % n] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dot(&e);
                    e.scaled_add(-proj, b);
                }
            }
            let nn = e.dot(&e).sqrt();
            if nn > 1e-8 {
                e /= nn;
                u.column_mut(col).assign(&e);
                basis.push(e);
                break;
            }
        }
    }
}

/// Projection onto the left singular vectors belonging to the `k` smallest
/// singular values of `d`.
pub fn last_k_left_projection(d: ArrayView2<f64>, k: usize) -> Result<ProjectionEstimate> {
    let (n, m) = d.dim();
    if k == 0 || k > n {
        return Err(GtmError::InvalidArgument(format!(
            "k = {k} must satisfy 0 < k <= n = {n}"
        )));
    }
    if m < n - k {
        return Err(GtmError::UnderdeterminedNullSpace {
            columns: m,
            needed: n - k,
        });
    }
    let svd = left_singular(d);
    let mut warnings = Vec::new();
    let smax = svd.s[0];
    let lo = if k < n { svd.s[n - k - 1] } else { f64::INFINITY };
    let hi = svd.s[n - k];
    if (lo - hi).abs() <= 1e-12 * smax && smax > 0.0 {
        warnings.push(format!(
            "singular values {lo:e} and {hi:e} tie at position {}; subspace not unique",
            n - k
        ));
    }
    let basis = svd.u.slice(s![.., n - k..]).to_owned();
    let mut p_hat = basis.dot(&basis.t());
    symmetrize(&mut p_hat);
    Ok(ProjectionEstimate {
        p_hat,
        basis,
        k,
        singvals: svd.s,
        warnings,
    })
}

fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
}

/// Moore-Penrose pseudoinverse and the numerical rank used for it.
pub fn pseudoinverse_with_rank(a: ArrayView2<f64>) -> (Array2<f64>, usize) {
    let (n, m) = a.dim();
    let f = svd(a);
    let vt = f.vt.expect("full svd keeps vt");
    let smax = f.s.first().copied().unwrap_or(0.0);
    let cutoff = 1e-12 * smax;
    let mut out = Array2::zeros((m, n));
    let mut rank = 0;
    for (j, &sv) in f.s.iter().enumerate() {
        if sv <= cutoff || sv == 0.0 {
            continue;
        }
        rank += 1;
        let v = vt.row(j);
        let u = f.u.column(j);
        for r in 0..m {
            let vr = v[r] / sv;
            if vr == 0.0 {
                continue;
            }
            for c in 0..n {
                out[[r, c]] += vr * u[c];
            }
        }
    }
    (out, rank)
}

pub fn pseudoinverse(a: ArrayView2<f64>) -> Array2<f64> {
    pseudoinverse_with_rank(a).0
}

pub fn rank_with_tolerance(a: ArrayView2<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Singular values only, computed on the cheaper orientation.
pub fn singular_values(a: ArrayView2<f64>) -> Vec<f64> {
    let (n, m) = a.dim();
    let f = if n <= m {
        left_singular(a)
    } else {
        left_singular(a.t())
    };
    f.s.into_iter().take(n.min(m)).collect()
}

const POWER_MAX_ITERS: usize = 10_000;
const POWER_REL_TOL: f64 = 1e-10;

/// Largest singular value by power iteration on `M^T M`.
pub fn spectral_norm(a: ArrayView2<f64>) -> Result<f64> {
    let (_, m) = a.dim();
    if m == 0 || a.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let mut x = Array1::from_shape_fn(m, start_entry);
    x /= x.dot(&x).sqrt();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let y = a.dot(&x);
        let z = a.t().dot(&y);
        let rayleigh = y.dot(&y);
        let zn = z.dot(&z).sqrt();
        if zn == 0.0 {
            return Ok(0.0);
        }
        let mut resid = z.clone();
        resid.scaled_add(-rayleigh, &x);
        let rn = resid.dot(&resid).sqrt();
        let stalled = (rayleigh - lambda).abs() <= 1e-15 * rayleigh;
        lambda = rayleigh;
        if stalled && rn > POWER_REL_TOL * rayleigh {
            break;
        }
        if rn <= POWER_REL_TOL * rayleigh {
            // one more Rayleigh quotient on the improved iterate
            let xn = &z / zn;
            let yn = a.dot(&xn);
            return Ok(yn.dot(&yn).max(lambda).sqrt());
        }
        x = z / zn;
    }
    // Nearly tied top singular values: fall back to the full decomposition.
    match singular_values(a).first() {
        Some(&s) if s.is_finite() => Ok(s),
        _ => Err(GtmError::PowerIteration {
            iterations: POWER_MAX_ITERS,
        }),
    }
}

// Deterministic, irregular start vector.
fn start_entry(i: usize) -> f64 {
    let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let h = (h ^ (h >> 31)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    0.5 + ((h >> 11) as f64) / ((1u64 << 53) as f64)
}

pub fn is_projection(p: ArrayView2<f64>, tol: f64) -> bool {
    if p.nrows() != p.ncols() {
        return false;
    }
    let p2 = p.dot(&p);
    let diff = (&p2 - &p).iter().map(|x| x.abs()).fold(0.0, f64::max);
    let asym = (&p - &p.t()).iter().map(|x| x.abs()).fold(0.0, f64::max);
    diff <= tol && asym <= tol
}

/// `||P - Q||_2`, the sine of the largest principal angle between the ranges.
pub fn subspace_distance<'a>(p: ArrayView2<'a, f64>, q: ArrayView2<'a, f64>) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(GtmError::Shape(format!(
            "projections {:?} and {:?}",
            p.dim(),
            q.dim()
        )));
    }
    for (name, m) in [("P", &p), ("P_hat", &q)] {
        if !is_projection(m.view(), 1e-8) {
            return Err(GtmError::NotProjection(format!("{name} is not idempotent")));
        }
    }
    spectral_norm((&p - &q).view())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in non-increasing order with matching columns.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.to_owned();
    symmetrize(&mut m);
    let mut v = Array2::<f64>::eye(n);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let total: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - sn * mkq;
                    m[[k, q]] = sn * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - sn * mqk;
                    m[[q, k]] = sn * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - sn * vkq;
                    v[[k, q]] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    let order = descending_order(&diag);
    let mut vecs = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        vecs.column_mut(col).assign(&v.column(i));
    }
    (order.iter().map(|&i| diag[i]).collect(), vecs)
}

/// Orthonormal basis (`n x (n - rank)`) of the null space of the rows of `v`.
pub fn null_space_basis(v: ArrayView2<f64>) -> Array2<f64> {
    let (k, n) = v.dim();
    let f = left_singular(v.t());
    let smax = f.s.first().copied().unwrap_or(0.0);
    let rank = f.s.iter().take(k.min(n)).filter(|&&x| x > 1e-12 * smax).count();
    f.u.slice(s![.., rank..]).to_owned()
}

/// Orthogonal projection onto the column space of `a`.
pub fn column_space_projection(a: ArrayView2<f64>) -> Array2<f64> {
    let pinv = pseudoinverse(a);
    let mut p = a.dot(&pinv);
    symmetrize(&mut p);
    p
}

pub fn column(a: &Array2<f64>, j: usize) -> Vec<f64> {
    a.column(j).to_vec()
}

pub fn to_vec(v: ArrayView1<f64>) -> Vec<f64> {
    v.to_vec()
}
