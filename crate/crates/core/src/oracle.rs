//! Slow reference implementations used to cross-check the geometric and
//! combinatorial kernels. They share no code with the production solvers.

/// Whether `{lambda >= 0 : A lambda = b}` is non-empty, by a dense phase-one
/// simplex with Bland's rule. `a` is given by rows.
pub fn lp_feasible(a: &[Vec<f64>], b: &[f64]) -> bool {
    let m = a.len();
    if m == 0 {
        return true;
    }
    let nv = a[0].len();
    let width = nv + m + 1;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for j in 0..nv {
            row[j] = sign * a[i][j];
        }
        row[nv + i] = 1.0;
        row[width - 1] = sign * b[i];
        t.push(row);
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();
    let mut z = vec![0.0; width];
    for row in &t {
        for j in 0..nv {
            z[j] -= row[j];
        }
        z[width - 1] -= row[width - 1];
    }
    let scale = 1.0 + b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for _ in 0..100_000 {
        let Some(enter) = (0..nv + m).find(|&j| z[j] < -1e-12) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > 1e-12 {
                let ratio = t[i][width - 1] / t[i][enter];
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            break;
        };
        let piv = t[l][enter];
        for v in t[l].iter_mut() {
            *v /= piv;
        }
        let prow = t[l].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != l && row[enter] != 0.0 {
                let f = row[enter];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
            }
        }
        let f = z[enter];
        for (v, p) in z.iter_mut().zip(&prow) {
            *v -= f * p;
        }
        basis[l] = enter;
    }
    -z[width - 1] <= 1e-9 * scale
}

/// `x` lies in the convex hull of `pts`.
pub fn hull_member(x: &[f64], pts: &[Vec<f64>]) -> bool {
    let dim = x.len();
    let mut rows: Vec<Vec<f64>> = (0..dim).map(|d| pts.iter().map(|p| p[d]).collect()).collect();
    rows.push(vec![1.0; pts.len()]);
    let mut b = x.to_vec();
    b.push(1.0);
    lp_feasible(&rows, &b)
}

/// `x` lies in the cone generated by `pts`.
pub fn cone_member(x: &[f64], pts: &[Vec<f64>]) -> bool {
    let rows: Vec<Vec<f64>> = (0..x.len()).map(|d| pts.iter().map(|p| p[d]).collect()).collect();
    lp_feasible(&rows, x)
}

fn solve_dense(mut g: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = g.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| g[i][c].abs().total_cmp(&g[j][c].abs()))?;
        if g[p][c].abs() <= 1e-11 * scale {
            return None;
        }
        g.swap(c, p);
        rhs.swap(c, p);
        for i in (c + 1)..n {
            let f = g[i][c] / g[c][c];
            for j in c..n {
                g[i][j] -= f * g[c][j];
            }
            rhs[i] -= f * rhs[c];
        }
    }
    let mut out = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|j| g[c][j] * out[j]).sum();
        out[c] = (rhs[c] - s) / g[c][c];
    }
    Some(out)
}

fn subsets(n: usize, size: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == size {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, f);
            cur.pop();
        }
    }
    rec(0, n, size, &mut Vec::new(), f);
}

/// Distance to the convex hull by enumerating every affinely independent
/// support of at most `dim + 1` points.
pub fn caratheodory_distance(x: &[f64], pts: &[Vec<f64>]) -> f64 {
    let dim = x.len();
    let mut best = f64::INFINITY;
    for size in 1..=pts.len().min(dim + 1) {
        subsets(pts.len(), size, &mut |s| {
            let p0 = &pts[s[0]];
            let q: Vec<Vec<f64>> = s[1..]
                .iter()
                .map(|&j| pts[j].iter().zip(p0).map(|(a, b)| a - b).collect())
                .collect();
            let t: Vec<f64> = x.iter().zip(p0).map(|(a, b)| a - b).collect();
            let r = q.len();
            let mu = if r == 0 {
                Some(Vec::new())
            } else {
                let g: Vec<Vec<f64>> = (0..r)
                    .map(|a| (0..r).map(|b| q[a].iter().zip(&q[b]).map(|(u, v)| u * v).sum()).collect())
                    .collect();
                let rhs: Vec<f64> = (0..r).map(|a| q[a].iter().zip(&t).map(|(u, v)| u * v).sum()).collect();
                solve_dense(g, rhs)
            };
            let Some(mu) = mu else { return };
            let l0 = 1.0 - mu.iter().sum::<f64>();
            if l0 < -1e-12 || mu.iter().any(|&m| m < -1e-12) {
                return;
            }
            let mut y = p0.clone();
            for (m, qa) in mu.iter().zip(&q) {
                for (yc, qc) in y.iter_mut().zip(qa) {
                    *yc += m * qc;
                }
            }
            let d = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            best = best.min(d);
        });
    }
    best
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Connected components of the graph joining points at distance
/// `<= threshold`, by breadth-first search. Components are sorted internally
/// and ordered by their smallest member.
pub fn components_bfs(pts: &[Vec<f64>], threshold: f64) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && dist(&pts[u], &pts[v]) <= threshold {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Extreme points by LP membership against the others, after merging points
/// within `tol` (lowest index kept).
pub fn extreme_points_lp(pts: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let reps: Vec<usize> = components_bfs(pts, tol).into_iter().map(|c| c[0]).collect();
    let mut out: Vec<usize> = reps
        .iter()
        .filter(|&&i| {
            let others: Vec<Vec<f64>> = reps.iter().filter(|&&j| j != i).map(|&j| pts[j].clone()).collect();
            others.is_empty() || !hull_member(&pts[i], &others)
        })
        .copied()
        .collect();
    out.sort_unstable();
    out
}

/// Extreme rays by conic LP membership of each unit direction against the
/// others, after merging directions within `tol`.
pub fn extreme_rays_lp(pts: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let units: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            p.iter().map(|x| x / n).collect()
        })
        .collect();
    let reps: Vec<usize> = components_bfs(&units, tol).into_iter().map(|c| c[0]).collect();
    let mut out: Vec<usize> = reps
        .iter()
        .filter(|&&i| {
            let others: Vec<Vec<f64>> = reps.iter().filter(|&&j| j != i).map(|&j| units[j].clone()).collect();
            others.is_empty() || !cone_member(&units[i], &others)
        })
        .copied()
        .collect();
    out.sort_unstable();
    out
}

/// Exhaustive minimum-cost assignment.
pub fn assignment_brute_force(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (perm.clone(), f64::INFINITY);
    fn rec(k: usize, perm: &mut Vec<usize>, cost: &[Vec<f64>], best: &mut (Vec<usize>, f64)) {
        if k == perm.len() {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            if total < best.1 {
                *best = (perm.clone(), total);
            }
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            rec(k + 1, perm, cost, best);
            perm.swap(k, i);
        }
    }
    rec(0, &mut perm, cost, &mut best);
    best
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull of planar points, counter-clockwise (monotone chain).
pub fn hull_2d(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_segment(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Distance from `p` to a counter-clockwise convex polygon.
pub fn polygon_distance(p: &[f64; 2], poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n == 1 {
        return point_segment(p, &poly[0], &poly[0]);
    }
    let inside = n >= 3 && (0..n).all(|i| cross(&poly[i], &poly[(i + 1) % n], p) >= 0.0);
    if inside {
        return 0.0;
    }
    (0..n)
        .map(|i| point_segment(p, &poly[i], &poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Skew parameter of a triangle by sampling the boundary of the simplex minus
/// each vertex ball, taking planar hulls and bisecting on `r`.
pub fn skew_triangle(v: [[f64; 2]; 3], eps: f64, samples: usize) -> f64 {
    let dist_at = |i: usize, radius: f64| -> f64 {
        let ai = v[i];
        let mut pts = Vec::new();
        for e in 0..3 {
            let (p, q) = (v[e], v[(e + 1) % 3]);
            for s in 0..=samples {
                let t = s as f64 / samples as f64;
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                if ((x[0] - ai[0]).powi(2) + (x[1] - ai[1]).powi(2)).sqrt() >= radius {
                    pts.push(x);
                }
            }
        }
        // Arc of the removed ball inside the vertex angle.
        let j = (i + 1) % 3;
        let l = (i + 2) % 3;
        let th1 = (v[j][1] - ai[1]).atan2(v[j][0] - ai[0]);
        let mut th2 = (v[l][1] - ai[1]).atan2(v[l][0] - ai[0]);
        while th2 < th1 - std::f64::consts::PI {
            th2 += 2.0 * std::f64::consts::PI;
        }
        while th2 > th1 + std::f64::consts::PI {
            th2 -= 2.0 * std::f64::consts::PI;
        }
        for s in 0..=samples {
            let th = th1 + (th2 - th1) * s as f64 / samples as f64;
            pts.push([ai[0] + radius * th.cos(), ai[1] + radius * th.sin()]);
        }
        polygon_distance(&ai, &hull_2d(pts))
    };
    let holds = |r: f64| (0..3).all(|i| dist_at(i, r * eps) >= eps);
    let min_edge = (0..3)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % 3]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (1.0, min_edge / eps);
    if holds(lo) {
        return 1.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
