//! Point clouds and the hull primitives used by both recovery pipelines.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{GtmError, Result};
use crate::hull::{self, HullDistance};
use crate::types::ProjectionEstimate;

/// A finite set of points in `R^dim`, stored row-major, with stable ids.
///
/// A cloud of projected points keeps the orthonormal `embedding` (ambient
/// `n x dim`) so results can be lifted back with [`PointCloud::lift`].
#[derive(Clone, Debug)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
    ids: Vec<usize>,
    embedding: Option<Array2<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(GtmError::Shape(format!(
                "{} values do not form points of dimension {dim}",
                data.len()
            )));
        }
        let ids = (0..data.len() / dim).collect();
        Ok(Self {
            dim,
            data,
            ids,
            embedding: None,
        })
    }

    /// Each column of `m` is a point.
    pub fn from_columns(m: ArrayView2<f64>) -> Self {
        let dim = m.nrows();
        let data = m.t().iter().copied().collect();
        Self::new(dim, data).expect("column layout is always valid")
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(GtmError::Shape("points of unequal dimension".into()));
        }
        Self::new(dim, points.concat())
    }

    /// Coordinates of `P_hat x` for every column `x` of `m`.
    pub fn projected(m: ArrayView2<f64>, estimate: &ProjectionEstimate) -> Self {
        let coords = estimate.basis.t().dot(&m);
        let mut cloud = Self::from_columns(coords.view());
        cloud.embedding = Some(estimate.basis.clone());
        cloud
    }

    pub fn with_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.len() {
            return Err(GtmError::Shape(format!("{} ids for {} points", ids.len(), self.len())));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn id(&self, i: usize) -> usize {
        self.ids[i]
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn embedding(&self) -> Option<&Array2<f64>> {
        self.embedding.as_ref()
    }

    /// Ambient coordinates of point `i`.
    pub fn lift(&self, i: usize) -> Vec<f64> {
        match &self.embedding {
            Some(e) => e.dot(&Array1::from(self.point(i).to_vec())).to_vec(),
            None => self.point(i).to_vec(),
        }
    }

    /// Ambient coordinates of the listed points as columns.
    pub fn lift_columns(&self, idx: &[usize]) -> Array2<f64> {
        let rows = self.embedding.as_ref().map_or(self.dim, |e| e.nrows());
        let mut out = Array2::zeros((rows, idx.len()));
        for (c, &i) in idx.iter().enumerate() {
            for (r, v) in self.lift(i).into_iter().enumerate() {
                out[[r, c]] = v;
            }
        }
        out
    }

    /// Sub-cloud of the listed positions; ids and embedding carry over.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            data,
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
            embedding: self.embedding.clone(),
        }
    }

    /// Applies `f` to every point (used for rigid motions in tests).
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.len() {
            data.extend(f(self.point(i)));
        }
        Self {
            dim: data.len() / self.len().max(1),
            data,
            ids: self.ids.clone(),
            embedding: None,
        }
    }

    fn gather(&self, idx: impl Iterator<Item = usize>) -> Vec<f64> {
        let mut out = Vec::new();
        for i in idx {
            out.extend_from_slice(self.point(i));
        }
        out
    }
}

/// Distance from `x` to the hull of the whole cloud, within `tol`.
pub fn dist_to_hull(x: &[f64], cloud: &PointCloud, tol: f64) -> HullDistance {
    hull::min_distance(x, cloud.data(), cloud.dim(), tol, None)
}

/// Distance from `x` to the hull of the listed positions.
pub fn dist_to_subset_hull(x: &[f64], cloud: &PointCloud, members: &[usize], tol: f64, threshold: Option<f64>) -> HullDistance {
    let atoms = cloud.gather(members.iter().copied());
    hull::min_distance(x, &atoms, cloud.dim(), tol, threshold)
}

/// Partition into connected components of the graph joining points at
/// distance `<= threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Component index of each position.
    pub labels: Vec<usize>,
    /// Positions per component, each sorted by id, components ordered by
    /// their lowest id.
    pub clusters: Vec<Vec<usize>>,
}

impl Clustering {
    /// Lowest-id member of each cluster.
    pub fn representatives(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c[0]).collect()
    }
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Single-linkage clustering at `threshold`.
pub fn single_linkage(cloud: &PointCloud, threshold: f64) -> Clustering {
    let n = cloud.len();
    let t2 = threshold * threshold;
    let edges: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = cloud.point(i);
            ((i + 1)..n)
                .filter(move |&j| hull::sq_dist(pi, cloud.point(j)) <= t2)
                .map(move |j| (i, j))
        })
        .collect();
    let mut dsu = Dsu::new(n);
    for (i, j) in edges {
        dsu.union(i, j);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| cloud.id(i));
    let mut root_to_label = std::collections::HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut labels = vec![0; n];
    for i in order {
        let root = dsu.find(i);
        let label = *root_to_label.entry(root).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        labels[i] = label;
        clusters[label].push(i);
    }
    Clustering { labels, clusters }
}

/// Number of points (self included) within `radius` of each point.
pub fn ball_counts(cloud: &PointCloud, radius: f64) -> Vec<usize> {
    let r2 = radius * radius;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let pi = cloud.point(i);
            (0..cloud.len())
                .filter(|&j| hull::sq_dist(pi, cloud.point(j)) <= r2)
                .count()
        })
        .collect()
}

/// Outcome of an extreme-point search.
#[derive(Clone, Debug)]
pub struct ExtremeSet {
    /// Positions of the extreme points, ascending.
    pub indices: Vec<usize>,
    pub iterations: usize,
    pub capped: usize,
}

/// Points at distance `> tol` from the hull of the remaining points. Points
/// within `tol` of each other count once, through their lowest id.
pub fn extreme_points(cloud: &PointCloud, tol: f64) -> ExtremeSet {
    if cloud.len() <= 1 {
        return ExtremeSet {
            indices: (0..cloud.len()).collect(),
            iterations: 0,
            capped: 0,
        };
    }
    let reps = single_linkage(cloud, tol).representatives();
    let reps_cloud = cloud.subset(&reps);
    let verdicts: Vec<(bool, usize, bool)> = (0..reps.len())
        .into_par_iter()
        .map(|a| {
            if reps.len() == 1 {
                return (true, 0, false);
            }
            let others: Vec<usize> = (0..reps.len()).filter(|&b| b != a).collect();
            let h = dist_to_subset_hull(reps_cloud.point(a), &reps_cloud, &others, tol, Some(tol));
            (h.distance > tol, h.iterations, h.capped)
        })
        .collect();
    let mut indices: Vec<usize> = reps
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.0)
        .map(|(&i, _)| i)
        .collect();
    indices.sort_unstable();
    ExtremeSet {
        indices,
        iterations: verdicts.iter().map(|v| v.1).sum(),
        capped: verdicts.iter().filter(|v| v.2).count(),
    }
}

/// Points whose direction is not in the cone spanned by the other directions.
///
/// Directions are compared after normalisation; two points whose unit
/// directions lie within `tol` count once.
pub fn extreme_rays(cloud: &PointCloud, tol: f64) -> Result<ExtremeSet> {
    let dim = cloud.dim();
    let mut units = Vec::with_capacity(cloud.data().len());
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        let nrm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm <= tol {
            return Err(GtmError::DegenerateRay { index: cloud.id(i), norm: nrm });
        }
        units.extend(p.iter().map(|x| x / nrm));
    }
    let unit_cloud = PointCloud::new(dim, units)?.with_ids(cloud.ids().to_vec())?;
    let reps = single_linkage(&unit_cloud, tol).representatives();
    let reps_cloud = unit_cloud.subset(&reps);
    let count = reps.len();
    if count <= 1 {
        return Ok(ExtremeSet {
            indices: reps,
            iterations: 0,
            capped: 0,
        });
    }

    // Any point of the cone within unit distance of a unit vector has conic
    // weight sum at most 1 / min_i <h, u_i>, so the truncated hull below
    // contains the relevant part of the cone.
    let mut h = vec![0.0; dim];
    for a in 0..count {
        for (hc, uc) in h.iter_mut().zip(reps_cloud.point(a)) {
            *hc += uc;
        }
    }
    let hn = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    let min_cos = if hn > 0.0 {
        (0..count)
            .map(|a| reps_cloud.point(a).iter().zip(&h).map(|(u, hc)| u * hc / hn).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let scale = if min_cos > 1e-6 { 2.0 / min_cos } else { 1e6 };

    let verdicts: Vec<(bool, usize, bool)> = (0..count)
        .into_par_iter()
        .map(|a| {
            let mut atoms = vec![0.0; dim];
            for b in (0..count).filter(|&b| b != a) {
                atoms.extend(reps_cloud.point(b).iter().map(|x| x * scale));
            }
            let hd = hull::min_distance(reps_cloud.point(a), &atoms, dim, tol, Some(tol));
            (hd.distance > tol, hd.iterations, hd.capped)
        })
        .collect();
    let mut indices: Vec<usize> = reps
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.0)
        .map(|(&i, _)| i)
        .collect();
    indices.sort_unstable();
    Ok(ExtremeSet {
        indices,
        iterations: verdicts.iter().map(|v| v.1).sum(),
        capped: verdicts.iter().filter(|v| v.2).count(),
    })
}
