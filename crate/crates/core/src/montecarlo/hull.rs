//! Brute-force convex hull of a small labeled point cloud.
//!
//! Every `d`-subset is tested as a facet candidate against all other points.
//! That is `O(C(N, d) · N)` but has no update logic that could go wrong, which
//! is what an oracle needs.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Where a point of a cloud comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointLabel {
    Origin,
    /// Position `S_step` of walk `walk` (0-based walk, 1-based step).
    Walk { walk: usize, step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    d: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<PointLabel>,
}

impl PointCloud {
    /// # Panics
    /// If a point has the wrong dimension or the labels and points differ in number.
    pub fn new(d: usize, points: Vec<Vec<f64>>, labels: Vec<PointLabel>) -> Self {
        assert_eq!(points.len(), labels.len(), "one label per point");
        assert!(points.iter().all(|p| p.len() == d), "points must live in R^{d}");
        Self { d, points, labels }
    }

    /// Unlabeled points, labelled as steps of a single walk.
    pub fn from_points(d: usize, points: Vec<Vec<f64>>) -> Self {
        let labels = (0..points.len())
            .map(|i| PointLabel::Walk { walk: 0, step: i + 1 })
            .collect();
        Self::new(d, points, labels)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[PointLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, label: PointLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max(dist(a, b));
            }
        }
        best
    }

    /// The cloud with every origin-labelled point removed.
    pub fn without_origin(&self) -> Self {
        let (points, labels) = self
            .points
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l != PointLabel::Origin)
            .map(|(p, l)| (p.clone(), *l))
            .unzip();
        Self::new(self.d, points, labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullError {
    /// Fewer than `d + 1` points.
    TooFewPoints,
    /// A point lies within tolerance of a candidate hyperplane.
    Degenerate,
}

impl fmt::Display for HullError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HullError::TooFewPoints => write!(f, "hull needs at least d + 1 points"),
            HullError::Degenerate => write!(f, "degenerate sample: a point is within tolerance of a candidate hyperplane"),
        }
    }
}

impl std::error::Error for HullError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Ascending point indices.
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    /// `normal · x = offset` on the facet.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    pub facets: Vec<Facet>,
    /// Tolerance used for the side tests, `1e-9 ×` diameter.
    pub tolerance: f64,
}

impl Hull {
    /// Ascending indices of the points lying on some facet.
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn has_facet(&self, vertices: &[usize]) -> bool {
        self.facets.iter().any(|f| f.vertices == vertices)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant by Gaussian elimination with partial pivoting; `m` is row-major `n × n`.
pub fn determinant(mut m: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))
            .expect("nonempty range");
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    m[row * n + k] -= factor * m[col * n + k];
                }
            }
        }
    }
    det
}

/// Normal of the hyperplane through `d` points in `ℝ^d` (not normalized):
/// the generalized cross product of the edge vectors.
fn hyperplane_normal(points: &[&[f64]], d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![1.0];
    }
    let base = points[0];
    let edges: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(x, y)| x - y).collect())
        .collect();
    (0..d)
        .map(|j| {
            let minor: Vec<f64> = edges
                .iter()
                .flat_map(|e| e.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| *x))
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(minor, d - 1)
        })
        .collect()
}

/// `k`-dimensional content of the simplex on `k + 1` points, `√det(EEᵀ)/k!`.
/// A single point has content 1.
pub fn simplex_content(points: &[&[f64]]) -> f64 {
    let k = points.len().saturating_sub(1);
    if k == 0 {
        return 1.0;
    }
    let base = points[0];
    let edges: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(x, y)| x - y).collect())
        .collect();
    let gram: Vec<f64> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| dot(&edges[i], &edges[j]))
        .collect();
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    determinant(gram, k).max(0.0).sqrt() / factorial
}

/// Next `k`-subset of `0..n` in lexicographic order.
fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All facets of the hull of `cloud`.
///
/// A `d`-subset is a facet iff all other points lie strictly on one side of
/// its hyperplane, beyond `ε = 1e-9 ×` diameter. A point within `ε` of any
/// candidate hyperplane (or an affinely dependent candidate) makes the sample
/// degenerate.
pub fn hull_facets(cloud: &PointCloud) -> Result<Hull, HullError> {
    let d = cloud.d();
    let n = cloud.len();
    if n < d + 1 {
        return Err(HullError::TooFewPoints);
    }
    let diameter = cloud.diameter();
    let tolerance = 1e-9 * diameter;
    if !(diameter > 0.0) {
        return Err(HullError::Degenerate);
    }
    let pts = cloud.points();
    let mut facets = Vec::new();
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        let chosen: Vec<&[f64]> = subset.iter().map(|&i| pts[i].as_slice()).collect();
        let raw = hyperplane_normal(&chosen, d);
        let norm = dot(&raw, &raw).sqrt();
        if !(norm > 1e-12 * diameter.powi(d as i32 - 1)) {
            return Err(HullError::Degenerate);
        }
        let mut normal: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let mut offset = dot(&normal, chosen[0]);
        let (mut above, mut below) = (false, false);
        for (i, p) in pts.iter().enumerate() {
            if subset.contains(&i) {
                continue;
            }
            let s = dot(&normal, p) - offset;
            if s.abs() <= tolerance {
                return Err(HullError::Degenerate);
            }
            if s > 0.0 {
                above = true;
            } else {
                below = true;
            }
        }
        if !(above && below) {
            if above {
                normal.iter_mut().for_each(|x| *x = -*x);
                offset = -offset;
            }
            facets.push(Facet {
                vertices: subset.clone(),
                normal,
                offset,
            });
        }
        if !next_subset(&mut subset, n) {
            break;
        }
    }
    Ok(Hull { facets, tolerance })
}

/// `d`-volume of the hull: cone volumes from the vertex centroid over all facets.
pub fn hull_volume(cloud: &PointCloud) -> Result<f64, HullError> {
    let hull = hull_facets(cloud)?;
    Ok(volume_of(cloud, &hull))
}

pub(crate) fn volume_of(cloud: &PointCloud, hull: &Hull) -> f64 {
    let d = cloud.d();
    let pts = cloud.points();
    let vertices = hull.vertices();
    let centroid: Vec<f64> = (0..d)
        .map(|c| vertices.iter().map(|&v| pts[v][c]).sum::<f64>() / vertices.len() as f64)
        .collect();
    let factorial: f64 = (1..=d).map(|i| i as f64).product();
    hull.facets
        .iter()
        .map(|f| {
            let m: Vec<f64> = f
                .vertices
                .iter()
                .flat_map(|&v| pts[v].iter().zip(&centroid).map(|(x, c)| x - c))
                .collect();
            determinant(m, d).abs() / factorial
        })
        .sum()
}

/// `(d-1)`-content of the hull boundary (the number of endpoints in `d = 1`).
pub fn hull_surface(cloud: &PointCloud) -> Result<f64, HullError> {
    let hull = hull_facets(cloud)?;
    Ok(surface_of(cloud, &hull))
}

pub(crate) fn surface_of(cloud: &PointCloud, hull: &Hull) -> f64 {
    let pts = cloud.points();
    hull.facets
        .iter()
        .map(|f| {
            let vs: Vec<&[f64]> = f.vertices.iter().map(|&v| pts[v].as_slice()).collect();
            simplex_content(&vs)
        })
        .sum()
}

/// Whether the origin lies strictly inside the hull of the cloud's non-origin points.
///
/// With fewer than `d + 1` such points the hull is lower-dimensional and the
/// answer is `false`.
pub fn origin_in_hull(cloud: &PointCloud) -> Result<bool, HullError> {
    let rest = cloud.without_origin();
    let hull = match hull_facets(&rest) {
        Ok(h) => h,
        Err(HullError::TooFewPoints) => return Ok(false),
        Err(e) => return Err(e),
    };
    let mut inside = true;
    for f in &hull.facets {
        let s = -f.offset;
        if s.abs() <= hull.tolerance {
            return Err(HullError::Degenerate);
        }
        if s > 0.0 {
            inside = false;
        }
    }
    Ok(inside)
}
