//! Direct Monte Carlo estimators for the simplex moments of
//! [`crate::simplex_moments`]: build the simplex, measure it, average `|·|^p`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{determinant, run_replications, simplex_content, McEstimate, McOptions};
use crate::enumeration::FacetSpec;
use crate::error::{Error, Result};
use crate::simplex_moments::{WalkSimplexQuery, WeightedSimplexQuery};

fn gaussian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

fn content_moment(points: &[Vec<f64>], p: f64) -> f64 {
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    simplex_content(&refs).powf(p)
}

fn single(opts: &McOptions, f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync) -> Result<McEstimate> {
    Ok(run_replications(opts, 1, |rng, out| {
        out[0] = f(rng);
        Ok(())
    })?
    .remove(0))
}

pub fn mc_weighted_simplex_moment(q: &WeightedSimplexQuery, opts: &McOptions) -> Result<McEstimate> {
    single(opts, |rng| {
        let pts: Vec<Vec<f64>> = q.sigmas.iter().map(|&s| gaussian(rng, q.d, s)).collect();
        content_moment(&pts, q.p)
    })
}

/// The restarted weighted walks `Y_0, …, Y_d`; `σ_0 = 0` puts `Y_0` at the origin.
fn walk_vertices<R: Rng + ?Sized>(rng: &mut R, q: &WalkSimplexQuery) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(q.d + 1);
    for k in 0..=q.d {
        let step = gaussian(rng, q.d, q.sigmas[k]);
        let point = if q.restart_indices.contains(&k) {
            step
        } else {
            pts[k - 1].iter().zip(&step).map(|(a, b)| a + b).collect()
        };
        pts.push(point);
    }
    pts
}

pub fn mc_walk_simplex_moment(q: &WalkSimplexQuery, opts: &McOptions) -> Result<McEstimate> {
    if q.sigmas.len() != q.d + 1 || q.restart_indices.first() != Some(&0) {
        return Err(Error::Domain("walk simplex needs d + 1 weights and restart index 0".into()));
    }
    single(opts, |rng| content_moment(&walk_vertices(rng, q), q.p))
}

/// `E|conv(0, X_1, …, X_k)|^p` in `ℝ^d`.
pub fn mc_gaussian_simplex_moment(d: usize, k: usize, p: f64, opts: &McOptions) -> Result<McEstimate> {
    single(opts, |rng| {
        let mut pts = vec![vec![0.0; d]];
        pts.extend((0..k).map(|_| gaussian(rng, d, 1.0)));
        content_moment(&pts, p)
    })
}

/// `E det^{p/2}(AAᵀ)` for a `d × (d+1)` Gaussian matrix.
pub fn mc_parallelotope_moment(d: usize, p: f64, opts: &McOptions) -> Result<McEstimate> {
    single(opts, |rng| {
        let rows: Vec<Vec<f64>> = (0..d).map(|_| gaussian(rng, d + 1, 1.0)).collect();
        let gram: Vec<f64> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum())
            .collect();
        determinant(gram, d).max(0.0).powf(p / 2.0)
    })
}

/// `E|conv(0, X_1, …, X_k, σ_1 Y_1, …, σ_l Y_l)|^p` with all `X_i`, `Y_j`
/// independent standard Gaussians in `ℝ^d`.
pub fn mc_cone_simplex_moment(d: usize, k: usize, y_sigmas: &[f64], p: f64, opts: &McOptions) -> Result<McEstimate> {
    single(opts, |rng| {
        let mut pts = vec![vec![0.0; d]];
        pts.extend((0..k).map(|_| gaussian(rng, d, 1.0)));
        pts.extend(y_sigmas.iter().map(|&s| gaussian(rng, d, s)));
        content_moment(&pts, p)
    })
}

/// `E|conv P S|^p`: the spec's vertices taken from Gaussian walks in `ℝ^{d-1}`,
/// plus the origin for an origin spec.
pub fn mc_projected_simplex_moment(spec: &FacetSpec, p: f64, opts: &McOptions) -> Result<McEstimate> {
    let d = spec.dimension();
    if d == 0 {
        return Err(Error::InvalidSpec("spec has no vertices".into()));
    }
    let dim = d - 1;
    single(opts, |rng| {
        let mut pts = Vec::with_capacity(d);
        if spec.with_origin_vertex() {
            pts.push(vec![0.0; dim]);
        }
        for indices in spec.indices() {
            let mut pos = vec![0.0; dim];
            let mut at = 0;
            for &i in indices {
                while at < i {
                    let step = gaussian(rng, dim, 1.0);
                    pos.iter_mut().zip(&step).for_each(|(a, b)| *a += b);
                    at += 1;
                }
                pts.push(pos.clone());
            }
        }
        content_moment(&pts, p)
    })
}
