//! Monte Carlo oracle: sample walk ensembles, take their hulls by brute force,
//! and average per-sample statistics.
//!
//! Replications are split across `workers` independent ChaCha streams of one
//! seed (stream `w` for worker `w`, sample counts split as evenly as possible),
//! and per-worker accumulators are merged in worker order. A run is therefore
//! a pure function of `(seed, workers, samples)`, whether or not the workers
//! actually run in parallel.

mod hull;
pub mod simplex;

pub use hull::{
    determinant, hull_facets, hull_surface, hull_volume, origin_in_hull, simplex_content, Facet, Hull, HullError,
    PointCloud, PointLabel,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::enumeration::{FacetSpec, WalkEnsemble};
use crate::error::{Error, Result};

/// Share of degenerate discards above which an estimate is flagged invalid.
pub const MAX_DISCARD_RATE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepDistribution {
    StandardGaussian,
    /// Uniform on `[-halfwidth, halfwidth]^d`.
    UniformCube { halfwidth: f64 },
    /// Uniform direction times an exponential radius of mean `scale`.
    IsotropicLaplaceRadius { scale: f64 },
}

impl StepDistribution {
    pub fn is_gaussian(&self) -> bool {
        matches!(self, StepDistribution::StandardGaussian)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            StepDistribution::StandardGaussian => {
                for x in out.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
            }
            StepDistribution::UniformCube { halfwidth } => {
                for x in out.iter_mut() {
                    *x = rng.random_range(-halfwidth..halfwidth);
                }
            }
            StepDistribution::IsotropicLaplaceRadius { scale } => {
                let radius: f64 = Exp1.sample(rng);
                loop {
                    for x in out.iter_mut() {
                        *x = StandardNormal.sample(rng);
                    }
                    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        out.iter_mut().for_each(|x| *x *= scale * radius / norm);
                        break;
                    }
                }
            }
        }
    }
}

/// Positions of every walk, in walk order, after the origin when it is adjoined.
pub fn sample_ensemble<R: Rng + ?Sized>(ensemble: &WalkEnsemble, dist: &StepDistribution, rng: &mut R) -> PointCloud {
    let d = ensemble.d();
    let mut points = Vec::with_capacity(ensemble.point_count());
    let mut labels = Vec::with_capacity(ensemble.point_count());
    if ensemble.include_origin() {
        points.push(vec![0.0; d]);
        labels.push(PointLabel::Origin);
    }
    let mut step = vec![0.0; d];
    for (walk, &n) in ensemble.lengths().iter().enumerate() {
        let mut pos = vec![0.0; d];
        for s in 1..=n {
            dist.sample_into(rng, &mut step);
            pos.iter_mut().zip(&step).for_each(|(p, x)| *p += x);
            points.push(pos.clone());
            labels.push(PointLabel::Walk { walk, step: s });
        }
    }
    PointCloud::new(d, points, labels)
}

/// Point indices of a spec's vertices in clouds drawn by [`sample_ensemble`].
pub fn spec_point_indices(spec: &FacetSpec, ensemble: &WalkEnsemble) -> Vec<usize> {
    let shift = usize::from(ensemble.include_origin());
    let mut out = Vec::with_capacity(spec.dimension());
    if spec.with_origin_vertex() {
        out.push(0);
    }
    let mut start = shift;
    for (indices, &n) in spec.indices().iter().zip(ensemble.lengths()) {
        out.extend(indices.iter().map(|&i| start + i - 1));
        start += n;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Statistic {
    FacetCount,
    /// Facets having the origin as a vertex.
    OriginFacetCount,
    Surface,
    Volume,
    FacetIndicator(FacetSpec),
    /// Indicator that the origin lies inside the hull of the walk positions.
    OriginAbsorbed,
    VertexCount,
}

impl Statistic {
    pub fn name(&self) -> String {
        match self {
            Statistic::FacetCount => "facets".into(),
            Statistic::OriginFacetCount => "origin-facets".into(),
            Statistic::Surface => "surface".into(),
            Statistic::Volume => "volume".into(),
            Statistic::FacetIndicator(spec) => format!("facet {spec}"),
            Statistic::OriginAbsorbed => "origin-absorbed".into(),
            Statistic::VertexCount => "vertices".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 100 {
            return Err(Error::Domain(format!("need at least 100 samples, got {}", self.samples)));
        }
        if self.workers == 0 {
            return Err(Error::Domain("need at least one worker".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    /// Accepted replications.
    pub samples: usize,
    pub degenerate_discards: usize,
    pub seed: u64,
}

impl McEstimate {
    /// False when more than [`MAX_DISCARD_RATE`] of the draws were degenerate.
    pub fn is_valid(&self) -> bool {
        self.samples > 0 && (self.degenerate_discards as f64) < MAX_DISCARD_RATE * (self.samples + self.degenerate_discards) as f64
    }

    /// `(mean - expected) / stderr`. A zero standard error counts as exact
    /// agreement when the mean matches to `1e-9` relative.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = self.mean - expected;
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff.abs() <= 1e-9 * expected.abs().max(1.0) {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

/// Welford accumulator; `merge` is Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Running) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }
}

/// Marker returned by a replication that must be discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Discard;

impl From<HullError> for Discard {
    fn from(_: HullError) -> Self {
        Discard
    }
}

/// Runs `samples` replications of `f`, each writing `outputs` values, and
/// returns one estimate per output.
pub fn run_replications<F>(opts: &McOptions, outputs: usize, f: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<(), Discard> + Sync,
{
    opts.validate()?;
    let work = |w: usize| {
        let count = opts.samples / opts.workers + usize::from(w < opts.samples % opts.workers);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(w as u64);
        let mut acc = vec![Running::default(); outputs];
        let mut discards = 0;
        let mut buf = vec![0.0; outputs];
        for _ in 0..count {
            match f(&mut rng, &mut buf) {
                Ok(()) => acc.iter_mut().zip(&buf).for_each(|(a, &x)| a.push(x)),
                Err(Discard) => discards += 1,
            }
        }
        (acc, discards)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(Vec<Running>, usize)> = {
        use rayon::prelude::*;
        (0..opts.workers).into_par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(Vec<Running>, usize)> = (0..opts.workers).map(work).collect();

    let mut total = vec![Running::default(); outputs];
    let mut discards = 0;
    for (acc, disc) in &parts {
        total.iter_mut().zip(acc).for_each(|(t, a)| t.merge(a));
        discards += disc;
    }
    Ok(total
        .iter()
        .map(|r| {
            let variance = if r.n > 1 { r.m2 / (r.n - 1) as f64 } else { 0.0 };
            McEstimate {
                mean: r.mean,
                stderr: (variance / r.n.max(1) as f64).sqrt(),
                samples: r.n,
                degenerate_discards: discards,
                seed: opts.seed,
            }
        })
        .collect())
}

/// Per-sample values of `statistics` on one cloud.
pub fn evaluate_statistics(
    cloud: &PointCloud,
    ensemble: &WalkEnsemble,
    statistics: &[Statistic],
    out: &mut [f64],
) -> std::result::Result<(), HullError> {
    let needs_hull = statistics.iter().any(|s| !matches!(s, Statistic::OriginAbsorbed));
    let hull = if needs_hull { Some(hull_facets(cloud)?) } else { None };
    for (stat, slot) in statistics.iter().zip(out.iter_mut()) {
        let hull = hull.as_ref();
        *slot = match stat {
            Statistic::FacetCount => hull.expect("hull computed").facets.len() as f64,
            Statistic::OriginFacetCount => {
                let origin = cloud.index_of(PointLabel::Origin);
                hull.expect("hull computed")
                    .facets
                    .iter()
                    .filter(|f| origin.is_some_and(|o| f.vertices.contains(&o)))
                    .count() as f64
            }
            Statistic::Surface => hull::surface_of(cloud, hull.expect("hull computed")),
            Statistic::Volume => hull::volume_of(cloud, hull.expect("hull computed")),
            Statistic::FacetIndicator(spec) => {
                let mut idx = spec_point_indices(spec, ensemble);
                idx.sort_unstable();
                f64::from(u8::from(hull.expect("hull computed").has_facet(&idx)))
            }
            Statistic::OriginAbsorbed => f64::from(u8::from(origin_in_hull(cloud)?)),
            Statistic::VertexCount => hull.expect("hull computed").vertices().len() as f64,
        };
    }
    Ok(())
}

/// Estimates of several statistics from the same replications.
pub fn estimate_many(
    ensemble: &WalkEnsemble,
    dist: &StepDistribution,
    statistics: &[Statistic],
    opts: &McOptions,
) -> Result<Vec<McEstimate>> {
    for stat in statistics {
        if let Statistic::FacetIndicator(spec) = stat {
            spec.validate_for(ensemble)?;
        }
    }
    run_replications(opts, statistics.len(), |rng, out| {
        let cloud = sample_ensemble(ensemble, dist, rng);
        evaluate_statistics(&cloud, ensemble, statistics, out).map_err(Discard::from)
    })
}

pub fn estimate(
    ensemble: &WalkEnsemble,
    dist: &StepDistribution,
    statistic: Statistic,
    opts: &McOptions,
) -> Result<McEstimate> {
    Ok(estimate_many(ensemble, dist, &[statistic], opts)?.remove(0))
}

/// Partial sums of `n` standard Gaussian steps.
fn gaussian_walk<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut s = 0.0;
    (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            s += x;
            s
        })
        .collect()
}

/// A Gaussian bridge from 0 to `r` in `n` steps: `B_k = S_k - (k/n) S_n + (k/n) r`.
pub fn sample_bridge<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    let s = gaussian_walk(rng, n);
    let end = s[n - 1];
    let nf = n as f64;
    let mut b: Vec<f64> = s
        .iter()
        .enumerate()
        .map(|(k, sk)| {
            let t = (k + 1) as f64 / nf;
            sk - t * end + t * r
        })
        .collect();
    b[n - 1] = r;
    b
}

/// Frequency of `{S_k ≤ r, k ≤ n}`.
pub fn mc_persistence_p(n: usize, r: f64, opts: &McOptions) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::Domain("persistence needs n >= 1".into()));
    }
    Ok(run_replications(opts, 1, |rng, out| {
        out[0] = f64::from(u8::from(gaussian_walk(rng, n).iter().all(|&s| s <= r)));
        Ok(())
    })?
    .remove(0))
}

/// Frequency of `{B_k ≤ r, k < n}` for a bridge ending at `r`.
pub fn mc_persistence_q(n: usize, r: f64, opts: &McOptions) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::Domain("persistence needs n >= 1".into()));
    }
    Ok(run_replications(opts, 1, |rng, out| {
        let b = sample_bridge(rng, n, r);
        out[0] = f64::from(u8::from(b[..n - 1].iter().all(|&x| x <= r)));
        Ok(())
    })?
    .remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ens(d: usize, lengths: &[usize], origin: bool) -> WalkEnsemble {
        WalkEnsemble::new(d, lengths.to_vec(), origin).unwrap()
    }

    #[test]
    fn sampling_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = ens(2, &[2], false);
        let c = sample_ensemble(&e, &StepDistribution::StandardGaussian, &mut rng);
        assert_eq!(c.len(), 2);
        assert_eq!(c.labels()[1], PointLabel::Walk { walk: 0, step: 2 });
        let e = ens(3, &[1, 1], true);
        let c = sample_ensemble(&e, &StepDistribution::StandardGaussian, &mut rng);
        assert_eq!(c.len(), 3);
        assert_eq!(c.points()[0], vec![0.0; 3]);
        let again = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_ensemble(&e, &StepDistribution::UniformCube { halfwidth: 1.0 }, &mut rng)
        };
        assert_eq!(again(7), again(7));
    }

    #[test]
    fn spec_indices_follow_layout() {
        let e = ens(3, &[2, 3], true);
        let spec = FacetSpec::parse("2;1", &e).unwrap();
        assert_eq!(spec_point_indices(&spec, &e), vec![0, 2, 3]);
        let e = ens(2, &[2, 3], false);
        let spec = FacetSpec::parse("1;3", &e).unwrap();
        assert_eq!(spec_point_indices(&spec, &e), vec![0, 4]);
    }

    #[test]
    fn triangle_always_has_three_facets() {
        let e = ens(2, &[3], false);
        let est = estimate(&e, &StepDistribution::StandardGaussian, Statistic::FacetCount, &McOptions::new(1000, 3)).unwrap();
        assert_eq!(est.mean, 3.0);
        assert_eq!(est.stderr, 0.0);
        assert!(est.is_valid());
    }

    #[test]
    fn deterministic_given_seed_and_workers() {
        let e = ens(2, &[2, 2], true);
        let opts = McOptions::new(2000, 11).with_workers(3);
        let stats = [Statistic::FacetCount, Statistic::Volume];
        let a = estimate_many(&e, &StepDistribution::StandardGaussian, &stats, &opts).unwrap();
        let b = estimate_many(&e, &StepDistribution::StandardGaussian, &stats, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].samples + a[0].degenerate_discards, 2000);
    }

    #[test]
    fn bridge_ends_at_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let b = sample_bridge(&mut rng, 6, 0.7);
            assert!((b[5] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_runs() {
        assert!(mc_persistence_p(2, 0.0, &McOptions::new(10, 1)).is_err());
        assert!(mc_persistence_p(2, 0.0, &McOptions::new(100, 1).with_workers(0)).is_err());
    }

    #[test]
    fn running_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3).collect();
        let mut all = Running::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Running::default(), Running::default());
        xs[..17].iter().for_each(|&x| a.push(x));
        xs[17..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.m2 - all.m2).abs() < 1e-9);
    }
}
