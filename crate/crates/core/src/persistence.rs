//! Gaussian persistence probabilities.
//!
//! For iid standard Gaussian steps with partial sums `S_k`,
//!
//! * `p_n(r) = P[S_1 ≤ r, …, S_n ≤ r]`
//! * `q_n(r) = P[S_1 ≤ r, …, S_{n-1} ≤ r | S_n = r]`
//!
//! Both come out of one sweep of the killed sub-density recursion
//! `f_1 = φ·1{x ≤ r}`, `f_{k+1}(x) = 1{x ≤ r} ∫ f_k(y) φ(x - y) dy`:
//! `p_k(r) = ∫ f_k` and `q_k(r) = ∫ f_{k-1}(y) φ(r - y) dy / (φ(r/√k)/√k)`.
//!
//! The recursion is discretized with a Nyström scheme on composite
//! Gauss-Legendre panels over `[min(r, 0) - H√n, r]`. Every `f_k` is analytic on
//! that interval (the barrier only truncates it), so the scheme converges
//! spectrally in the panel width; the width is halved until two successive
//! sweeps agree to `abs_tol`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, std_normal_cdf, std_normal_pdf, ConvergenceCert, KahanSum};

/// Numerical knobs of the persistence recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceConfig {
    /// Initial Gauss-Legendre panel width (the grid step), halved on refinement.
    pub grid_step: f64,
    pub nodes_per_panel: usize,
    /// `H`: the grid extends `H√n` below `min(r, 0)`.
    pub domain_halfwidth_multiplier: f64,
    pub abs_tol: f64,
    pub max_refinements: usize,
}

impl Default for PersistenceConfig {
    fn default() -> Self {
        Self {
            grid_step: 2.0,
            nodes_per_panel: 8,
            domain_halfwidth_multiplier: 8.0,
            abs_tol: 1e-9,
            max_refinements: 8,
        }
    }
}

/// `p_k(r)` and `q_k(r)` for `k = 1..=n_max` at a single barrier `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceRow {
    pub r: f64,
    /// `p[k-1] = p_k(r)`.
    pub p: Vec<f64>,
    /// `q[k-1] = q_k(r)`; NaN where `r` is out of range for the bridge.
    pub q: Vec<f64>,
    pub estimated_abs_error: f64,
    pub refinements_used: usize,
}

/// Kernel entries beyond this separation are below 1e-22 and dropped.
const KERNEL_CUTOFF: f64 = 10.0;

/// Evaluates and caches persistence rows per barrier value.
///
/// The cache sits behind a lock; every row is a deterministic function of
/// `(r, n_max, config)`, so concurrent readers see identical values no matter
/// which thread filled an entry.
#[derive(Debug)]
pub struct PersistenceEvaluator {
    n_max: usize,
    config: PersistenceConfig,
    cache: RwLock<HashMap<u64, Arc<PersistenceRow>>>,
}

impl PersistenceEvaluator {
    pub fn new(n_max: usize, config: PersistenceConfig) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Domain("persistence needs n_max >= 1".into()));
        }
        if !(config.grid_step > 0.0) || config.nodes_per_panel == 0 || !(config.domain_halfwidth_multiplier > 0.0) {
            return Err(Error::Domain(
                "grid_step, nodes_per_panel and domain_halfwidth_multiplier must be positive".into(),
            ));
        }
        Ok(Self {
            n_max,
            config,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn with_defaults(n_max: usize) -> Result<Self> {
        Self::new(n_max, PersistenceConfig::default())
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn config(&self) -> &PersistenceConfig {
        &self.config
    }

    /// Largest `|r|` for which `q_n(r)` is evaluated.
    pub fn bridge_limit(&self, n: usize) -> f64 {
        self.config.domain_halfwidth_multiplier * (n as f64).sqrt()
    }

    pub fn cached_rows(&self) -> usize {
        self.cache.read().expect("cache lock poisoned").len()
    }

    pub fn row(&self, r: f64) -> Result<Arc<PersistenceRow>> {
        if !r.is_finite() {
            return Err(Error::Domain(format!("barrier must be finite, got {r}")));
        }
        let key = canonical_key(r);
        if let Some(row) = self.cache.read().expect("cache lock poisoned").get(&key) {
            return Ok(Arc::clone(row));
        }
        let row = Arc::new(self.compute_row(r)?);
        let mut cache = self.cache.write().expect("cache lock poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(row)))
    }

    /// Fills the cache for every barrier in `rs`, in parallel when enabled.
    pub fn prefetch(&self, rs: &[f64]) -> Result<()> {
        let missing: Vec<f64> = {
            let cache = self.cache.read().expect("cache lock poisoned");
            let mut seen = std::collections::HashSet::new();
            rs.iter()
                .copied()
                .filter(|&r| !cache.contains_key(&canonical_key(r)) && seen.insert(canonical_key(r)))
                .collect()
        };
        if missing.is_empty() {
            return Ok(());
        }
        #[cfg(feature = "parallel")]
        let rows: Result<Vec<PersistenceRow>> = {
            use rayon::prelude::*;
            missing.par_iter().map(|&r| self.compute_row(r)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let rows: Result<Vec<PersistenceRow>> = missing.iter().map(|&r| self.compute_row(r)).collect();
        let mut cache = self.cache.write().expect("cache lock poisoned");
        for row in rows? {
            cache.entry(canonical_key(row.r)).or_insert_with(|| Arc::new(row));
        }
        Ok(())
    }

    pub fn p(&self, n: usize, r: f64) -> Result<ConvergenceCert> {
        self.check_n(n)?;
        let row = self.row(r)?;
        Ok(ConvergenceCert {
            value: row.p[n - 1],
            estimated_abs_error: row.estimated_abs_error,
            refinements_used: row.refinements_used,
        })
    }

    pub fn q(&self, n: usize, r: f64) -> Result<ConvergenceCert> {
        self.check_n(n)?;
        if n == 1 {
            return Ok(ConvergenceCert::exact(1.0));
        }
        let limit = self.bridge_limit(n);
        if r.abs() > limit {
            return Err(Error::OutOfRange { n, r, limit });
        }
        let row = self.row(r)?;
        Ok(ConvergenceCert {
            value: row.q[n - 1],
            estimated_abs_error: row.estimated_abs_error,
            refinements_used: row.refinements_used,
        })
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_max {
            return Err(Error::Domain(format!(
                "persistence index n = {n} outside 1..={}",
                self.n_max
            )));
        }
        Ok(())
    }

    fn compute_row(&self, r: f64) -> Result<PersistenceRow> {
        let mut width = self.config.grid_step;
        let (mut p, mut q) = self.sweep(r, width);
        for refinement in 1..=self.config.max_refinements {
            width /= 2.0;
            let (p2, q2) = self.sweep(r, width);
            let change = p
                .iter()
                .zip(&p2)
                .chain(q.iter().zip(&q2))
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change <= self.config.abs_tol {
                return Ok(PersistenceRow {
                    r,
                    p: p2,
                    q: q2,
                    estimated_abs_error: change,
                    refinements_used: refinement,
                });
            }
            if refinement == self.config.max_refinements {
                let worst = p
                    .iter()
                    .zip(&p2)
                    .max_by(|a, b| (a.0 - a.1).abs().total_cmp(&(b.0 - b.1).abs()))
                    .map(|(a, b)| (*a, *b))
                    .unwrap_or((f64::NAN, f64::NAN));
                return Err(Error::RefinementFailure {
                    previous: worst.0,
                    last: worst.1,
                    refinements: refinement,
                });
            }
            p = p2;
            q = q2;
        }
        unreachable!("loop returns on its last iteration")
    }

    /// One pass of the killed recursion with panels of (at most) `width`.
    fn sweep(&self, r: f64, width: f64) -> (Vec<f64>, Vec<f64>) {
        let n_max = self.n_max;
        let lower = r.min(0.0) - self.config.domain_halfwidth_multiplier * (n_max as f64).sqrt();
        let span = r - lower;
        let panels = (span / width).ceil().max(1.0) as usize;
        let panel = span / panels as f64;
        let (gl_x, gl_w) = gauss_legendre(self.config.nodes_per_panel);
        let mut xs = Vec::with_capacity(panels * gl_x.len());
        let mut ws = Vec::with_capacity(panels * gl_x.len());
        for k in 0..panels {
            let left = lower + k as f64 * panel;
            for (x, w) in gl_x.iter().zip(&gl_w) {
                xs.push(left + 0.5 * panel * (x + 1.0));
                ws.push(0.5 * panel * w);
            }
        }
        let g = xs.len();

        let mut p = vec![f64::NAN; n_max];
        let mut q = vec![f64::NAN; n_max];
        p[0] = std_normal_cdf(r);
        q[0] = 1.0;
        if n_max == 1 {
            return (p, q);
        }

        // banded kernel: band[i] = (first column, weights w_j φ(x_i - x_j))
        let mut band: Vec<(usize, Vec<f64>)> = Vec::with_capacity(g);
        let mut start = 0;
        for i in 0..g {
            while xs[i] - xs[start] > KERNEL_CUTOFF {
                start += 1;
            }
            let mut end = start;
            while end < g && xs[end] - xs[i] <= KERNEL_CUTOFF {
                end += 1;
            }
            let row = (start..end).map(|j| ws[j] * std_normal_pdf(xs[i] - xs[j])).collect();
            band.push((start, row));
        }

        let mut density: Vec<f64> = xs.iter().map(|&x| std_normal_pdf(x)).collect();
        let mut next = vec![0.0; g];
        for k in 2..=n_max {
            if r.abs() <= self.bridge_limit(k) {
                let landing: KahanSum = (0..g)
                    .map(|j| ws[j] * density[j] * std_normal_pdf(r - xs[j]))
                    .collect();
                let kf = k as f64;
                q[k - 1] = landing.value() / (std_normal_pdf(r / kf.sqrt()) / kf.sqrt());
            }
            for (i, (first, weights)) in band.iter().enumerate() {
                next[i] = weights
                    .iter()
                    .zip(&density[*first..])
                    .map(|(w, f)| w * f)
                    .sum();
            }
            std::mem::swap(&mut density, &mut next);
            let mass: KahanSum = ws.iter().zip(&density).map(|(w, f)| w * f).collect();
            p[k - 1] = mass.value();
        }
        (p, q)
    }
}

fn canonical_key(r: f64) -> u64 {
    // +0.0 and -0.0 share a row
    if r == 0.0 {
        0
    } else {
        r.to_bits()
    }
}

/// `p_n(r)` with default numerical settings.
pub fn persistence_p(n: usize, r: f64) -> Result<ConvergenceCert> {
    PersistenceEvaluator::with_defaults(n.max(1))?.p(n, r)
}

/// `q_n(r)` with default numerical settings.
pub fn persistence_q(n: usize, r: f64) -> Result<ConvergenceCert> {
    PersistenceEvaluator::with_defaults(n.max(1))?.q(n, r)
}

/// `(∫_ℝ e^{-r²/(2i)} q_i(r) dr, ∫_0^∞ e^{-r²/(2i)} q_i(r) dr)`.
///
/// By total probability these equal `√(2πi) p_{i-1}(0)` and `√(2πi) p_i(0)`,
/// which makes the pair a self-test of the bridge evaluation.
pub fn persistence_integral_identity_check(
    i: usize,
    quad: &crate::numerics::QuadratureConfig,
) -> Result<(f64, f64)> {
    if i == 0 {
        return Err(Error::Domain("identity check needs i >= 1".into()));
    }
    let evaluator = PersistenceEvaluator::with_defaults(i)?;
    let limit = evaluator.bridge_limit(i);
    let cutoff = (quad.truncation_multiplier * (i as f64).sqrt()).min(limit);
    let integrate = |lower: f64| {
        crate::numerics::simpson_doubling(
            |rs: &[f64]| -> Result<Vec<f64>> {
                evaluator.prefetch(rs)?;
                rs.iter()
                    .map(|&r| Ok((-r * r / (2.0 * i as f64)).exp() * evaluator.q(i, r)?.value))
                    .collect()
            },
            lower,
            cutoff,
            quad,
        )
    };
    let full = integrate(-cutoff)?;
    let half = integrate(0.0)?;
    Ok((full.value, half.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{double_factorial_ratio, rational_to_f64, simpson, QuadratureConfig};

    #[test]
    fn first_step_is_exact() {
        for r in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            assert_eq!(persistence_p(1, r).unwrap().value, std_normal_cdf(r));
            assert_eq!(persistence_q(1, r).unwrap().value, 1.0);
        }
    }

    #[test]
    fn sparre_andersen_values_at_zero() {
        assert!((persistence_p(2, 0.0).unwrap().value - 0.375).abs() < 1e-10);
        assert!((persistence_p(3, 0.0).unwrap().value - 0.3125).abs() < 1e-10);
        assert!((persistence_q(5, 0.0).unwrap().value - 0.2).abs() < 1e-10);
    }

    #[test]
    fn two_step_bridge_closed_form() {
        // N_1 | S_2 = r ~ N(r/2, 1/2), so q_2(r) = Φ(r/√2)
        for r in [-2.0, -0.3, 1.0, 2.5] {
            let want = std_normal_cdf(r / std::f64::consts::SQRT_2);
            assert!((persistence_q(2, r).unwrap().value - want).abs() < 1e-10, "r={r}");
        }
    }

    #[test]
    fn two_step_matches_nested_quadrature() {
        let cfg = QuadratureConfig::default();
        for r in [-2.0, 0.0, 1.0, 3.0] {
            let nested = simpson(|x| std_normal_cdf(r - x) * std_normal_pdf(x), r - 12.0, r, &cfg)
                .unwrap()
                .value;
            assert!((persistence_p(2, r).unwrap().value - nested).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn rows_are_monotone_and_bounded() {
        let ev = PersistenceEvaluator::with_defaults(10).unwrap();
        let mut prev: Option<Arc<PersistenceRow>> = None;
        for r in -3..=3 {
            let row = ev.row(r as f64).unwrap();
            for k in 0..10 {
                assert!((-1e-12..=1.0 + 1e-9).contains(&row.p[k]));
                if k > 0 {
                    assert!(row.p[k] <= row.p[k - 1] + 1e-12);
                }
                if row.q[k].is_finite() {
                    assert!((-1e-12..=1.0 + 1e-9).contains(&row.q[k]));
                }
                if let Some(prev) = &prev {
                    assert!(row.p[k] + 1e-12 >= prev.p[k]);
                }
            }
            prev = Some(row);
        }
    }

    #[test]
    fn exact_anchors_up_to_twenty() {
        let ev = PersistenceEvaluator::with_defaults(20).unwrap();
        for n in 1..=20 {
            let want = rational_to_f64(&double_factorial_ratio(n as u64));
            assert!((ev.p(n, 0.0).unwrap().value - want).abs() < 1e-8);
            assert!((ev.q(n, 0.0).unwrap().value - 1.0 / n as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn bridge_guard() {
        let ev = PersistenceEvaluator::with_defaults(4).unwrap();
        assert!(matches!(ev.q(4, 17.0), Err(Error::OutOfRange { n: 4, .. })));
        assert!(ev.q(4, 15.9).is_ok());
        assert!(ev.p(4, 40.0).is_ok());
        assert!(ev.p(5, 0.0).is_err());
    }

    #[test]
    fn prefetch_populates_cache() {
        let ev = PersistenceEvaluator::with_defaults(3).unwrap();
        ev.prefetch(&[0.0, -0.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(ev.cached_rows(), 3);
        let direct = PersistenceEvaluator::with_defaults(3).unwrap().row(1.0).unwrap();
        assert_eq!(*ev.row(1.0).unwrap(), *direct);
    }

    #[test]
    fn identity_check_small_i() {
        let quad = QuadratureConfig::default();
        let (full, half) = persistence_integral_identity_check(1, &quad).unwrap();
        let s = (2.0 * std::f64::consts::PI).sqrt();
        assert!((full - s).abs() < 1e-9);
        assert!((half - s / 2.0).abs() < 1e-9);
        let (full, half) = persistence_integral_identity_check(2, &quad).unwrap();
        let sp = std::f64::consts::PI.sqrt();
        assert!((full - sp).abs() < 1e-8);
        assert!((half - 0.75 * sp).abs() < 1e-8);
    }
}
