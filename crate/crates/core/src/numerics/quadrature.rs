//! Composite Simpson quadrature with panel doubling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Controls every `∫ … dr` evaluation in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Initial number of Simpson panels; a power of two, at least 16.
    pub panel_count: usize,
    /// Domain cutoff, in units of the integrand's Gaussian scale.
    pub truncation_multiplier: f64,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panel_count: 16,
            truncation_multiplier: 10.0,
            rel_tol: 1e-9,
            max_refinements: 16,
        }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.panel_count < 16 || !self.panel_count.is_power_of_two() {
            return Err(Error::Domain(format!(
                "panel_count must be a power of two >= 16, got {}",
                self.panel_count
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if !(self.truncation_multiplier > 0.0) || self.max_refinements == 0 {
            return Err(Error::Domain(
                "truncation_multiplier and max_refinements must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A converged numerical value together with its step-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCert {
    pub value: f64,
    /// Absolute difference between the last two refinement levels.
    pub estimated_abs_error: f64,
    pub refinements_used: usize,
}

impl ConvergenceCert {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            estimated_abs_error: 0.0,
            refinements_used: 0,
        }
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Composite Simpson on `[a, b]`, doubling the panel count until the relative
/// change drops below `config.rel_tol`.
///
/// `eval` receives batches of abscissae and must return the integrand at each,
/// which lets callers evaluate the new nodes of a level in parallel.
pub fn simpson_doubling<F, E>(mut eval: F, a: f64, b: f64, config: &QuadratureConfig) -> Result<ConvergenceCert, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    E: From<Error>,
{
    config.validate()?;
    if a == b {
        return Ok(ConvergenceCert::exact(0.0));
    }
    let mut panels = config.panel_count;
    let mut h = (b - a) / panels as f64;
    let nodes: Vec<f64> = (0..=panels).map(|i| a + i as f64 * h).collect();
    let values = eval(&nodes)?;
    let ends = values[0] + values[panels];
    let mut odd = KahanSum::new();
    let mut even = KahanSum::new();
    for (i, v) in values.iter().enumerate().take(panels).skip(1) {
        if i % 2 == 1 {
            odd.add(*v);
        } else {
            even.add(*v);
        }
    }
    let mut interior = odd.value() + even.value();
    let mut estimate = h / 3.0 * (ends + 4.0 * odd.value() + 2.0 * even.value());

    for refinement in 1..=config.max_refinements {
        panels *= 2;
        h /= 2.0;
        let fresh: Vec<f64> = (0..panels / 2).map(|j| a + (2 * j + 1) as f64 * h).collect();
        let fresh_sum: KahanSum = eval(&fresh)?.into_iter().collect();
        let even_sum = interior;
        let odd_sum = fresh_sum.value();
        interior = even_sum + odd_sum;
        let next = h / 3.0 * (ends + 4.0 * odd_sum + 2.0 * even_sum);
        let change = (next - estimate).abs();
        if change <= config.rel_tol * next.abs() || change == 0.0 {
            return Ok(ConvergenceCert {
                value: next,
                estimated_abs_error: change,
                refinements_used: refinement,
            });
        }
        if refinement == config.max_refinements {
            return Err(Error::RefinementFailure {
                previous: estimate,
                last: next,
                refinements: refinement,
            }
            .into());
        }
        estimate = next;
    }
    unreachable!("max_refinements is validated to be positive")
}

/// Scalar-closure convenience wrapper around [`simpson_doubling`].
pub fn simpson<F>(f: F, a: f64, b: f64, config: &QuadratureConfig) -> Result<ConvergenceCert>
where
    F: Fn(f64) -> f64,
{
    simpson_doubling(|xs: &[f64]| Ok::<_, Error>(xs.iter().map(|&x| f(x)).collect()), a, b, config)
}
