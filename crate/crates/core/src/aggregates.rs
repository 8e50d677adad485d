//! Expected facet counts, surface area and volume of the whole hull, and the
//! closed-form special cases for a single walk and for Gaussian polytopes.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::enumeration::WalkEnsemble;
use crate::error::{Error, Result};
use crate::facet_formulas::{origin_facet_sum, sum_quantities, FacetCalculator, QuantityKind};
use crate::numerics::{
    binomial, ln_gamma, phi_power_integral, rational_to_f64, BigInt, BigRational, ConvergenceCert, Domain,
    QuadratureConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    FacetCount,
    OriginFacetCount,
    SurfaceArea,
    Volume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullStatistic {
    pub ensemble: WalkEnsemble,
    pub kind: StatisticKind,
    pub value: f64,
    pub exact: Option<BigRational>,
    /// Number of facet specs summed.
    pub term_count: usize,
    /// Set when the hull is not full-dimensional almost surely.
    pub degenerate: bool,
    /// Accumulated quadrature error estimate, when any integral was needed.
    pub certificate: Option<ConvergenceCert>,
}

fn statistic(calc: &FacetCalculator, kind: StatisticKind, value: f64, err: f64, term_count: usize) -> HullStatistic {
    HullStatistic {
        ensemble: calc.ensemble().clone(),
        kind,
        value,
        exact: None,
        term_count,
        degenerate: !calc.ensemble().is_full_dimensional(),
        certificate: Some(ConvergenceCert {
            value,
            estimated_abs_error: err,
            refinements_used: 0,
        }),
    }
}

/// `E|F(Q)|`: facet probabilities summed over every spec, both layers when the
/// origin is adjoined.
pub fn expected_facets_with(calc: &FacetCalculator) -> Result<HullStatistic> {
    let (value, err, count) = sum_quantities(calc, QuantityKind::Probability)?;
    Ok(statistic(calc, StatisticKind::FacetCount, value, err, count))
}

/// `E|bd Q|`: expected facet contents summed over every spec.
pub fn expected_surface_with(calc: &FacetCalculator) -> Result<HullStatistic> {
    let (value, err, count) = sum_quantities(calc, QuantityKind::VolumeTerm)?;
    Ok(statistic(calc, StatisticKind::SurfaceArea, value, err, count))
}

/// `E|Q|` through the Cauchy surface formula: the surface sums of the same walks
/// in dimension `d+1`, times `Γ((d+1)/2) / (d √π Γ(d/2))`.
pub fn expected_volume_with(calc: &FacetCalculator) -> Result<HullStatistic> {
    let d = calc.ensemble().d() as f64;
    let factor = (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp() / (d * std::f64::consts::PI.sqrt());
    let lifted = calc.lifted()?;
    let (sum, err, count) = sum_quantities(&lifted, QuantityKind::VolumeTerm)?;
    Ok(statistic(calc, StatisticKind::Volume, factor * sum, factor * err, count))
}

/// Expected number of facets having the origin as a vertex, exactly.
pub fn expected_origin_facets(ensemble: &WalkEnsemble) -> Result<HullStatistic> {
    let (exact, count) = origin_facet_sum(ensemble)?;
    Ok(HullStatistic {
        ensemble: ensemble.clone(),
        kind: StatisticKind::OriginFacetCount,
        value: rational_to_f64(&exact),
        exact: Some(exact),
        term_count: count,
        degenerate: !ensemble.is_full_dimensional(),
        certificate: None,
    })
}

fn calculator(ensemble: &WalkEnsemble) -> Result<FacetCalculator> {
    FacetCalculator::new(ensemble.clone(), QuadratureConfig::default())
}

pub fn expected_facets(ensemble: &WalkEnsemble) -> Result<HullStatistic> {
    expected_facets_with(&calculator(ensemble)?)
}

pub fn expected_surface(ensemble: &WalkEnsemble) -> Result<HullStatistic> {
    expected_surface_with(&calculator(ensemble)?)
}

pub fn expected_volume(ensemble: &WalkEnsemble) -> Result<HullStatistic> {
    expected_volume_with(&calculator(ensemble)?)
}

/// Any statistic through one shared calculator.
pub fn hull_statistic(calc: &FacetCalculator, kind: StatisticKind) -> Result<HullStatistic> {
    match kind {
        StatisticKind::FacetCount => expected_facets_with(calc),
        StatisticKind::OriginFacetCount => expected_origin_facets(calc.ensemble()),
        StatisticKind::SurfaceArea => expected_surface_with(calc),
        StatisticKind::Volume => expected_volume_with(calc),
    }
}

/// `Σ_{j_1+…+j_k ≤ n, j_i ≥ 1} ∏ 1/j_i`, exactly.
fn harmonic_composition_sum(n: usize, k: usize) -> BigRational {
    // level[s] = Σ over k-tuples with sum exactly s
    let mut level: Vec<BigRational> = (0..=n)
        .map(|s| if s == 0 { BigRational::one() } else { BigRational::zero() })
        .collect();
    for _ in 0..k {
        let mut next = vec![BigRational::zero(); n + 1];
        for (s, slot) in next.iter_mut().enumerate().skip(1) {
            for j in 1..=s {
                if !level[s - j].is_zero() {
                    *slot += &level[s - j] / BigRational::from_integer(BigInt::from(j));
                }
            }
        }
        level = next;
    }
    level.into_iter().fold(BigRational::zero(), |acc, x| acc + x)
}

/// Expected number of facets of `conv(S_0, S_1, …, S_n)` for one walk:
/// `2 Σ_{j_1+…+j_{d-1} ≤ n} 1/(j_1⋯j_{d-1})`.
pub fn single_walk_facets(n: usize, d: usize) -> Result<BigRational> {
    if d == 0 {
        return Err(Error::Domain("dimension d must be at least 1".into()));
    }
    Ok(BigRational::from_integer(BigInt::from(2)) * harmonic_composition_sum(n, d - 1))
}

/// The closed form `(1/d!) Σ_{j_1+…+j_d ≤ n-1} 1/√(j_1⋯j_d)` sometimes quoted
/// for the expected volume of one walk of `n` steps.
///
/// Kept only for comparison: it does not match the direct value in `d = 1`
/// (`1` against `√(2/π)` at `n = 2`). [`expected_volume`] does not use it;
/// [`single_walk_volume`] carries the missing factor.
pub fn single_walk_volume_display(n: usize, d: usize) -> Result<f64> {
    if d == 0 || n == 0 {
        return Err(Error::Domain("need n >= 1 and d >= 1".into()));
    }
    let top = n - 1;
    let mut level: Vec<f64> = (0..=top).map(|s| if s == 0 { 1.0 } else { 0.0 }).collect();
    for _ in 0..d {
        let mut next = vec![0.0; top + 1];
        for (s, slot) in next.iter_mut().enumerate().skip(1) {
            *slot = (1..=s).map(|j| level[s - j] / (j as f64).sqrt()).sum();
        }
        level = next;
    }
    Ok(level.iter().sum::<f64>() / ln_gamma(d as f64 + 1.0).exp())
}

/// `E|N|^d = 2^{d/2} Γ((d+1)/2) / √π` for a standard Gaussian `N`.
pub fn gaussian_abs_moment(d: usize) -> f64 {
    let df = d as f64;
    (0.5 * df * std::f64::consts::LN_2 + ln_gamma((df + 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln()).exp()
}

/// Expected volume of `conv(S_1, …, S_n)` for one walk: the display above
/// times `E|N|^d`. The two agree only in `d = 2`, where the factor is 1.
pub fn single_walk_volume(n: usize, d: usize) -> Result<f64> {
    Ok(gaussian_abs_moment(d) * single_walk_volume_display(n, d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolytopeStats {
    pub facets: f64,
    pub volume: f64,
}

/// Expected facet count and volume of the hull of `m` iid standard Gaussian
/// points in `ℝ^d`, optionally with the origin adjoined.
///
/// With the origin, the facets through it contribute `C(m, d-1)/2^{m-d}`
/// (each of the `d-1` chosen points gives factor 1, each other point a half,
/// and the overall factor 2).
pub fn gaussian_polytope_stats(
    m: usize,
    d: usize,
    with_origin: bool,
    config: &QuadratureConfig,
) -> Result<GaussianPolytopeStats> {
    if d == 0 {
        return Err(Error::Domain("dimension d must be at least 1".into()));
    }
    let least = if with_origin { d } else { d + 1 };
    if m < least {
        return Err(Error::Domain(format!("need m >= {least} points for a full-dimensional hull, got m = {m}")));
    }
    let domain = if with_origin { Domain::HalfLine } else { Domain::FullLine };
    let df = d as f64;
    let choose = |k: usize| rational_to_f64(&BigRational::from_integer(binomial(m as u64, k as u64)));

    let facet_integral = phi_power_integral((m - d) as u32, d as u32, domain, config)?.value;
    let mut facets =
        2.0 * df.sqrt() * (2.0 * std::f64::consts::PI).powf((df - 1.0) / 2.0) * choose(d) * facet_integral;

    let ball = std::f64::consts::PI.powf(df / 2.0) / ln_gamma(df / 2.0 + 1.0).exp();
    let mut volume = if m > d {
        let integral = phi_power_integral((m - d - 1) as u32, d as u32 + 1, domain, config)?.value;
        choose(d + 1) * (df + 1.0) * ball * integral
    } else {
        0.0
    };

    if with_origin {
        facets += choose(d - 1) / 2f64.powi((m - d) as i32);
        volume += choose(d) / (2f64.powf(m as f64 - df / 2.0) * ln_gamma(df / 2.0 + 1.0).exp());
    }
    Ok(GaussianPolytopeStats { facets, volume })
}

/// Probability that the origin lies outside the hull of `m` iid symmetric points
/// in general position: `2^{1-m} Σ_{j<d} C(m-1, j)`.
pub fn wendel(m: usize, d: usize) -> Result<BigRational> {
    if m == 0 || d == 0 {
        return Err(Error::Domain("need m >= 1 and d >= 1".into()));
    }
    let sum: BigInt = (0..d.min(m)).map(|j| binomial(m as u64 - 1, j as u64)).sum();
    Ok(BigRational::new(sum * 2, BigInt::from(2).pow(m as u32)))
}
