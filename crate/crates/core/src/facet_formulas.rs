//! Per-facet quantities: facet probabilities, the persistence integrals they
//! are built from, and the expected-facet-content terms whose sums give the
//! expected surface area.
//!
//! A spec without an origin vertex needs the integral
//!
//! ```text
//! I = ∫ exp(-(r²/2) Σ_{k_l≠0} 1/i_1) ∏_{k_l=0} p_{n_l}(r) ∏_{k_l≠0} q_{i_1}(r) dr
//! ```
//!
//! over ℝ (`I_1`, hull without the origin) or over `[0, ∞)` (`I_2`, hull with
//! the origin). A spec with an origin vertex needs no integral at all.

use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::enumeration::{FacetSpec, WalkBlock, WalkEnsemble};
use crate::error::{Error, Result};
use crate::numerics::{
    ln_gamma, rational_to_f64, simpson_doubling, BigInt, BigRational, ConvergenceCert, Domain, KahanSum,
    QuadratureConfig, SQRT_2PI,
};
use crate::persistence::{PersistenceConfig, PersistenceEvaluator};
use crate::simplex_moments::projected_simplex_moment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantityKind {
    /// Probability that the spec's points span a facet.
    Probability,
    /// Expected `(d-1)`-content of the spec's simplex on the facet event.
    VolumeTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullKind {
    WithoutOrigin,
    WithOrigin,
}

impl HullKind {
    pub fn of(ensemble: &WalkEnsemble) -> Self {
        if ensemble.include_origin() {
            HullKind::WithOrigin
        } else {
            HullKind::WithoutOrigin
        }
    }

    /// Integration domain of the persistence integral for specs without an origin vertex.
    pub fn domain(self) -> Domain {
        match self {
            HullKind::WithoutOrigin => Domain::FullLine,
            HullKind::WithOrigin => Domain::HalfLine,
        }
    }
}

/// Functional applied to the facet simplex in the general facet identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GFunctional {
    One,
    FacetVolume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetQuantity {
    pub spec: FacetSpec,
    pub kind: QuantityKind,
    pub hull: HullKind,
    pub value: f64,
    /// Present when the value is an exact rational.
    pub exact: Option<BigRational>,
    /// Quadrature certificate, scaled to `value`, when an integral was needed.
    pub certificate: Option<ConvergenceCert>,
}

/// Shared context for evaluating many specs of one ensemble.
///
/// Persistence rows are cached per barrier in the evaluator, and every spec of
/// the ensemble integrates over the same dyadic grid on `[-T, T]` with
/// `T = truncation_multiplier · √(max n_l)`, so quadrature nodes are shared
/// across specs.
#[derive(Debug, Clone)]
pub struct FacetCalculator {
    ensemble: WalkEnsemble,
    evaluator: Arc<PersistenceEvaluator>,
    quad: QuadratureConfig,
}

struct IntegralShape {
    inv_first_sum: f64,
    /// `i_1` of each walk contributing vertices.
    bridges: Vec<usize>,
    /// `n_l` of each walk contributing none.
    free_walks: Vec<usize>,
}

impl FacetCalculator {
    pub fn new(ensemble: WalkEnsemble, quad: QuadratureConfig) -> Result<Self> {
        let evaluator = PersistenceEvaluator::new(ensemble.max_length(), PersistenceConfig::default())?;
        Self::with_evaluator(ensemble, quad, Arc::new(evaluator))
    }

    pub fn with_evaluator(
        ensemble: WalkEnsemble,
        quad: QuadratureConfig,
        evaluator: Arc<PersistenceEvaluator>,
    ) -> Result<Self> {
        quad.validate()?;
        if evaluator.n_max() < ensemble.max_length() {
            return Err(Error::Domain(format!(
                "persistence evaluator covers n <= {} but the ensemble has a walk of length {}",
                evaluator.n_max(),
                ensemble.max_length()
            )));
        }
        Ok(Self {
            ensemble,
            evaluator,
            quad,
        })
    }

    /// The same walks one dimension up, sharing the persistence cache.
    pub fn lifted(&self) -> Result<Self> {
        Ok(Self {
            ensemble: self.ensemble.with_dimension(self.ensemble.d() + 1)?,
            evaluator: Arc::clone(&self.evaluator),
            quad: self.quad,
        })
    }

    pub fn ensemble(&self) -> &WalkEnsemble {
        &self.ensemble
    }

    pub fn evaluator(&self) -> &Arc<PersistenceEvaluator> {
        &self.evaluator
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn hull(&self) -> HullKind {
        HullKind::of(&self.ensemble)
    }

    fn check_plain(&self, spec: &FacetSpec) -> Result<()> {
        spec.validate_for(&self.ensemble)?;
        if spec.with_origin_vertex() {
            return Err(Error::InvalidSpec(format!(
                "{spec} has an origin vertex; its facet quantities need no persistence integral"
            )));
        }
        Ok(())
    }

    fn check_origin(&self, spec: &FacetSpec) -> Result<()> {
        spec.validate_for(&self.ensemble)?;
        if !spec.with_origin_vertex() {
            return Err(Error::InvalidSpec(format!("{spec} has no origin vertex")));
        }
        Ok(())
    }

    fn shape(&self, spec: &FacetSpec) -> IntegralShape {
        let mut shape = IntegralShape {
            inv_first_sum: 0.0,
            bridges: Vec::new(),
            free_walks: Vec::new(),
        };
        for block in spec.blocks(&self.ensemble) {
            match block.first() {
                Some(i1) => {
                    shape.inv_first_sum += 1.0 / i1 as f64;
                    shape.bridges.push(i1);
                }
                None => shape.free_walks.push(block.n),
            }
        }
        shape
    }

    /// Half-width of the integration window shared by all specs.
    pub fn integration_cutoff(&self) -> f64 {
        self.quad.truncation_multiplier * (self.ensemble.max_length() as f64).sqrt()
    }

    fn integrand(&self, shape: &IntegralShape, rs: &[f64]) -> Result<Vec<f64>> {
        // beyond H√i_1 the Gaussian weight is below e^{-32} relative to its peak
        let live = |r: f64| {
            shape
                .bridges
                .iter()
                .all(|&i| i < 2 || r.abs() <= self.evaluator.bridge_limit(i))
        };
        let needed: Vec<f64> = rs.iter().copied().filter(|&r| live(r)).collect();
        self.evaluator.prefetch(&needed)?;
        rs.iter()
            .map(|&r| {
                if !live(r) {
                    return Ok(0.0);
                }
                let mut v = (-0.5 * r * r * shape.inv_first_sum).exp();
                for &n in &shape.free_walks {
                    v *= self.evaluator.p(n, r)?.value;
                }
                for &i in &shape.bridges {
                    v *= self.evaluator.q(i, r)?.value;
                }
                Ok(v)
            })
            .collect()
    }

    /// `I_1` (over ℝ) or `I_2` (over `[0, ∞)`) for a spec without an origin vertex.
    pub fn persistence_integral(&self, spec: &FacetSpec, domain: Domain) -> Result<ConvergenceCert> {
        self.check_plain(spec)?;
        let shape = self.shape(spec);
        let t = self.integration_cutoff();
        let (lower, length) = match domain {
            Domain::FullLine => (-t, 2.0 * t),
            Domain::HalfLine => (0.0, t),
        };
        // start with at least two nodes per Gaussian scale of the integrand
        let scale = shape.inv_first_sum.sqrt().recip();
        let wanted = (2.0 * length / scale).ceil() as usize;
        let quad = QuadratureConfig {
            panel_count: wanted.next_power_of_two().max(self.quad.panel_count),
            ..self.quad
        };
        simpson_doubling(|rs: &[f64]| self.integrand(&shape, rs), lower, t, &quad)
    }

    pub fn persistence_integrals(&self, spec: &FacetSpec) -> Result<(ConvergenceCert, ConvergenceCert)> {
        Ok((
            self.persistence_integral(spec, Domain::FullLine)?,
            self.persistence_integral(spec, Domain::HalfLine)?,
        ))
    }

    fn plain_quantity(&self, spec: FacetSpec, kind: QuantityKind, prefactor: f64) -> Result<FacetQuantity> {
        let hull = self.hull();
        let integral = self.persistence_integral(&spec, hull.domain())?;
        Ok(FacetQuantity {
            spec,
            kind,
            hull,
            value: prefactor * integral.value,
            exact: None,
            certificate: Some(ConvergenceCert {
                value: prefactor * integral.value,
                estimated_abs_error: prefactor * integral.estimated_abs_error,
                refinements_used: integral.refinements_used,
            }),
        })
    }

    /// Probability that the points of `spec` (no origin vertex) span a facet of the hull.
    pub fn facet_probability(&self, spec: &FacetSpec) -> Result<FacetQuantity> {
        self.check_plain(spec)?;
        let shape = self.shape(spec);
        let mut prefactor = 2.0 / SQRT_2PI * shape.inv_first_sum.sqrt();
        for block in spec.blocks(&self.ensemble).filter(|b| !b.is_empty()) {
            prefactor *= block.gaps().map(|g| 1.0 / g as f64).product::<f64>() * tail(&block);
        }
        self.plain_quantity(spec.clone(), QuantityKind::Probability, prefactor)
    }

    /// Exact facet probability for a spec with an origin vertex; see [`origin_facet_probability`].
    pub fn origin_facet_probability(&self, spec: &FacetSpec) -> Result<BigRational> {
        origin_facet_probability(spec, &self.ensemble)
    }

    /// Expected `(d-1)`-content of `conv(spec)` on the event that it is a facet.
    pub fn facet_volume_term(&self, spec: &FacetSpec) -> Result<FacetQuantity> {
        let d = self.ensemble.d() as f64;
        let base = 1.0 / ((d / 2.0 - 1.0) * std::f64::consts::LN_2 + ln_gamma(d / 2.0)).exp();
        if spec.with_origin_vertex() {
            self.check_origin(spec)?;
            let mut value = SQRT_2PI * base;
            for block in spec.blocks(&self.ensemble) {
                let spread: f64 = block.first().map_or(1.0, |i| i as f64) * block.gaps().map(|g| g as f64).product::<f64>();
                value *= spread.sqrt().recip() * tail(&block);
            }
            return Ok(FacetQuantity {
                spec: spec.clone(),
                kind: QuantityKind::VolumeTerm,
                hull: HullKind::WithOrigin,
                value,
                exact: None,
                certificate: None,
            });
        }
        self.check_plain(spec)?;
        let shape = self.shape(spec);
        let mut prefactor = base * shape.inv_first_sum;
        for block in spec.blocks(&self.ensemble).filter(|b| !b.is_empty()) {
            let first = block.first().expect("nonempty block") as f64;
            prefactor *= first.sqrt() * block.gaps().map(|g| (g as f64).sqrt().recip()).product::<f64>() * tail(&block);
        }
        self.plain_quantity(spec.clone(), QuantityKind::VolumeTerm, prefactor)
    }

    /// Dispatches on the origin flag: probability or volume term of any valid spec.
    pub fn quantity(&self, spec: &FacetSpec, kind: QuantityKind) -> Result<FacetQuantity> {
        match (kind, spec.with_origin_vertex()) {
            (QuantityKind::Probability, false) => self.facet_probability(spec),
            (QuantityKind::Probability, true) => {
                let exact = self.origin_facet_probability(spec)?;
                Ok(FacetQuantity {
                    spec: spec.clone(),
                    kind,
                    hull: HullKind::WithOrigin,
                    value: rational_to_f64(&exact),
                    exact: Some(exact),
                    certificate: None,
                })
            }
            (QuantityKind::VolumeTerm, _) => self.facet_volume_term(spec),
        }
    }

    /// The same quantities assembled from the general facet identity: a
    /// projected simplex moment times the per-walk factors times the integral.
    ///
    /// Independent of [`FacetCalculator::facet_probability`] and
    /// [`FacetCalculator::facet_volume_term`] apart from the shared integral,
    /// so agreement checks both transcriptions.
    pub fn composed_quantity(&self, spec: &FacetSpec, g: GFunctional) -> Result<f64> {
        spec.validate_for(&self.ensemble)?;
        let d = self.ensemble.d() as f64;
        let p = match g {
            GFunctional::One => 1.0,
            GFunctional::FacetVolume => 2.0,
        };
        let moment = projected_simplex_moment(spec, p)?;
        let gamma = ln_gamma((d + 1.0) / 2.0).exp();
        if spec.with_origin_vertex() {
            let mut value = 2f64.powf((d + 1.0) / 2.0) * gamma * moment;
            for block in spec.blocks(&self.ensemble) {
                let spread: f64 = block.first().map_or(1.0, |i| i as f64) * block.gaps().map(|g| g as f64).product::<f64>();
                value *= spread.powf(-1.5) * tail(&block);
            }
            return Ok(value);
        }
        let mut prefactor = 2f64.powf(d / 2.0) * gamma / std::f64::consts::PI.sqrt() * moment;
        for block in spec.blocks(&self.ensemble).filter(|b| !b.is_empty()) {
            let first = block.first().expect("nonempty block") as f64;
            prefactor *= first.powf(-0.5) * block.gaps().map(|g| (g as f64).powf(-1.5)).product::<f64>() * tail(&block);
        }
        Ok(prefactor * self.persistence_integral(spec, self.hull().domain())?.value)
    }
}

fn tail(block: &WalkBlock<'_>) -> f64 {
    rational_to_f64(&block.tail_ratio())
}

/// `2 ∏_l [1/i_1 · ∏ 1/gaps · (2t_l-1)!!/(2t_l)!!]` for a spec with an origin
/// vertex, with `t_l` the tail length (all of `n_l` for walks contributing no vertex).
///
/// Only symmetry and absolute continuity of the steps enter, so the value is
/// the same for every such step law.
pub fn origin_facet_probability(spec: &FacetSpec, ensemble: &WalkEnsemble) -> Result<BigRational> {
    spec.validate_for(ensemble)?;
    if !spec.with_origin_vertex() {
        return Err(Error::InvalidSpec(format!("{spec} has no origin vertex")));
    }
    let mut value = BigRational::from_integer(BigInt::from(2));
    for block in spec.blocks(ensemble) {
        let mut spread = BigInt::from(block.first().unwrap_or(1));
        for g in block.gaps() {
            spread *= BigInt::from(g);
        }
        value *= block.tail_ratio() / BigRational::from_integer(spread);
    }
    Ok(value)
}

/// `Σ` of [`origin_facet_probability`] over all origin specs: the expected
/// number of facets having the origin as a vertex.
pub fn origin_facet_sum(ensemble: &WalkEnsemble) -> Result<(BigRational, usize)> {
    if !ensemble.include_origin() {
        return Err(Error::Domain("ensemble does not include the origin".into()));
    }
    let mut total = BigRational::zero();
    let mut count = 0;
    for spec in crate::enumeration::facet_specs_in_layer(ensemble, true) {
        total += origin_facet_probability(&spec, ensemble)?;
        count += 1;
    }
    Ok((total, count))
}

fn default_calculator(ensemble: &WalkEnsemble) -> Result<FacetCalculator> {
    FacetCalculator::new(ensemble.clone(), QuadratureConfig::default())
}

/// `(I_1, I_2)` for a spec without an origin vertex, with default settings.
pub fn persistence_integrals(spec: &FacetSpec, ensemble: &WalkEnsemble) -> Result<(ConvergenceCert, ConvergenceCert)> {
    default_calculator(ensemble)?.persistence_integrals(spec)
}

pub fn facet_probability(spec: &FacetSpec, ensemble: &WalkEnsemble) -> Result<FacetQuantity> {
    default_calculator(ensemble)?.facet_probability(spec)
}

pub fn facet_volume_term(spec: &FacetSpec, ensemble: &WalkEnsemble) -> Result<FacetQuantity> {
    default_calculator(ensemble)?.facet_volume_term(spec)
}

/// Kahan-accumulated sum of `quantity(spec, kind)` over every spec of the ensemble.
pub(crate) fn sum_quantities(calc: &FacetCalculator, kind: QuantityKind) -> Result<(f64, f64, usize)> {
    let mut value = KahanSum::new();
    let mut err = 0.0;
    let mut count = 0;
    for spec in crate::enumeration::facet_specs(calc.ensemble()) {
        let q = calc.quantity(&spec, kind)?;
        value.add(q.value);
        err += q.certificate.map_or(0.0, |c| c.estimated_abs_error);
        count += 1;
    }
    Ok((value.value(), err, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::double_factorial_ratio;
    use num_traits::One;

    fn ens(d: usize, lengths: &[usize], origin: bool) -> WalkEnsemble {
        WalkEnsemble::new(d, lengths.to_vec(), origin).unwrap()
    }

    fn spec(e: &WalkEnsemble, text: &str) -> FacetSpec {
        FacetSpec::parse(text, e).unwrap()
    }

    #[test]
    fn integral_examples() {
        let e = ens(1, &[3], false);
        let (i1, i2) = persistence_integrals(&spec(&e, "2"), &e).unwrap();
        let s = (4.0 * std::f64::consts::PI).sqrt();
        assert!((i1.value - s * 0.5).abs() < 1e-8);
        assert!((i2.value - s * 0.375).abs() < 1e-8);

        let e = ens(1, &[1, 1], false);
        let (i1, _) = persistence_integrals(&spec(&e, "1;"), &e).unwrap();
        assert!((i1.value - SQRT_2PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_polytope_integral() {
        // all walks of length one, all k_l = 1: I_1 = (2π)^{d/2} ∫ φ^d
        let e = ens(3, &[1, 1, 1], false);
        let (i1, _) = persistence_integrals(&spec(&e, "1;1;1"), &e).unwrap();
        let int_phi3 = 1.0 / (2.0 * std::f64::consts::PI * 3f64.sqrt());
        assert!((i1.value - (2.0 * std::f64::consts::PI).powf(1.5) * int_phi3).abs() < 1e-9);
    }

    #[test]
    fn probability_examples() {
        let e = ens(1, &[2], false);
        assert!((facet_probability(&spec(&e, "1"), &e).unwrap().value - 1.0).abs() < 1e-9);
        let e = ens(1, &[1, 1], false);
        assert!((facet_probability(&spec(&e, "1;"), &e).unwrap().value - 1.0).abs() < 1e-9);
        let e = ens(2, &[3], false);
        let calc = default_calculator(&e).unwrap();
        for s in crate::enumeration::facet_specs(&e) {
            let v = calc.facet_probability(&s).unwrap().value;
            assert!((-1e-12..=1.0 + 1e-9).contains(&v), "{s}: {v}");
        }
    }

    #[test]
    fn origin_examples() {
        let e = ens(2, &[2], true);
        let one = BigRational::one();
        assert_eq!(origin_facet_probability(&spec(&e, "1"), &e).unwrap(), one);
        assert_eq!(origin_facet_probability(&spec(&e, "2"), &e).unwrap(), one);
        let e = ens(2, &[3], true);
        let v = origin_facet_probability(&spec(&e, "1"), &e).unwrap();
        assert_eq!(v, BigRational::new(3.into(), 4.into()));
        assert!(origin_facet_probability(&spec(&e, "1,2"), &e).is_err());
        // walks contributing nothing enter through their full-length tail
        let e = ens(2, &[2, 3], true);
        let v = origin_facet_probability(&spec(&e, "2;"), &e).unwrap();
        let want = BigRational::from_integer(2.into()) / BigRational::from_integer(2.into())
            * double_factorial_ratio(0)
            * double_factorial_ratio(3);
        assert_eq!(v, want);
    }

    #[test]
    fn origin_sum_d1() {
        for n in 1..8 {
            let e = ens(1, &[n], true);
            let (sum, count) = origin_facet_sum(&e).unwrap();
            assert_eq!(count, 1);
            assert_eq!(sum, BigRational::from_integer(2.into()) * double_factorial_ratio(n as u64));
        }
        let e = ens(2, &[3], true);
        assert_eq!(origin_facet_sum(&e).unwrap().0, BigRational::new(23.into(), 12.into()));
    }

    #[test]
    fn volume_term_examples() {
        let e = ens(2, &[2], true);
        let v = facet_volume_term(&spec(&e, "1"), &e).unwrap().value;
        assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-14);
        let e = ens(1, &[4, 2], false);
        let calc = default_calculator(&e).unwrap();
        for s in crate::enumeration::facet_specs(&e) {
            let p = calc.facet_probability(&s).unwrap().value;
            let v = calc.facet_volume_term(&s).unwrap().value;
            assert!((p - v).abs() < 1e-12, "{s}");
        }
        let e0 = ens(2, &[2, 3], true);
        let full = FacetCalculator::new(ens(2, &[2, 3], false), QuadratureConfig::default()).unwrap();
        let half = default_calculator(&e0).unwrap();
        for s in crate::enumeration::facet_specs_in_layer(&e0, false) {
            let s_full = FacetSpec::new(s.indices().to_vec(), false, full.ensemble()).unwrap();
            assert!(full.facet_volume_term(&s_full).unwrap().value >= half.facet_volume_term(&s).unwrap().value);
        }
    }

    #[test]
    fn composition_agrees() {
        for (d, lengths, origin) in [(2, vec![3], false), (2, vec![2, 3], true), (3, vec![2, 2], false), (3, vec![3, 2], true)] {
            let e = ens(d, &lengths, origin);
            let calc = default_calculator(&e).unwrap();
            for s in crate::enumeration::facet_specs(&e) {
                let direct = calc.quantity(&s, QuantityKind::Probability).unwrap().value;
                let composed = calc.composed_quantity(&s, GFunctional::One).unwrap();
                assert!((direct - composed).abs() < 1e-10, "{s}: {direct} vs {composed}");
                let direct = calc.facet_volume_term(&s).unwrap().value;
                let composed = calc.composed_quantity(&s, GFunctional::FacetVolume).unwrap();
                assert!((direct - composed).abs() < 1e-10 * direct.max(1.0), "{s}: {direct} vs {composed}");
            }
        }
    }

    #[test]
    fn rejects_mismatched_specs() {
        let e = ens(2, &[3], false);
        let other = ens(2, &[5], false);
        let s = spec(&other, "4,5");
        assert!(facet_probability(&s, &e).is_err());
        let e0 = ens(2, &[3], true);
        assert!(facet_probability(&spec(&e0, "1"), &e0).is_err());
    }
}
