//! Special functions, exact rational arithmetic and quadrature shared by the
//! formula modules.

mod gauss_legendre;
mod quadrature;

pub use gauss_legendre::gauss_legendre;
pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
pub use quadrature::{simpson, simpson_doubling, ConvergenceCert, KahanSum, QuadratureConfig};

use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// `(2n-1)!! / (2n)!!`, exactly. The empty product gives 1 at `n = 0`.
///
/// This is the probability that a symmetric continuous walk stays on one side
/// of the origin for `n` steps.
pub fn double_factorial_ratio(n: u64) -> BigRational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for k in 1..=n {
        num *= 2 * k - 1;
        den *= 2 * k;
    }
    BigRational::new(num, den)
}

/// `n!!` with the conventions `0!! = (-1)!! = 1`.
pub fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln ∏_{i=i_lo}^{i_hi} Γ((i+p)/2) / Γ(i/2)`; an empty range gives 0.
pub fn ln_gamma_ratio_product(i_lo: i64, i_hi: i64, p: f64) -> Result<f64> {
    if i_lo > i_hi {
        return Ok(0.0);
    }
    if i_lo < 1 {
        return Err(Error::Domain(format!("gamma ratio product needs i_lo >= 1, got {i_lo}")));
    }
    if !(p > 0.0) {
        return Err(Error::Domain(format!("moment order must be positive, got {p}")));
    }
    Ok((i_lo..=i_hi)
        .map(|i| {
            let i = i as f64;
            ln_gamma((i + p) / 2.0) - ln_gamma(i / 2.0)
        })
        .sum())
}

/// `∏_{i=i_lo}^{i_hi} Γ((i+p)/2) / Γ(i/2)`, evaluated in log space.
pub fn gamma_ratio_product(i_lo: i64, i_hi: i64, p: f64) -> Result<f64> {
    ln_gamma_ratio_product(i_lo, i_hi, p).map(f64::exp)
}

pub fn std_normal_pdf(r: f64) -> f64 {
    (-0.5 * r * r).exp() / SQRT_2PI
}

pub fn std_normal_cdf(r: f64) -> f64 {
    0.5 * libm::erfc(-r / std::f64::consts::SQRT_2)
}

/// Integration domain for [`phi_power_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    FullLine,
    HalfLine,
}

/// `∫ Φ(r)^a φ(r)^b dr` over ℝ or `[0, ∞)`.
pub fn phi_power_integral(a: u32, b: u32, domain: Domain, config: &QuadratureConfig) -> Result<ConvergenceCert> {
    if b == 0 {
        return Err(Error::Domain("phi_power_integral needs b >= 1".into()));
    }
    let cutoff = config.truncation_multiplier / (b as f64).sqrt();
    let lower = match domain {
        Domain::FullLine => -cutoff,
        Domain::HalfLine => 0.0,
    };
    let f = |r: f64| std_normal_cdf(r).powi(a as i32) * std_normal_pdf(r).powi(b as i32);
    simpson(f, lower, cutoff, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use std::f64::consts::PI;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn double_factorial_ratio_examples() {
        assert_eq!(double_factorial_ratio(0), rat(1, 1));
        assert_eq!(double_factorial_ratio(1), rat(1, 2));
        assert_eq!(double_factorial_ratio(4), rat(35, 128));
    }

    #[test]
    fn double_factorial_ratio_times_even_double_factorial() {
        for n in 0..=50u64 {
            let lhs = double_factorial_ratio(n) * BigRational::from_integer(double_factorial(2 * n as i64));
            assert_eq!(lhs, BigRational::from_integer(double_factorial(2 * n as i64 - 1)));
        }
    }

    #[test]
    fn gamma_ratio_examples() {
        for d in 1..10 {
            let v = gamma_ratio_product(d, d, 2.0).unwrap();
            assert!((v - d as f64 / 2.0).abs() < 1e-12);
        }
        assert!((gamma_ratio_product(1, 1, 1.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-14);
        assert!((gamma_ratio_product(1, 2, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(gamma_ratio_product(3, 2, 1.5).unwrap(), 1.0);
        assert!(gamma_ratio_product(0, 2, 1.0).is_err());
    }

    #[test]
    fn gamma_ratio_survives_large_arguments() {
        let v = ln_gamma_ratio_product(1, 400, 2.0).unwrap();
        // ∏ i/2 over 1..=400 = 400!/2^400
        let exact: f64 = (1..=400).map(|i| (i as f64 / 2.0).ln()).sum();
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn normal_functions() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!((std_normal_cdf(1.3) - 0.903_199_515_414_389_7).abs() < 4e-16);
        assert!((std_normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn phi_power_integral_examples() {
        let cfg = QuadratureConfig::default();
        let half = phi_power_integral(0, 1, Domain::HalfLine, &cfg).unwrap().value;
        assert!((half - 0.5).abs() < 1e-10);
        let v = phi_power_integral(0, 2, Domain::FullLine, &cfg).unwrap().value;
        assert!((v - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-10);
        let v = phi_power_integral(1, 2, Domain::FullLine, &cfg).unwrap().value;
        assert!((v - 1.0 / (4.0 * PI.sqrt())).abs() < 1e-10);
        assert!(phi_power_integral(1, 0, Domain::FullLine, &cfg).is_err());
    }

    #[test]
    fn phi_power_integral_splits_at_zero() {
        let cfg = QuadratureConfig::default();
        for a in 0..5 {
            for b in 1..4 {
                let full = phi_power_integral(a, b, Domain::FullLine, &cfg).unwrap().value;
                let right = phi_power_integral(a, b, Domain::HalfLine, &cfg).unwrap().value;
                let t = cfg.truncation_multiplier / (b as f64).sqrt();
                let left = simpson(
                    |r| (1.0 - std_normal_cdf(r)).powi(a as i32) * std_normal_pdf(r).powi(b as i32),
                    0.0,
                    t,
                    &cfg,
                )
                .unwrap()
                .value;
                assert!((full - right - left).abs() < 1e-9 * full, "a={a} b={b}");
                if a == 0 {
                    assert!((right - left).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), BigInt::from(120));
        assert!(binomial(3, 5).is_zero());
    }
}
