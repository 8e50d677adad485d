//! Closed-form moments of volumes of Gaussian simplices.
//!
//! All formulas share the Gamma-ratio product `∏ Γ((i+p)/2)/Γ(i/2)` and a
//! scale bracket raised to the power `p`; both are combined in log space so
//! that long index products cannot overflow.

use crate::enumeration::FacetSpec;
use crate::error::{Error, Result};
use crate::numerics::{ln_gamma, ln_gamma_ratio_product};

/// Moment of the `l`-simplex `conv(σ_0 X_0, …, σ_l X_l)` in `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSimplexQuery {
    pub d: usize,
    /// `σ_0, …, σ_l`, so `l = sigmas.len() - 1`.
    pub sigmas: Vec<f64>,
    pub p: f64,
}

impl WeightedSimplexQuery {
    pub fn l(&self) -> usize {
        self.sigmas.len().saturating_sub(1)
    }
}

/// Moment of `conv(Y_0, …, Y_d)` where the `Y` form weighted walks that restart
/// from a fresh Gaussian at each restart index.
///
/// `Y_0 = σ_0 X_0`, `Y_k = Y_{k-1} + σ_k X_k`, except `Y_k = σ_k X_k` when `k`
/// is a restart index.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSimplexQuery {
    pub d: usize,
    /// `0 = i_0 < i_1 < … < i_l ≤ d`.
    pub restart_indices: Vec<usize>,
    /// `σ_0, …, σ_d`.
    pub sigmas: Vec<f64>,
    pub p: f64,
}

fn check_order(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("moment order must be positive, got {p}")))
    }
}

fn check_sigmas(sigmas: &[f64]) -> Result<()> {
    match sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        Some(s) => Err(Error::Domain(format!("weights must be positive, got {s}"))),
        None => Ok(()),
    }
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `ln [2^{k/2} ∏σ / k! · √(Σ 1/σ_j²)]` for the given weights and restart set.
fn ln_bracket(k: usize, product_sigmas: &[f64], restart_sigmas: &[f64]) -> f64 {
    let ln_prod: f64 = product_sigmas.iter().map(|s| s.ln()).sum();
    let inv_sq: f64 = restart_sigmas.iter().map(|s| 1.0 / (s * s)).sum();
    0.5 * k as f64 * std::f64::consts::LN_2 + ln_prod - ln_factorial(k) + 0.5 * inv_sq.ln()
}

/// `E|conv(σ_0 X_0, …, σ_l X_l)|^p` for independent standard Gaussians in `ℝ^d`.
pub fn weighted_simplex_moment(q: &WeightedSimplexQuery) -> Result<f64> {
    let l = q.l();
    if l == 0 || l > q.d {
        return Err(Error::Domain(format!("need 1 <= l <= d, got l = {l}, d = {}", q.d)));
    }
    check_sigmas(&q.sigmas)?;
    check_order(q.p)?;
    let gammas = ln_gamma_ratio_product((q.d - l + 1) as i64, q.d as i64, q.p)?;
    Ok((q.p * ln_bracket(l, &q.sigmas, &q.sigmas) + gammas).exp())
}

fn check_restarts(q: &WalkSimplexQuery) -> Result<()> {
    if q.d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if q.sigmas.len() != q.d + 1 {
        return Err(Error::Domain(format!(
            "need d + 1 = {} weights, got {}",
            q.d + 1,
            q.sigmas.len()
        )));
    }
    let r = &q.restart_indices;
    if r.first() != Some(&0) || r.windows(2).any(|w| w[0] >= w[1]) || r.last().is_some_and(|&i| i > q.d) {
        return Err(Error::Domain(format!(
            "restart indices must be strictly increasing from 0 within 0..={}, got {r:?}",
            q.d
        )));
    }
    check_order(q.p)
}

/// `E|conv(Y_0, …, Y_d)|^p` for the restarted weighted walks.
pub fn walk_simplex_moment(q: &WalkSimplexQuery) -> Result<f64> {
    check_restarts(q)?;
    check_sigmas(&q.sigmas)?;
    let restart_sigmas: Vec<f64> = q.restart_indices.iter().map(|&i| q.sigmas[i]).collect();
    let gammas = ln_gamma_ratio_product(1, q.d as i64, q.p)?;
    Ok((q.p * ln_bracket(q.d, &q.sigmas, &restart_sigmas) + gammas).exp())
}

/// The `σ_0 = 0` limit of [`walk_simplex_moment`]: `E|conv(0, Y_1, …, Y_d)|^p`.
///
/// The restart structure drops out; `sigmas[0]` must be zero.
pub fn zero_vertex_simplex_moment(q: &WalkSimplexQuery) -> Result<f64> {
    check_restarts(q)?;
    if q.sigmas[0] != 0.0 {
        return Err(Error::Domain(format!("sigma_0 must be 0, got {}", q.sigmas[0])));
    }
    check_sigmas(&q.sigmas[1..])?;
    let ln_prod: f64 = q.sigmas[1..].iter().map(|s| s.ln()).sum();
    let ln_scale = 0.5 * q.d as f64 * std::f64::consts::LN_2 + ln_prod - ln_factorial(q.d);
    let gammas = ln_gamma_ratio_product(1, q.d as i64, q.p)?;
    Ok((q.p * ln_scale + gammas).exp())
}

/// `E|conv(0, X_1, …, X_k)|^p` in `ℝ^d`.
pub fn gaussian_simplex_moment(d: usize, k: usize, p: f64) -> Result<f64> {
    cone_factor_moment(d, k, 0, p)
}

/// `E det^{p/2}(A Aᵀ)` for a `d × (d+1)` standard Gaussian matrix `A`.
pub fn parallelotope_moment(d: usize, p: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    check_order(p)?;
    let gammas = ln_gamma_ratio_product(2, d as i64 + 1, p)?;
    Ok((0.5 * (d as f64) * p * std::f64::consts::LN_2 + gammas).exp())
}

/// Factor `c` with `E|conv(0, X_1, …, X_k, Y_1, …, Y_l)|^p = c · E|conv(0, Y_1, …, Y_l)|^p`
/// when the Gaussians `X_i` in `ℝ^d` are independent of the `Y_j`.
pub fn cone_factor_moment(d: usize, k: usize, l: usize, p: f64) -> Result<f64> {
    if k + l > d {
        return Err(Error::Domain(format!("need k + l <= d, got k = {k}, l = {l}, d = {d}")));
    }
    check_order(p)?;
    let ln_scale = 0.5 * k as f64 * std::f64::consts::LN_2 + ln_factorial(l) - ln_factorial(k + l);
    let gammas = ln_gamma_ratio_product((d - l - k + 1) as i64, (d - l) as i64, p)?;
    Ok((p * ln_scale + gammas).exp())
}

/// `E χ_k^p = 2^{p/2} Γ((k+p)/2)/Γ(k/2)`.
pub fn chi_moment(k: usize, p: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("chi distribution needs k >= 1".into()));
    }
    check_order(p)?;
    let g = ln_gamma_ratio_product(k as i64, k as i64, p)?;
    Ok((0.5 * p * std::f64::consts::LN_2 + g).exp())
}

/// `E|conv P S|^p`, the `p`-th moment of the `(d-1)`-content of a facet candidate
/// after projecting `ℝ^d` onto `ℝ^{d-1}`.
///
/// The projected vertices are weighted restarted walks: walk `l` starts with a
/// step of variance `i_1` and continues with steps of variance equal to the
/// index gaps. An origin vertex removes the `Σ 1/i_1` factor.
pub fn projected_simplex_moment(spec: &FacetSpec, p: f64) -> Result<f64> {
    check_order(p)?;
    let d = spec.dimension();
    if d == 0 {
        return Err(Error::InvalidSpec("spec has no vertices".into()));
    }
    let mut ln_inner = (d as f64 - 1.0) * std::f64::consts::LN_2 - 2.0 * ln_factorial(d - 1);
    let mut inv_first = 0.0;
    for indices in spec.indices().iter().filter(|g| !g.is_empty()) {
        let first = indices[0] as f64;
        inv_first += 1.0 / first;
        ln_inner += first.ln();
        ln_inner += indices.windows(2).map(|w| ((w[1] - w[0]) as f64).ln()).sum::<f64>();
    }
    if !spec.with_origin_vertex() {
        ln_inner += inv_first.ln();
    }
    let gammas = ln_gamma_ratio_product(1, d as i64 - 1, p)?;
    Ok((0.5 * p * ln_inner + gammas).exp())
}
