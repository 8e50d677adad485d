//! Walk ensembles, candidate facets, and the combinatorial index sets the
//! facet sums range over.
//!
//! All streams are lazy: summing over [`facet_specs`] never materializes the
//! full list of candidates.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::{binomial, double_factorial_ratio};

/// `m` independent walks of lengths `n_1, …, n_m` in `ℝ^d`, with or without the
/// origin adjoined to the hull.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WalkEnsemble {
    d: usize,
    lengths: Vec<usize>,
    include_origin: bool,
}

impl WalkEnsemble {
    pub fn new(d: usize, lengths: Vec<usize>, include_origin: bool) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension d must be at least 1".into()));
        }
        if lengths.is_empty() {
            return Err(Error::Domain("an ensemble needs at least one walk".into()));
        }
        if let Some(l) = lengths.iter().position(|&n| n == 0) {
            return Err(Error::Domain(format!("walk {} has length 0; every walk needs n >= 1", l + 1)));
        }
        Ok(Self {
            d,
            lengths,
            include_origin,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn m(&self) -> usize {
        self.lengths.len()
    }

    pub fn include_origin(&self) -> bool {
        self.include_origin
    }

    pub fn total_steps(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Number of points whose hull is taken, the origin included when adjoined.
    pub fn point_count(&self) -> usize {
        self.total_steps() + usize::from(self.include_origin)
    }

    pub fn max_length(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    /// The hull is full-dimensional almost surely iff there are at least d+1 points.
    pub fn is_full_dimensional(&self) -> bool {
        self.point_count() > self.d
    }

    /// Same walks in another ambient dimension.
    pub fn with_dimension(&self, d: usize) -> Result<Self> {
        Self::new(d, self.lengths.clone(), self.include_origin)
    }
}

/// A candidate facet: which steps of which walks supply its vertices, and
/// whether the origin is one of them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FacetSpec {
    indices: Vec<Vec<usize>>,
    with_origin_vertex: bool,
}

impl FacetSpec {
    /// Validates the index lists against `ensemble`.
    pub fn new(indices: Vec<Vec<usize>>, with_origin_vertex: bool, ensemble: &WalkEnsemble) -> Result<Self> {
        let spec = Self {
            indices,
            with_origin_vertex,
        };
        spec.validate_for(ensemble)?;
        Ok(spec)
    }

    pub(crate) fn from_parts_unchecked(indices: Vec<Vec<usize>>, with_origin_vertex: bool) -> Self {
        Self {
            indices,
            with_origin_vertex,
        }
    }

    /// Parses per-walk index lists such as `"1,3;2"` (walks separated by `;`,
    /// an empty group meaning the walk contributes no vertex). Origin-vertex
    /// specs are recognized by their vertex count when the ensemble adjoins
    /// the origin.
    pub fn parse(text: &str, ensemble: &WalkEnsemble) -> Result<Self> {
        let groups: Vec<&str> = text.split(';').collect();
        if groups.len() != ensemble.m() {
            return Err(Error::InvalidSpec(format!(
                "spec lists {} walk groups but the ensemble has {} walks",
                groups.len(),
                ensemble.m()
            )));
        }
        let mut indices = Vec::with_capacity(groups.len());
        for (l, group) in groups.iter().enumerate() {
            let group = group.trim();
            let parsed: std::result::Result<Vec<usize>, _> = if group.is_empty() {
                Ok(Vec::new())
            } else {
                group.split(',').map(|s| s.trim().parse::<usize>()).collect()
            };
            let parsed = parsed.map_err(|e| {
                Error::InvalidSpec(format!("walk {} index list {group:?} is not a list of integers: {e}", l + 1))
            })?;
            indices.push(parsed);
        }
        let k: usize = indices.iter().map(Vec::len).sum();
        let with_origin = ensemble.include_origin() && k + 1 == ensemble.d();
        Self::new(indices, with_origin, ensemble)
    }

    pub fn validate_for(&self, ensemble: &WalkEnsemble) -> Result<()> {
        if self.indices.len() != ensemble.m() {
            return Err(Error::InvalidSpec(format!(
                "spec has {} walk groups but the ensemble has {} walks",
                self.indices.len(),
                ensemble.m()
            )));
        }
        for (l, (idx, &n)) in self.indices.iter().zip(ensemble.lengths()).enumerate() {
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSpec(format!(
                    "walk {} indices {idx:?} are not strictly increasing",
                    l + 1
                )));
            }
            if let Some(&bad) = idx.iter().find(|&&i| i < 1 || i > n) {
                return Err(Error::InvalidSpec(format!(
                    "walk {} index {bad} lies outside 1..={n}",
                    l + 1
                )));
            }
        }
        let k = self.vertex_count_from_walks();
        let expected = if self.with_origin_vertex {
            ensemble.d() - 1
        } else {
            ensemble.d()
        };
        if self.with_origin_vertex && !ensemble.include_origin() {
            return Err(Error::InvalidSpec(
                "origin-vertex spec given for a hull without the origin".into(),
            ));
        }
        if k != expected {
            return Err(Error::InvalidSpec(format!(
                "walk indices supply {k} vertices but a {} facet in d = {} needs {expected}",
                if self.with_origin_vertex { "origin" } else { "non-origin" },
                ensemble.d()
            )));
        }
        Ok(())
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn with_origin_vertex(&self) -> bool {
        self.with_origin_vertex
    }

    /// `(k_1, …, k_m)`.
    pub fn ks(&self) -> Vec<usize> {
        self.indices.iter().map(Vec::len).collect()
    }

    fn vertex_count_from_walks(&self) -> usize {
        self.indices.iter().map(Vec::len).sum()
    }

    /// Dimension of the ambient space this spec is a facet candidate in.
    pub fn dimension(&self) -> usize {
        self.vertex_count_from_walks() + usize::from(self.with_origin_vertex)
    }

    /// One [`WalkBlock`] per walk, pairing its index tuple with its length.
    pub fn blocks<'a>(&'a self, ensemble: &'a WalkEnsemble) -> impl Iterator<Item = WalkBlock<'a>> + 'a {
        self.indices
            .iter()
            .zip(ensemble.lengths())
            .map(|(indices, &n)| WalkBlock { n, indices })
    }

    /// Index lists in the `"1,3;2"` syntax accepted by [`FacetSpec::parse`].
    pub fn index_string(&self) -> String {
        self.indices
            .iter()
            .map(|g| g.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Display for FacetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.with_origin_vertex {
            write!(f, "0+[{}]", self.index_string())
        } else {
            write!(f, "[{}]", self.index_string())
        }
    }
}

/// The part of a facet spec coming from a single walk.
///
/// Every per-walk factor of the facet formulas is built from the first index,
/// the gaps between consecutive indices, and the stay-on-one-side probability
/// of the remaining tail. A walk contributing no vertex has no first index
/// or gaps, and its tail is the whole walk.
#[derive(Debug, Clone, Copy)]
pub struct WalkBlock<'a> {
    pub n: usize,
    pub indices: &'a [usize],
}

impl WalkBlock<'_> {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.indices.first().copied()
    }

    pub fn gaps(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.windows(2).map(|w| w[1] - w[0])
    }

    /// Steps after the last vertex; all `n` when the walk contributes none.
    pub fn tail_len(&self) -> usize {
        self.n - self.indices.last().copied().unwrap_or(0)
    }

    /// `(2t-1)!!/(2t)!!` for the tail length `t`.
    pub fn tail_ratio(&self) -> BigRational {
        double_factorial_ratio(self.tail_len() as u64)
    }
}

/// Tuples `(k_1, …, k_m)` with `Σ k_l = total` and `0 ≤ k_l ≤ caps_l`, in
/// lexicographic order.
pub fn compositions(total: usize, caps: &[usize]) -> Compositions {
    let first = smallest_fill(total, caps);
    Compositions {
        caps: caps.to_vec(),
        current: first,
    }
}

/// Lexicographically smallest tuple with the given sum: fill from the right.
fn smallest_fill(total: usize, caps: &[usize]) -> Option<Vec<usize>> {
    let mut rem = total;
    let mut out = vec![0; caps.len()];
    for (slot, &cap) in out.iter_mut().zip(caps).rev() {
        let take = rem.min(cap);
        *slot = take;
        rem -= take;
    }
    (rem == 0).then_some(out)
}

#[derive(Debug, Clone)]
pub struct Compositions {
    caps: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let m = out.len();
        // Find the rightmost position that can grow while the suffix still
        // absorbs the remaining sum minus one.
        let mut suffix_sum: usize = 0;
        for i in (0..m).rev() {
            if i + 1 < m {
                suffix_sum += out[i + 1];
            }
            if out[i] < self.caps[i] && suffix_sum >= 1 {
                if let Some(fill) = smallest_fill(suffix_sum - 1, &self.caps[i + 1..]) {
                    let mut next = out[..i].to_vec();
                    next.push(out[i] + 1);
                    next.extend(fill);
                    self.current = Some(next);
                    break;
                }
            }
        }
        Some(out)
    }
}

/// Strictly increasing `k`-tuples from `{1, …, n}`, lexicographically. `k = 0`
/// yields the single empty tuple.
pub fn index_tuples(k: usize, n: usize) -> Result<IndexTuples> {
    if k > n {
        return Err(Error::Domain(format!("cannot choose {k} indices from 1..={n}")));
    }
    Ok(IndexTuples {
        n,
        current: Some((1..=k).collect()),
    })
}

#[derive(Debug, Clone)]
pub struct IndexTuples {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for IndexTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        if advance_combination(&mut next, self.n) {
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Advances a strictly increasing tuple to its lexicographic successor.
fn advance_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for i in (0..k).rev() {
        if comb[i] < n - (k - 1 - i) {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Every candidate facet of the ensemble's hull: specs with `Σ k_l = d`, then
/// (when the origin is adjoined) the origin-vertex specs with `Σ k_l = d - 1`.
pub fn facet_specs(ensemble: &WalkEnsemble) -> FacetSpecs {
    let mut layers = vec![(ensemble.d(), false)];
    if ensemble.include_origin() {
        layers.push((ensemble.d() - 1, true));
    }
    FacetSpecs {
        lengths: ensemble.lengths().to_vec(),
        layers,
        layer: 0,
        compositions: None,
        current: None,
    }
}

/// Only the specs with the given origin flag.
pub fn facet_specs_in_layer(ensemble: &WalkEnsemble, with_origin_vertex: bool) -> impl Iterator<Item = FacetSpec> {
    facet_specs(ensemble).filter(move |s| s.with_origin_vertex() == with_origin_vertex)
}

#[derive(Debug, Clone)]
pub struct FacetSpecs {
    lengths: Vec<usize>,
    layers: Vec<(usize, bool)>,
    layer: usize,
    compositions: Option<Compositions>,
    current: Option<Vec<Vec<usize>>>,
}

impl FacetSpecs {
    fn load_next_composition(&mut self) -> bool {
        loop {
            if self.layer >= self.layers.len() {
                return false;
            }
            let (total, _) = self.layers[self.layer];
            let comps = self
                .compositions
                .get_or_insert_with(|| compositions(total, &self.lengths));
            if let Some(ks) = comps.next() {
                self.current = Some(ks.iter().map(|&k| (1..=k).collect()).collect());
                return true;
            }
            self.compositions = None;
            self.layer += 1;
        }
    }
}

impl Iterator for FacetSpecs {
    type Item = FacetSpec;

    fn next(&mut self) -> Option<FacetSpec> {
        if self.current.is_none() && !self.load_next_composition() {
            return None;
        }
        let indices = self.current.take()?;
        let origin = self.layers[self.layer].1;
        let out = FacetSpec::from_parts_unchecked(indices.clone(), origin);
        // odometer over the per-walk combinations, last walk fastest
        let mut next = indices;
        let mut advanced = false;
        for l in (0..next.len()).rev() {
            if advance_combination(&mut next[l], self.lengths[l]) {
                advanced = true;
                break;
            }
            let k = next[l].len();
            next[l] = (1..=k).collect();
        }
        if advanced {
            self.current = Some(next);
        }
        Some(out)
    }
}

/// `C(N, d)` (plus `C(N, d-1)` with the origin), `N = Σ n_l`, by Vandermonde.
pub fn spec_count(ensemble: &WalkEnsemble) -> BigInt {
    let total = ensemble.total_steps() as u64;
    let d = ensemble.d() as u64;
    let mut count = binomial(total, d);
    if ensemble.include_origin() {
        count += binomial(total, d - 1);
    }
    count
}

/// Coefficients of `∏_l (t+1)(t+3)…(t+2n_l-1)`, index `j` holding the
/// coefficient of `t^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyCoeffs {
    pub coeffs: Vec<BigUint>,
}

impl PolyCoeffs {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: i64) -> BigInt {
        let t = BigInt::from(t);
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * &t + BigInt::from(c.clone()))
    }

    pub fn coeff(&self, j: usize) -> BigUint {
        self.coeffs.get(j).cloned().unwrap_or_default()
    }
}

pub fn nonabsorption_poly(lengths: &[usize]) -> PolyCoeffs {
    let mut coeffs = vec![BigUint::one()];
    for &n in lengths {
        for root in (1..2 * n).step_by(2) {
            // multiply by (t + root)
            let mut next = vec![BigUint::zero(); coeffs.len() + 1];
            for (j, c) in coeffs.iter().enumerate() {
                next[j] += c * BigUint::from(root);
                next[j + 1] += c;
            }
            coeffs = next;
        }
    }
    PolyCoeffs { coeffs }
}

/// `P[0 ∉ conv]` for the ensemble's walk positions:
/// `2 (P_{d-1} + P_{d-3} + …) / ∏_l (2n_l)!!`.
pub fn nonabsorption_probability(d: usize, lengths: &[usize]) -> Result<BigRational> {
    if d == 0 {
        return Err(Error::Domain("dimension d must be at least 1".into()));
    }
    let poly = nonabsorption_poly(lengths);
    let mut slice = BigUint::zero();
    let mut j = d as i64 - 1;
    while j >= 0 {
        slice += poly.coeff(j as usize);
        j -= 2;
    }
    let denom: BigUint = lengths
        .iter()
        .flat_map(|&n| (1..=n).map(|k| BigUint::from(2 * k)))
        .product();
    Ok(BigRational::new(BigInt::from(slice) * 2, BigInt::from(denom)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ens(d: usize, lengths: &[usize], origin: bool) -> WalkEnsemble {
        WalkEnsemble::new(d, lengths.to_vec(), origin).unwrap()
    }

    #[test]
    fn composition_examples() {
        assert_eq!(compositions(2, &[1, 1]).collect::<Vec<_>>(), vec![vec![1, 1]]);
        assert_eq!(
            compositions(2, &[2, 2]).collect::<Vec<_>>(),
            vec![vec![0, 2], vec![1, 1], vec![2, 0]]
        );
        assert!(compositions(3, &[1, 1]).next().is_none());
        assert_eq!(compositions(0, &[3, 1]).collect::<Vec<_>>(), vec![vec![0, 0]]);
    }

    #[test]
    fn compositions_match_brute_force() {
        let caps = [2, 0, 3, 1];
        for total in 0..8 {
            let got: Vec<_> = compositions(total, &caps).collect();
            let mut want = Vec::new();
            for a in 0..=2 {
                for b in 0..=0 {
                    for c in 0..=3 {
                        for d in 0..=1 {
                            if a + b + c + d == total {
                                want.push(vec![a, b, c, d]);
                            }
                        }
                    }
                }
            }
            assert_eq!(got, want, "total {total}");
        }
    }

    #[test]
    fn index_tuple_examples() {
        assert_eq!(index_tuples(1, 2).unwrap().collect::<Vec<_>>(), vec![vec![1], vec![2]]);
        assert_eq!(
            index_tuples(2, 3).unwrap().collect::<Vec<_>>(),
            vec![vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(index_tuples(3, 3).unwrap().collect::<Vec<_>>(), vec![vec![1, 2, 3]]);
        assert!(index_tuples(4, 3).is_err());
        assert_eq!(index_tuples(0, 3).unwrap().count(), 1);
    }

    #[test]
    fn facet_spec_examples() {
        let specs: Vec<_> = facet_specs(&ens(2, &[2], false)).collect();
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].indices(), &[vec![1, 2]]);

        let specs: Vec<_> = facet_specs(&ens(2, &[2], true)).collect();
        assert_eq!(specs.len(), 3);
        assert_eq!(specs.iter().filter(|s| s.with_origin_vertex()).count(), 2);

        let specs: Vec<_> = facet_specs(&ens(1, &[1, 1], false)).collect();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].indices(), &[vec![], vec![1]]);
        assert_eq!(specs[1].indices(), &[vec![1], vec![]]);
    }

    #[test]
    fn spec_counts_agree_with_independent_count() {
        for lengths in [vec![3], vec![2, 3], vec![1, 1, 1], vec![2, 2], vec![4, 1, 2]] {
            for d in 1..=4 {
                for origin in [false, true] {
                    let e = ens(d, &lengths, origin);
                    let specs: Vec<_> = facet_specs(&e).collect();
                    let mut unique = specs.clone();
                    unique.sort();
                    unique.dedup();
                    assert_eq!(unique.len(), specs.len());
                    for s in &specs {
                        s.validate_for(&e).unwrap();
                    }
                    // Σ over compositions of ∏ C(n_l, k_l)
                    let mut layers = vec![d];
                    if origin {
                        layers.push(d - 1);
                    }
                    let independent: BigInt = layers
                        .into_iter()
                        .flat_map(|t| compositions(t, &lengths).collect::<Vec<_>>())
                        .map(|ks| {
                            ks.iter()
                                .zip(&lengths)
                                .map(|(&k, &n)| binomial(n as u64, k as u64))
                                .product::<BigInt>()
                        })
                        .sum();
                    assert_eq!(BigInt::from(specs.len()), independent);
                    assert_eq!(spec_count(&e), independent);
                }
            }
        }
    }

    #[test]
    fn poly_examples() {
        let c = |v: &[u64]| v.iter().map(|&x| BigUint::from(x)).collect::<Vec<_>>();
        assert_eq!(nonabsorption_poly(&[1]).coeffs, c(&[1, 1]));
        assert_eq!(nonabsorption_poly(&[2]).coeffs, c(&[3, 4, 1]));
        assert_eq!(nonabsorption_poly(&[1, 1]).coeffs, c(&[1, 2, 1]));
    }

    #[test]
    fn poly_invariants() {
        for lengths in [vec![1], vec![5], vec![2, 3], vec![1, 4, 2], vec![12, 11]] {
            let p = nonabsorption_poly(&lengths);
            assert_eq!(p.degree(), lengths.iter().sum::<usize>());
            assert_eq!(p.coeffs.last().unwrap(), &BigUint::one());
            let even_df: BigInt = lengths
                .iter()
                .flat_map(|&n| (1..=n).map(|k| BigInt::from(2 * k)))
                .product();
            assert_eq!(p.eval(1), even_df);
            assert!(p.eval(-1).is_zero());
        }
    }

    #[test]
    fn nonabsorption_examples() {
        for n in 1..8usize {
            let want = double_factorial_ratio(n as u64) * BigRational::from_integer(2.into());
            assert_eq!(nonabsorption_probability(1, &[n]).unwrap(), want);
        }
        assert_eq!(nonabsorption_probability(2, &[2]).unwrap(), rat(1, 1));
        assert_eq!(nonabsorption_probability(2, &[1, 1, 1]).unwrap(), rat(3, 4));
    }

    #[test]
    fn parse_and_validate_specs() {
        let e = ens(2, &[2, 3], false);
        let s = FacetSpec::parse("1;3", &e).unwrap();
        assert_eq!(s.ks(), vec![1, 1]);
        assert_eq!(s.index_string(), "1;3");
        assert!(FacetSpec::parse(";1,3", &e).is_ok());
        let err = FacetSpec::parse("2,1;", &e).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"));
        let err = FacetSpec::parse("1;4", &e).unwrap_err();
        assert!(err.to_string().contains("outside"));
        let err = FacetSpec::parse("1", &e).unwrap_err();
        assert!(err.to_string().contains("walk groups"));
        let err = FacetSpec::parse("1;", &e).unwrap_err();
        assert!(err.to_string().contains("needs 2"));

        let eo = ens(2, &[3], true);
        let s = FacetSpec::parse("1", &eo).unwrap();
        assert!(s.with_origin_vertex());
        assert_eq!(s.dimension(), 2);
    }

    #[test]
    fn walk_block_convention() {
        let e = ens(2, &[3, 4], true);
        let s = FacetSpec::parse(";2", &e).unwrap();
        let blocks: Vec<_> = s.blocks(&e).collect();
        assert!(blocks[0].is_empty());
        assert_eq!(blocks[0].tail_ratio(), double_factorial_ratio(3));
        assert_eq!(blocks[1].first(), Some(2));
        assert_eq!(blocks[1].tail_ratio(), double_factorial_ratio(2));
    }
}
