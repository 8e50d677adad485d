// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Browser bindings: persistence curves, expected facet counts checked against
//! simulation, and one sampled planar hull for drawing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use walkhull::aggregates::expected_facets;
use walkhull::enumeration::WalkEnsemble;
use walkhull::montecarlo::{estimate, hull_facets, sample_ensemble, McOptions, PointLabel, Statistic, StepDistribution};
use walkhull::persistence::PersistenceEvaluator;

const MAX_STEPS: usize = 200;

fn parse_lengths(text: &str) -> walkhull::Result<Vec<usize>> {
    let lengths: Result<Vec<usize>, _> = text.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let lengths = lengths.map_err(|_| walkhull::Error::Domain(format!("lengths must be integers, got {text:?}")))?;
    if lengths.iter().sum::<usize>() > MAX_STEPS {
        return Err(walkhull::Error::Domain(format!("at most {MAX_STEPS} steps in total")));
    }
    Ok(lengths)
}

/// `p_n(r)` for `n = 1..=n_max` on an even grid of `points` values of `r`,
/// row by row.
pub fn persistence_grid(n_max: usize, r_min: f64, r_max: f64, points: usize) -> walkhull::Result<Vec<f64>> {
    if points < 2 || !(r_max > r_min) || n_max > 64 {
        return Err(walkhull::Error::Domain("need points >= 2, r_min < r_max and n_max <= 64".into()));
    }
    let eval = PersistenceEvaluator::with_defaults(n_max)?;
    let rs: Vec<f64> = (0..points)
        .map(|i| r_min + (r_max - r_min) * i as f64 / (points - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(n_max * points);
    for n in 1..=n_max {
        for &r in &rs {
            out.push(eval.p(n, r)?.value);
        }
    }
    Ok(out)
}

/// Formula value, then Monte Carlo mean and standard error when `samples > 0`.
pub fn facet_comparison(d: usize, lengths: &str, origin: bool, samples: usize, seed: u64) -> walkhull::Result<Vec<f64>> {
    let ens = WalkEnsemble::new(d, parse_lengths(lengths)?, origin)?;
    let mut out = vec![expected_facets(&ens)?.value];
    if samples > 0 {
        let est = estimate(
            &ens,
            &StepDistribution::StandardGaussian,
            Statistic::FacetCount,
            &McOptions::new(samples, seed),
        )?;
        out.extend([est.mean, est.stderr]);
    }
    Ok(out)
}

/// One planar sample: point coordinates, the walk each point belongs to
/// (-1 for the origin) and the hull edges as index pairs.
pub struct PlanarHull {
    pub coords: Vec<f64>,
    pub walks: Vec<i32>,
    pub edges: Vec<u32>,
}

pub fn planar_hull(lengths: &str, origin: bool, seed: u64) -> walkhull::Result<PlanarHull> {
    let ens = WalkEnsemble::new(2, parse_lengths(lengths)?, origin)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud = sample_ensemble(&ens, &StepDistribution::StandardGaussian, &mut rng);
    let hull = hull_facets(&cloud).map_err(|e| walkhull::Error::Domain(format!("{e:?}")))?;
    Ok(PlanarHull {
        coords: cloud.points().iter().flatten().copied().collect(),
        walks: cloud
            .labels()
            .iter()
            .map(|l| match l {
                PointLabel::Origin => -1,
                PointLabel::Walk { walk, .. } => *walk as i32,
            })
            .collect(),
        edges: hull.facets.iter().flat_map(|f| f.vertices.iter().map(|&v| v as u32)).collect(),
    })
}

fn js(e: walkhull::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = persistenceGrid)]
pub fn persistence_grid_js(n_max: usize, r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    persistence_grid(n_max, r_min, r_max, points).map_err(js)
}

#[wasm_bindgen(js_name = facetComparison)]
pub fn facet_comparison_js(d: usize, lengths: &str, origin: bool, samples: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    facet_comparison(d, lengths, origin, samples, u64::from(seed)).map_err(js)
}

#[wasm_bindgen(js_name = PlanarHull)]
pub struct PlanarHullJs(PlanarHull);

#[wasm_bindgen(js_class = PlanarHull)]
impl PlanarHullJs {
    #[wasm_bindgen(getter)]
    pub fn coords(&self) -> Vec<f64> {
        self.0.coords.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn walks(&self) -> Vec<i32> {
        self.0.walks.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn edges(&self) -> Vec<u32> {
        self.0.edges.clone()
    }
}

#[wasm_bindgen(js_name = planarHull)]
pub fn planar_hull_js(lengths: &str, origin: bool, seed: u32) -> Result<PlanarHullJs, JsError> {
    planar_hull(lengths, origin, u64::from(seed)).map(PlanarHullJs).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rows_follow_persistence() {
        let g = persistence_grid(3, -1.0, 1.0, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert!((g[1] - 0.5).abs() < 1e-9);
        assert!((g[4] - 0.375).abs() < 1e-9);
        assert!((g[7] - 0.3125).abs() < 1e-9);
    }

    #[test]
    fn facet_comparison_agrees() {
        let v = facet_comparison(2, "3, 2", true, 20_000, 5).unwrap();
        assert!(((v[1] - v[0]) / v[2]).abs() < 4.0, "{v:?}");
        assert!(facet_comparison(2, "3,x", false, 0, 1).is_err());
        assert!(facet_comparison(2, "150,100", false, 0, 1).is_err());
    }

    #[test]
    fn planar_hull_edges_close_up() {
        let h = planar_hull("6,4", true, 3).unwrap();
        assert_eq!(h.coords.len(), 2 * 11);
        assert_eq!(h.walks[0], -1);
        let mut degree = [0; 11];
        for &v in &h.edges {
            degree[v as usize] += 1;
        }
        assert!(degree.iter().all(|&k| k == 0 || k == 2));
    }
}
