//! One function per subcommand, each turning a resolved config into a report.

use super::config::{Dist, Kind, RunConfig};
use super::output::{Record, Report};
use super::CliError;
use crate::aggregates::{
    expected_facets, expected_origin_facets, expected_volume, gaussian_polytope_stats, hull_statistic,
    single_walk_facets, single_walk_volume, single_walk_volume_display, HullStatistic,
};
use crate::enumeration::{facet_specs, nonabsorption_probability, FacetSpec, WalkEnsemble};
use crate::facet_formulas::{FacetCalculator, QuantityKind};
use crate::montecarlo::{estimate_many, McEstimate, Statistic};
use crate::numerics::{rational_to_f64, BigRational};
use crate::persistence::PersistenceEvaluator;
use crate::Error;

/// Largest accepted |z| in `verify`.
pub const Z_MAX: f64 = 4.0;

pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_Z_FAILURE: i32 = 4;

fn report(cfg: &RunConfig, results: Vec<Record>, warnings: Vec<String>, exit_code: i32) -> Report {
    Report {
        config: cfg.clone(),
        results,
        warnings,
        exit_code,
    }
}

fn specs_for(cfg: &RunConfig, ens: &WalkEnsemble) -> Result<Vec<FacetSpec>, CliError> {
    match cfg.spec.as_deref() {
        None => Err(CliError::Usage(format!("{} needs --spec", cfg.command))),
        Some("all") => Ok(facet_specs(ens).collect()),
        Some(text) => Ok(vec![FacetSpec::parse(text, ens)?]),
    }
}

fn degeneracy_warning(ens: &WalkEnsemble) -> Option<String> {
    (!ens.is_full_dimensional()).then(|| {
        format!(
            "hull of {} points in dimension {} is not full-dimensional; surface and volume vanish",
            ens.point_count(),
            ens.d()
        )
    })
}

pub fn persistence(cfg: &RunConfig) -> Result<Report, CliError> {
    let n_max = cfg
        .n_max
        .or(cfg.n)
        .ok_or_else(|| CliError::Usage("persistence needs --n-max".into()))?;
    if n_max == 0 {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let rs = cfg.r.clone().unwrap_or_else(|| vec![0.0]);
    if let Some(bad) = rs.iter().find(|r| !r.is_finite()) {
        return Err(CliError::Usage(format!("--r values must be finite, got {bad}")));
    }
    let eval = PersistenceEvaluator::with_defaults(n_max)?;
    eval.prefetch(&rs)?;
    let mut results = Vec::new();
    for &r in &rs {
        for n in 1..=n_max {
            let p = eval.p(n, r)?;
            let mut rec = Record::new(format!("n={n} r={r}"))
                .int("n", n)
                .num("r", r)
                .num("p", p.value)
                .num("p-abs-err", p.estimated_abs_error);
            rec = match eval.q(n, r) {
                Ok(q) => rec.num("q", q.value).num("q-abs-err", q.estimated_abs_error),
                Err(Error::OutOfRange { limit, .. }) => rec.text("q", "out-of-range").num("q-limit", limit),
                Err(e) => return Err(e.into()),
            };
            results.push(rec);
        }
    }
    Ok(report(cfg, results, Vec::new(), 0))
}

pub fn facet_prob(cfg: &RunConfig) -> Result<Report, CliError> {
    let ens = cfg.ensemble()?;
    let specs = specs_for(cfg, &ens)?;
    let calc = FacetCalculator::new(ens.clone(), cfg.quadrature())?;
    let mut results = Vec::new();
    for spec in &specs {
        let prob = calc.quantity(spec, QuantityKind::Probability)?;
        let mut rec = Record::new(spec.to_string())
            .text("spec", spec.index_string())
            .text("origin-vertex", spec.with_origin_vertex().to_string())
            .num("probability", prob.value);
        if let Some(exact) = &prob.exact {
            rec = rec.exact(exact);
        }
        if let Some(cert) = prob.certificate {
            rec = rec.num("abs-err", cert.estimated_abs_error);
        }
        if ens.is_full_dimensional() {
            let vol = calc.quantity(spec, QuantityKind::VolumeTerm)?;
            rec = rec.num("volume-term", vol.value);
        }
        results.push(rec);
    }
    let warnings: Vec<String> = degeneracy_warning(&ens).into_iter().collect();
    let code = if warnings.is_empty() { 0 } else { EXIT_DEGENERATE };
    Ok(report(cfg, results, warnings, code))
}

fn statistic_record(stat: &HullStatistic, name: &str) -> Record {
    let mut rec = Record::new(name)
        .num("value", stat.value)
        .int("terms", stat.term_count)
        .text("degenerate", stat.degenerate.to_string());
    if let Some(exact) = &stat.exact {
        rec = rec.exact(exact);
    }
    if let Some(cert) = stat.certificate {
        rec = rec.num("abs-err", cert.estimated_abs_error);
    }
    rec
}

fn kinds(cfg: &RunConfig, ens: &WalkEnsemble) -> Result<Vec<Kind>, CliError> {
    match cfg.kind {
        Some(Kind::OriginFacets) if !ens.include_origin() => {
            Err(CliError::Usage("--kind origin-facets needs --origin".into()))
        }
        Some(k) => Ok(vec![k]),
        None if ens.include_origin() => Ok(vec![Kind::Facets, Kind::OriginFacets, Kind::Surface, Kind::Volume]),
        None => Ok(vec![Kind::Facets, Kind::Surface, Kind::Volume]),
    }
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Facets => "facets",
        Kind::OriginFacets => "origin-facets",
        Kind::Surface => "surface",
        Kind::Volume => "volume",
    }
}

pub fn stats(cfg: &RunConfig) -> Result<Report, CliError> {
    let ens = cfg.ensemble()?;
    let calc = FacetCalculator::new(ens.clone(), cfg.quadrature())?;
    let mut results = Vec::new();
    for kind in kinds(cfg, &ens)? {
        let stat = hull_statistic(&calc, kind.statistic())?;
        results.push(statistic_record(&stat, kind_name(kind)));
    }
    let warnings: Vec<String> = degeneracy_warning(&ens).into_iter().collect();
    let code = if warnings.is_empty() { 0 } else { EXIT_DEGENERATE };
    Ok(report(cfg, results, warnings, code))
}

fn mc_statistic(kind: Kind) -> Statistic {
    match kind {
        Kind::Facets => Statistic::FacetCount,
        Kind::OriginFacets => Statistic::OriginFacetCount,
        Kind::Surface => Statistic::Surface,
        Kind::Volume => Statistic::Volume,
    }
}

fn estimate_record(name: &str, est: &McEstimate) -> Record {
    Record::new(name)
        .num("mc-mean", est.mean)
        .num("mc-stderr", est.stderr)
        .int("samples", est.samples)
        .int("discards", est.degenerate_discards)
        .int("seed", est.seed)
}

fn discard_warning(name: &str, est: &McEstimate) -> Option<String> {
    (!est.is_valid()).then(|| {
        format!(
            "{name}: {} of {} samples discarded as degenerate",
            est.degenerate_discards,
            est.samples + est.degenerate_discards
        )
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Report, CliError> {
    let ens = cfg.ensemble()?;
    let mut stats: Vec<Statistic> = match (&cfg.spec, cfg.kind) {
        (Some(_), _) => specs_for(cfg, &ens)?.into_iter().map(Statistic::FacetIndicator).collect(),
        (None, Some(_)) => kinds(cfg, &ens)?.into_iter().map(mc_statistic).collect(),
        (None, None) => {
            let mut v: Vec<Statistic> = kinds(cfg, &ens)?.into_iter().map(mc_statistic).collect();
            v.push(Statistic::VertexCount);
            v.push(Statistic::OriginAbsorbed);
            v
        }
    };
    if !ens.is_full_dimensional() {
        // every sampled hull is flat; only the absorption indicator is defined
        stats.retain(|s| matches!(s, Statistic::OriginAbsorbed));
    }
    let estimates = estimate_many(&ens, &cfg.dist.step_distribution(), &stats, &cfg.mc_options())?;
    let mut warnings: Vec<String> = degeneracy_warning(&ens).into_iter().collect();
    let mut results = Vec::new();
    for (stat, est) in stats.iter().zip(&estimates) {
        let name = stat.name();
        warnings.extend(discard_warning(&name, est));
        results.push(estimate_record(&name, est));
    }
    let code = if warnings.is_empty() { 0 } else { EXIT_DEGENERATE };
    Ok(report(cfg, results, warnings, code))
}

struct Expectation {
    statistic: Statistic,
    value: f64,
    exact: Option<BigRational>,
}

fn expectations(cfg: &RunConfig, ens: &WalkEnsemble) -> Result<Vec<Expectation>, CliError> {
    let gaussian = cfg.dist == Dist::Gaussian;
    let calc = FacetCalculator::new(ens.clone(), cfg.quadrature())?;
    let mut out = Vec::new();
    if cfg.spec.is_some() {
        for spec in specs_for(cfg, ens)? {
            if !gaussian && !spec.with_origin_vertex() {
                return Err(CliError::Usage(format!(
                    "facet {spec} has no origin vertex; its probability is only known for --dist gaussian"
                )));
            }
            let q = calc.quantity(&spec, QuantityKind::Probability)?;
            out.push(Expectation {
                statistic: Statistic::FacetIndicator(spec),
                value: q.value,
                exact: q.exact,
            });
        }
        return Ok(out);
    }
    for kind in kinds(cfg, ens)? {
        let distribution_free = kind == Kind::OriginFacets;
        if !gaussian && !distribution_free {
            if cfg.kind.is_some() {
                return Err(CliError::Usage(format!(
                    "--kind {} is only known for --dist gaussian",
                    kind_name(kind)
                )));
            }
            continue;
        }
        if !ens.is_full_dimensional() && kind != Kind::Facets {
            continue;
        }
        let stat = match kind {
            Kind::OriginFacets => expected_origin_facets(ens)?,
            other => hull_statistic(&calc, other.statistic())?,
        };
        out.push(Expectation {
            statistic: mc_statistic(kind),
            value: stat.value,
            exact: stat.exact,
        });
    }
    if cfg.kind.is_none() {
        let absorbed = BigRational::from_integer(1.into()) - nonabsorption_probability(ens.d(), ens.lengths())?;
        out.push(Expectation {
            statistic: Statistic::OriginAbsorbed,
            value: rational_to_f64(&absorbed),
            exact: Some(absorbed),
        });
    }
    if !ens.is_full_dimensional() {
        out.retain(|e| matches!(e.statistic, Statistic::OriginAbsorbed));
    }
    Ok(out)
}

pub fn verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let ens = cfg.ensemble()?;
    let exps = expectations(cfg, &ens)?;
    verify_against(cfg, &ens, &exps)
}

fn verify_against(cfg: &RunConfig, ens: &WalkEnsemble, exps: &[Expectation]) -> Result<Report, CliError> {
    let stats: Vec<Statistic> = exps.iter().map(|e| e.statistic.clone()).collect();
    let estimates = estimate_many(ens, &cfg.dist.step_distribution(), &stats, &cfg.mc_options())?;
    let mut warnings: Vec<String> = degeneracy_warning(ens).into_iter().collect();
    let mut results = Vec::new();
    let mut z_failed = false;
    for (exp, est) in exps.iter().zip(&estimates) {
        let name = exp.statistic.name();
        let z = est.z_score(exp.value);
        let pass = z.abs() <= Z_MAX;
        z_failed |= !pass;
        warnings.extend(discard_warning(&name, est));
        let mut rec = estimate_record(&name, est).num("formula", exp.value).num("z", z).text("pass", pass.to_string());
        if let Some(exact) = &exp.exact {
            rec = rec.exact(exact);
        }
        results.push(rec);
    }
    if z_failed {
        warnings.push(format!("at least one comparison has |z| > {Z_MAX}"));
    }
    let code = if z_failed {
        EXIT_Z_FAILURE
    } else if !warnings.is_empty() {
        EXIT_DEGENERATE
    } else {
        0
    };
    Ok(report(cfg, results, warnings, code))
}

pub fn polytope(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.require_d()?;
    let m = cfg.m.ok_or_else(|| CliError::Usage("polytope needs --m".into()))?;
    let stats = gaussian_polytope_stats(m, d, cfg.origin, &cfg.quadrature())?;
    let results = vec![
        Record::new("facets").num("value", stats.facets),
        Record::new("volume").num("value", stats.volume),
    ];
    Ok(report(cfg, results, Vec::new(), 0))
}

pub fn single_walk(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.require_d()?;
    let n = cfg.n.ok_or_else(|| CliError::Usage("single-walk needs --n".into()))?;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    // conv(S_1, …, S_n) has the law of conv(S_0, …, S_{n-1})
    let ens = WalkEnsemble::new(d, vec![n], false)?;
    let closed = single_walk_facets(n - 1, d)?;
    let mut results = vec![Record::new("facets")
        .num("value", rational_to_f64(&closed))
        .exact(&closed)
        .num("from-specs", expected_facets(&ens)?.value)];
    let mut warnings: Vec<String> = degeneracy_warning(&ens).into_iter().collect();
    if ens.is_full_dimensional() {
        let volume = expected_volume(&ens)?.value;
        let display = single_walk_volume_display(n, d)?;
        results.push(
            Record::new("volume")
                .num("value", volume)
                .num("closed-form", single_walk_volume(n, d)?)
                .num("display", display)
                .num("display-minus-value", display - volume),
        );
        if (display - volume).abs() > 1e-6 * volume.abs() {
            warnings.push(format!(
                "the closed-form single-walk volume display gives {} but the facet sum gives {}",
                super::output::fmt_num(display),
                super::output::fmt_num(volume)
            ));
        }
    }
    let code = if ens.is_full_dimensional() { 0 } else { EXIT_DEGENERATE };
    Ok(report(cfg, results, warnings, code))
}
