//! Run configuration: flags, an optional flat key/value file, and the resolved
//! record echoed into every output.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::aggregates::StatisticKind;
use crate::enumeration::WalkEnsemble;
use crate::montecarlo::{McOptions, StepDistribution};
use crate::numerics::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Facets,
    OriginFacets,
    Surface,
    Volume,
}

impl Kind {
    pub fn statistic(self) -> StatisticKind {
        match self {
            Kind::Facets => StatisticKind::FacetCount,
            Kind::OriginFacets => StatisticKind::OriginFacetCount,
            Kind::Surface => StatisticKind::SurfaceArea,
            Kind::Volume => StatisticKind::Volume,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Dist {
    #[default]
    Gaussian,
    Uniform,
    Laplace,
}

impl Dist {
    pub fn step_distribution(self) -> StepDistribution {
        match self {
            Dist::Gaussian => StepDistribution::StandardGaussian,
            Dist::Uniform => StepDistribution::UniformCube { halfwidth: 1.0 },
            Dist::Laplace => StepDistribution::IsotropicLaplaceRadius { scale: 1.0 },
        }
    }
}

/// Flags shared by every subcommand. Each may also come from the config file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize, PartialEq)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Options {
    /// Ambient dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Walk lengths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    /// Adjoin the origin to the hull.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<bool>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Facet spec as per-walk index lists, e.g. "1,3;2", or "all".
    #[arg(long)]
    pub spec: Option<String>,
    /// Largest n for the persistence table.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Barrier values, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub r: Option<Vec<f64>>,
    /// Number of points of a Gaussian polytope.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of steps of a single walk.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dist: Option<Dist>,
}

impl Options {
    /// `self` with unset fields taken from `fallback`.
    pub fn or(self, fallback: Options) -> Options {
        Options {
            d: self.d.or(fallback.d),
            lengths: self.lengths.or(fallback.lengths),
            origin: self.origin.or(fallback.origin),
            kind: self.kind.or(fallback.kind),
            spec: self.spec.or(fallback.spec),
            n_max: self.n_max.or(fallback.n_max),
            r: self.r.or(fallback.r),
            m: self.m.or(fallback.m),
            n: self.n.or(fallback.n),
            samples: self.samples.or(fallback.samples),
            seed: self.seed.or(fallback.seed),
            workers: self.workers.or(fallback.workers),
            rel_tol: self.rel_tol.or(fallback.rel_tol),
            format: self.format.or(fallback.format),
            out: self.out.or(fallback.out),
            dist: self.dist.or(fallback.dist),
        }
    }
}

/// Reads a flat TOML document whose keys mirror the long flags.
pub fn read_config_file(path: &Path) -> Result<Options, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<Options, String> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    // accept "1,2,3" as well as [1, 2, 3] for list-valued keys
    let mut table = toml::Table::new();
    for (key, v) in value {
        let key = key.replace('_', "-");
        let v = match (key.as_str(), v) {
            ("lengths", toml::Value::String(s)) => toml::Value::Array(
                split_list::<i64>(&s)?.into_iter().map(toml::Value::Integer).collect(),
            ),
            ("r", toml::Value::String(s)) => {
                toml::Value::Array(split_list::<f64>(&s)?.into_iter().map(toml::Value::Float).collect())
            }
            ("r", toml::Value::Integer(i)) => toml::Value::Array(vec![toml::Value::Float(i as f64)]),
            ("r", toml::Value::Float(x)) => toml::Value::Array(vec![toml::Value::Float(x)]),
            ("r", toml::Value::Array(a)) => toml::Value::Array(
                a.into_iter()
                    .map(|x| match x {
                        toml::Value::Integer(i) => toml::Value::Float(i as f64),
                        other => other,
                    })
                    .collect(),
            ),
            ("rel-tol", toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        table.insert(key, v);
    }
    table.try_into().map_err(|e: toml::de::Error| e.message().to_string())
}

fn split_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("cannot parse list item {x:?}")))
        .collect()
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lengths: Option<Vec<usize>>,
    pub origin: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kind: Option<Kind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub rel_tol: f64,
    pub dist: Dist,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REL_TOL: f64 = 1e-9;

impl RunConfig {
    pub fn resolve(command: &str, opts: Options) -> Result<Self, CliError> {
        let cfg = RunConfig {
            command: command.to_string(),
            d: opts.d,
            lengths: opts.lengths,
            origin: opts.origin.unwrap_or(false),
            kind: opts.kind,
            spec: opts.spec,
            n_max: opts.n_max,
            r: opts.r,
            m: opts.m,
            n: opts.n,
            samples: opts.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: opts.seed.unwrap_or(DEFAULT_SEED),
            workers: opts.workers.unwrap_or(1),
            rel_tol: opts.rel_tol.unwrap_or(DEFAULT_REL_TOL),
            dist: opts.dist.unwrap_or_default(),
            format: opts.format.unwrap_or_default(),
            out: opts.out,
        };
        if cfg.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        if !(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0) {
            return Err(CliError::Usage(format!("--rel-tol must lie in (0, 1), got {}", cfg.rel_tol)));
        }
        Ok(cfg)
    }

    pub fn require_d(&self) -> Result<usize, CliError> {
        self.d.ok_or_else(|| CliError::Usage(format!("{} needs --d", self.command)))
    }

    pub fn ensemble(&self) -> Result<WalkEnsemble, CliError> {
        let d = self.require_d()?;
        let lengths = self
            .lengths
            .clone()
            .ok_or_else(|| CliError::Usage(format!("{} needs --lengths", self.command)))?;
        Ok(WalkEnsemble::new(d, lengths, self.origin)?)
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig::default().with_rel_tol(self.rel_tol)
    }

    pub fn mc_options(&self) -> McOptions {
        McOptions::new(self.samples, self.seed).with_workers(self.workers)
    }
}
