//! Experiment configuration documents, figure presets and their execution.
//!
//! Randomness flows from the single `seed` of a config:
//! every scenario's catalog is drawn from `derive_seed(seed, 0)` (version
//! splits for all objects first, then layer sizes), and replication `r`
//! uses the trace seed `derive_seed(seed, r + 1)`. Scenarios, policies and
//! budgets therefore share traces.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    asymptotic_hit_theorem1, asymptotic_hit_theorem2, mr_approximation, solve_characteristic_time,
    ClockMode, ContinuumScalingModel, LayerMass, LayeredScalingModel, Shape, DEFAULT_QUAD_TOL,
    DEFAULT_TOL,
};
use crate::catalog::{Catalog, OverheadModel};
use crate::error::{Error, Result};
use crate::policies::{hlfu_static_placement, static_optimal, PolicyKind, DEFAULT_TABLE_CAP};
use crate::sim::{self, approx_rows, report_rows, value_row, CsvRow, RowDetail, RowKind, Scenario, SimOptions};
use crate::workload::{
    derive_seed, parametric_layer_sizes, parametric_version_popularity, random_layer_sizes,
    seeded_rng, split_versions_three, split_versions_two, split_versions_uniform_decreasing,
    zipf_object_popularity,
};

/// What a config computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    /// Trace-driven simulation of every policy.
    Simulate,
    /// Working-set approximation (layered, and MR when MR sizes exist).
    Approx,
    /// Continuum limits against finite-size fixed points.
    Asymptotic,
    /// Approximation, simulation and exact static values side by side.
    Compare,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Simulate => "simulate",
            RunMode::Approx => "approx",
            RunMode::Asymptotic => "asymptotic",
            RunMode::Compare => "compare",
        }
    }
}

/// How each object's request probability is split over its versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VersionSpec {
    /// Random uniform split, sorted so lower versions are more popular.
    UniformDecreasing { versions: usize },
    /// `(α, 1 - α)`.
    Two { alpha: f64 },
    /// `(α, 1 - α)` for odd-numbered objects (1, 3, ...), `(other, 1 - other)`
    /// for the rest.
    TwoOddEven { alpha: f64, other_alpha: f64 },
    /// `(ζ, η, 1 - ζ - η)`.
    Three { zeta: f64, eta: f64 },
    /// Weights `(V - v + 1)^m`, normalized.
    Parametric { versions: usize, m: f64 },
    /// The same weights for every object, normalized.
    Explicit { weights: Vec<f64> },
}

impl VersionSpec {
    pub fn num_versions(&self) -> usize {
        match self {
            VersionSpec::UniformDecreasing { versions } | VersionSpec::Parametric { versions, .. } => *versions,
            VersionSpec::Two { .. } | VersionSpec::TwoOddEven { .. } => 2,
            VersionSpec::Three { .. } => 3,
            VersionSpec::Explicit { weights } => weights.len(),
        }
    }

    fn validate(&self, path: &str, errs: &mut Vec<String>) {
        let unit = |name: &str, x: f64, errs: &mut Vec<String>| {
            if !(0.0..=1.0).contains(&x) {
                errs.push(format!("{path}.{name}: must be in [0, 1], got {x}"));
            }
        };
        match self {
            VersionSpec::UniformDecreasing { versions } | VersionSpec::Parametric { versions, .. } if *versions == 0 => {
                errs.push(format!("{path}.versions: must be at least 1"));
            }
            VersionSpec::Parametric { m, .. } if !m.is_finite() => {
                errs.push(format!("{path}.m: must be finite, got {m}"));
            }
            VersionSpec::Two { alpha } => unit("alpha", *alpha, errs),
            VersionSpec::TwoOddEven { alpha, other_alpha } => {
                unit("alpha", *alpha, errs);
                unit("other_alpha", *other_alpha, errs);
            }
            VersionSpec::Three { zeta, eta } => {
                unit("zeta", *zeta, errs);
                unit("eta", *eta, errs);
                if zeta + eta > 1.0 + 1e-12 {
                    errs.push(format!("{path}: zeta + eta must not exceed 1, got {}", zeta + eta));
                }
            }
            VersionSpec::Explicit { weights }
                if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0 =>
            {
                errs.push(format!("{path}.weights: must be non-empty, non-negative and not all zero"));
            }
            _ => {}
        }
    }
}

/// How layer (and MR) sizes are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SizeSpec {
    /// Random integer layer sizes `>= 1` summing to `total`.
    RandomComposition { total: u64 },
    /// `δ = (ρ, 1 - ρ)`.
    TwoLayer { rho: f64 },
    /// `δ = (ρ, κ, 1 - ρ - κ)`.
    ThreeLayer { rho: f64, kappa: f64 },
    /// `δ(l) ∝ l^n`, summing to 1.
    Parametric { n: f64 },
    /// MR sizes `(β, 1)`; layered sizes carry `overhead_percent` on top.
    TwoVersionMr { beta: f64, overhead_percent: f64 },
    /// Explicit MR sizes per version with a layered overhead.
    Overhead { mr: Vec<f64>, overhead_percent: f64 },
    /// Explicit layer sizes; no MR sizes.
    Explicit { layers: Vec<f64> },
}

impl SizeSpec {
    /// Number of versions the rule fixes, if any.
    fn fixed_versions(&self) -> Option<usize> {
        match self {
            SizeSpec::RandomComposition { .. } | SizeSpec::Parametric { .. } => None,
            SizeSpec::TwoLayer { .. } | SizeSpec::TwoVersionMr { .. } => Some(2),
            SizeSpec::ThreeLayer { .. } => Some(3),
            SizeSpec::Overhead { mr, .. } => Some(mr.len()),
            SizeSpec::Explicit { layers } => Some(layers.len()),
        }
    }

    pub fn has_mr_sizes(&self) -> bool {
        matches!(self, SizeSpec::TwoVersionMr { .. } | SizeSpec::Overhead { .. })
    }

    fn validate(&self, path: &str, versions: usize, errs: &mut Vec<String>) {
        let unit = |name: &str, x: f64, errs: &mut Vec<String>| {
            if !(0.0..=1.0).contains(&x) {
                errs.push(format!("{path}.{name}: must be in [0, 1], got {x}"));
            }
        };
        let overhead = |o: f64, errs: &mut Vec<String>| {
            if !(o >= 0.0) || !o.is_finite() {
                errs.push(format!("{path}.overhead_percent: must be finite and non-negative, got {o}"));
            }
        };
        match self {
            SizeSpec::RandomComposition { total } => {
                if (*total as usize) < versions {
                    errs.push(format!("{path}.total: must be at least the number of versions ({versions}), got {total}"));
                }
            }
            SizeSpec::TwoLayer { rho } => unit("rho", *rho, errs),
            SizeSpec::ThreeLayer { rho, kappa } => {
                unit("rho", *rho, errs);
                unit("kappa", *kappa, errs);
                if rho + kappa > 1.0 + 1e-12 {
                    errs.push(format!("{path}: rho + kappa must not exceed 1, got {}", rho + kappa));
                }
            }
            SizeSpec::Parametric { n } => {
                if !n.is_finite() {
                    errs.push(format!("{path}.n: must be finite, got {n}"));
                }
            }
            SizeSpec::TwoVersionMr { beta, overhead_percent } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    errs.push(format!("{path}.beta: must be in (0, 1), got {beta}"));
                }
                overhead(*overhead_percent, errs);
            }
            SizeSpec::Overhead { mr, overhead_percent } => {
                if mr.is_empty() || mr[0] <= 0.0 || mr.windows(2).any(|w| !(w[1] > w[0])) {
                    errs.push(format!("{path}.mr: must be positive and strictly increasing"));
                }
                overhead(*overhead_percent, errs);
            }
            SizeSpec::Explicit { layers } => {
                if layers.is_empty() || layers.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
                    errs.push(format!("{path}.layers: must be non-empty and non-negative"));
                }
            }
        }
        if let Some(v) = self.fixed_versions() {
            if v != versions {
                errs.push(format!("{path}: size rule describes {v} versions but the version rule has {versions}"));
            }
        }
    }
}

/// Recipe for one catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub objects: usize,
    pub zipf_exponent: f64,
    pub versions: VersionSpec,
    pub sizes: SizeSpec,
}

impl ScenarioSpec {
    fn validate(&self, path: &str, errs: &mut Vec<String>) {
        if self.id.is_empty() {
            errs.push(format!("{path}.id: must not be empty"));
        }
        if self.objects == 0 {
            errs.push(format!("{path}.objects: must be at least 1"));
        }
        if !(self.zipf_exponent >= 0.0) || !self.zipf_exponent.is_finite() {
            errs.push(format!("{path}.zipf_exponent: must be finite and non-negative, got {}", self.zipf_exponent));
        }
        self.versions.validate(&format!("{path}.versions"), errs);
        self.sizes.validate(&format!("{path}.sizes"), self.versions.num_versions(), errs);
    }

    /// Builds the catalog, drawing any randomness from `seed`.
    pub fn build_catalog(&self, seed: u64) -> Result<Catalog> {
        let mut rng = seeded_rng(seed);
        let v = self.versions.num_versions();
        let q = zipf_object_popularity(self.objects, self.zipf_exponent)?;
        let mut rates = Vec::with_capacity(self.objects);
        for (d, &qd) in q.iter().enumerate() {
            let row = match &self.versions {
                VersionSpec::UniformDecreasing { versions } => split_versions_uniform_decreasing(qd, *versions, &mut rng),
                VersionSpec::Two { alpha } => split_versions_two(qd, *alpha)?.to_vec(),
                VersionSpec::TwoOddEven { alpha, other_alpha } => {
                    let a = if d % 2 == 0 { *alpha } else { *other_alpha };
                    split_versions_two(qd, a)?.to_vec()
                }
                VersionSpec::Three { zeta, eta } => split_versions_three(qd, *zeta, *eta)?.to_vec(),
                VersionSpec::Parametric { versions, m } => parametric_version_popularity(*versions, *m)
                    .into_iter()
                    .map(|g| g * qd)
                    .collect(),
                VersionSpec::Explicit { weights } => {
                    let s: f64 = weights.iter().sum();
                    weights.iter().map(|w| w / s * qd).collect()
                }
            };
            rates.push(row);
        }
        let fixed = |layers: Vec<f64>| vec![layers; self.objects];
        match &self.sizes {
            SizeSpec::RandomComposition { total } => {
                let mut layers = Vec::with_capacity(self.objects);
                for _ in 0..self.objects {
                    let sizes = random_layer_sizes(v, *total, &mut rng)?;
                    layers.push(sizes.into_iter().map(|s| s as f64).collect());
                }
                Catalog::from_rows(&layers, None, &rates)
            }
            SizeSpec::TwoLayer { rho } => Catalog::from_rows(&fixed(vec![*rho, 1.0 - rho]), None, &rates),
            SizeSpec::ThreeLayer { rho, kappa } => {
                Catalog::from_rows(&fixed(vec![*rho, *kappa, (1.0 - rho - kappa).max(0.0)]), None, &rates)
            }
            SizeSpec::Parametric { n } => Catalog::from_rows(&fixed(parametric_layer_sizes(v, *n)), None, &rates),
            SizeSpec::TwoVersionMr { beta, overhead_percent } => Catalog::with_overhead(
                &fixed(vec![*beta, 1.0]),
                OverheadModel::new(*overhead_percent)?,
                &rates,
            ),
            SizeSpec::Overhead { mr, overhead_percent } => {
                Catalog::with_overhead(&fixed(mr.clone()), OverheadModel::new(*overhead_percent)?, &rates)
            }
            SizeSpec::Explicit { layers } => Catalog::from_rows(&fixed(layers.clone()), None, &rates),
        }
    }
}

/// Popularity or version shape of a continuum model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSpec {
    Uniform,
    PowerLaw { exponent: f64 },
    Logarithmic { scale: f64 },
}

impl ShapeSpec {
    pub fn to_shape(self) -> Shape {
        match self {
            ShapeSpec::Uniform => Shape::Uniform,
            ShapeSpec::PowerLaw { exponent } => Shape::PowerLaw { exponent },
            ShapeSpec::Logarithmic { scale } => Shape::Logarithmic { scale },
        }
    }
}

/// Continuum-limit experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AsymptoticSpec {
    /// Finite versions: compares `h(d/D, l)` with the fixed point of the
    /// catalog of `objects[i]` objects at budget `b D`.
    Layered {
        popularity: ShapeSpec,
        version_prob: Vec<f64>,
        layer_size: Vec<f64>,
        b: Vec<f64>,
        objects: Vec<usize>,
    },
    /// Objects and versions both grow: compares `h(d/D, (l-1)/V)` with the
    /// fixed point at budget `b D V`.
    Continuum {
        popularity: ShapeSpec,
        versions: ShapeSpec,
        layer_size: f64,
        #[serde(default)]
        layer_mass: LayerMass,
        b: Vec<f64>,
        sizes: Vec<(usize, usize)>,
    },
}

impl AsymptoticSpec {
    fn validate(&self, errs: &mut Vec<String>) {
        let check_b = |b: &[f64], errs: &mut Vec<String>| {
            if b.is_empty() || b.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                errs.push("asymptotic.b: must be a non-empty list of positive values".into());
            }
        };
        let check_shape = |name: &str, s: &ShapeSpec, errs: &mut Vec<String>| {
            if let Err(e) = s.to_shape().validate() {
                errs.push(format!("asymptotic.{name}: {e}"));
            }
        };
        match self {
            AsymptoticSpec::Layered { popularity, version_prob, layer_size, b, objects } => {
                check_shape("popularity", popularity, errs);
                check_b(b, errs);
                let sum: f64 = version_prob.iter().sum();
                if version_prob.is_empty() || (sum - 1.0).abs() > 1e-9 || version_prob.iter().any(|g| *g < 0.0) {
                    errs.push(format!("asymptotic.version_prob: must be a probability vector, sums to {sum}"));
                }
                if layer_size.len() != version_prob.len() || layer_size.iter().any(|s| !(*s >= 0.0)) {
                    errs.push("asymptotic.layer_size: must be non-negative with one entry per version".into());
                }
                if objects.is_empty() || objects.contains(&0) {
                    errs.push("asymptotic.objects: must be a non-empty list of positive counts".into());
                }
            }
            AsymptoticSpec::Continuum { popularity, versions, layer_size, b, sizes, .. } => {
                check_shape("popularity", popularity, errs);
                check_shape("versions", versions, errs);
                check_b(b, errs);
                if !(*layer_size > 0.0) || !layer_size.is_finite() {
                    errs.push(format!("asymptotic.layer_size: must be positive, got {layer_size}"));
                }
                if sizes.is_empty() || sizes.iter().any(|&(d, v)| d == 0 || v == 0) {
                    errs.push("asymptotic.sizes: must be a non-empty list of positive (objects, versions)".into());
                }
            }
        }
    }
}

fn default_replications() -> usize {
    1
}

fn default_resolution() -> f64 {
    1.0
}

fn default_clock() -> ClockMode {
    ClockMode::DiscreteBernoulli
}

/// A complete, self-contained experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: RunMode,
    #[serde(default)]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default)]
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub budgets: Vec<f64>,
    /// Trace length per replication.
    #[serde(default)]
    pub requests: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_clock")]
    pub clock: ClockMode,
    /// Size quantum of the static-optimal knapsack.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub warmup_fraction: f64,
    #[serde(default)]
    pub detail: RowDetail,
    /// CSV file name; defaults to `<name>.csv`.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub asymptotic: Option<AsymptoticSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn catalog_seed(&self) -> u64 {
        derive_seed(self.seed, 0)
    }

    pub fn trace_seeds(&self) -> Vec<u64> {
        (0..self.replications as u64).map(|r| derive_seed(self.seed, r + 1)).collect()
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            resolution: self.resolution,
            warmup_fraction: self.warmup_fraction,
        }
    }

    fn simulates(&self) -> bool {
        matches!(self.mode, RunMode::Simulate | RunMode::Compare)
    }

    /// Checks every field, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.is_empty() {
            errs.push("name: must not be empty".into());
        }
        if self.mode == RunMode::Asymptotic {
            match &self.asymptotic {
                Some(a) => a.validate(&mut errs),
                None => errs.push("asymptotic: required when mode is asymptotic".into()),
            }
        } else {
            if self.scenarios.is_empty() {
                errs.push("scenarios: at least one scenario is required".into());
            }
            let mut ids = HashSet::new();
            for (i, s) in self.scenarios.iter().enumerate() {
                s.validate(&format!("scenarios[{i}]"), &mut errs);
                if !ids.insert(&s.id) {
                    errs.push(format!("scenarios[{i}].id: duplicate id {:?}", s.id));
                }
            }
            if self.budgets.is_empty() {
                errs.push("budgets: at least one budget is required".into());
            }
            for (i, b) in self.budgets.iter().enumerate() {
                if !(*b >= 0.0) || !b.is_finite() {
                    errs.push(format!("budgets[{i}]: must be finite and non-negative, got {b}"));
                }
            }
        }
        if self.simulates() {
            if self.policies.is_empty() {
                errs.push("policies: at least one policy is required to simulate".into());
            }
            if self.requests == 0 {
                errs.push("requests: must be at least 1".into());
            }
            if self.replications == 0 {
                errs.push("replications: must be at least 1".into());
            }
        }
        for (i, p) in self.policies.iter().enumerate() {
            if p.needs_mr_sizes() {
                for s in self.scenarios.iter().filter(|s| !s.sizes.has_mr_sizes()) {
                    errs.push(format!("policies[{i}]: {p} needs MR sizes but scenario {:?} has none", s.id));
                }
            }
        }
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            errs.push(format!("resolution: must be positive, got {}", self.resolution));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            errs.push(format!("warmup_fraction: must be in [0, 1), got {}", self.warmup_fraction));
        }
        if let Some(out) = &self.output {
            if out.is_empty() || out.contains(['/', '\\']) {
                errs.push(format!("output: must be a plain file name, got {out:?}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn output_file(&self) -> String {
        self.output.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }
}

/// Files written by [`run_config`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub rows: Vec<CsvRow>,
}

#[derive(Serialize)]
struct Meta<'a> {
    config: &'a ExperimentConfig,
    catalog_seed: u64,
    trace_seeds: Vec<u64>,
    rows: usize,
    version: &'static str,
}

/// Computes the rows of a validated config without writing files.
pub fn compute_rows(config: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    config.validate()?;
    if config.mode == RunMode::Asymptotic {
        return asymptotic_rows(config.asymptotic.as_ref().expect("validated"), config.clock);
    }
    let seed = config.catalog_seed();
    let scenarios = config
        .scenarios
        .iter()
        .map(|s| {
            Ok(Scenario {
                id: s.id.clone(),
                catalog: s.build_catalog(seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    if matches!(config.mode, RunMode::Approx | RunMode::Compare) {
        let per_unit = config.detail.layers || config.detail.versions;
        for s in &scenarios {
            let pop = s.catalog.popularity()?;
            for &b in &config.budgets {
                if b == 0.0 {
                    rows.push(value_row(&s.id, "llru-approx", b, 0.0));
                    if s.catalog.has_mr_sizes() {
                        rows.push(value_row(&s.id, "mrlru-approx", b, 0.0));
                    }
                    continue;
                }
                let lr = solve_characteristic_time(&pop, &s.catalog, b, config.clock, DEFAULT_TOL)?;
                rows.extend(approx_rows(&s.id, "llru-approx", &lr, &pop, RowKind::Layer, per_unit));
                if s.catalog.has_mr_sizes() {
                    let mr = mr_approximation(&pop, &s.catalog, b, config.clock, DEFAULT_TOL)?;
                    rows.extend(approx_rows(&s.id, "mrlru-approx", &mr, &pop, RowKind::Version, per_unit));
                }
            }
        }
    }
    if config.mode == RunMode::Compare {
        for s in &scenarios {
            for &b in &config.budgets {
                if config.policies.contains(&PolicyKind::StaticOpt) {
                    let p = static_optimal(&s.catalog, b, config.resolution, DEFAULT_TABLE_CAP)?;
                    rows.push(value_row(&s.id, "static-opt-exact", b, p.hit_rate(&s.catalog)));
                }
                if config.policies.contains(&PolicyKind::HlfuStatic) {
                    let p = hlfu_static_placement(&s.catalog, b)?;
                    rows.push(value_row(&s.id, "hlfu-static-exact", b, p.hit_rate(&s.catalog)));
                }
            }
        }
    }
    if config.simulates() {
        let cells = sim::sweep(
            &scenarios,
            &config.policies,
            &config.budgets,
            config.requests,
            &config.trace_seeds(),
            &config.sim_options(),
        )?;
        for cell in cells {
            for r in &cell.summary.reports {
                rows.extend(report_rows(&cell.scenario_id, r, config.detail));
            }
        }
    }
    Ok(rows)
}

fn asymptotic_rows(spec: &AsymptoticSpec, clock: ClockMode) -> Result<Vec<CsvRow>> {
    let mut rows = Vec::new();
    let unit_row = |scenario: String, policy: &str, budget: f64, d: usize, l: usize, h: f64| CsvRow {
        object: Some(d + 1),
        level: Some(l + 1),
        kind: RowKind::Layer,
        hit_rate: None,
        ..value_row(&scenario, policy, budget, h)
    };
    match spec {
        AsymptoticSpec::Layered { popularity, version_prob, layer_size, b, objects } => {
            let model = LayeredScalingModel::homogeneous(popularity.to_shape(), version_prob.clone(), layer_size.clone())?;
            for &bb in b {
                let limit = asymptotic_hit_theorem1(&model, bb, DEFAULT_QUAD_TOL)?;
                for &n in objects {
                    let cat = model.finite_catalog(n)?;
                    let pop = cat.popularity()?;
                    let budget = bb * n as f64;
                    let sol = solve_characteristic_time(&pop, &cat, budget, clock, DEFAULT_TOL)?;
                    let id = format!("D{n}-b{}", crate::analysis::fmt_g(bb));
                    for d in 0..n {
                        for l in 0..model.num_versions {
                            rows.push(unit_row(id.clone(), "llru-approx", budget, d, l, sol.hit(d, l)));
                            let x = (d + 1) as f64 / n as f64;
                            rows.push(unit_row(id.clone(), "limit", budget, d, l, limit.hit(x, l)));
                        }
                    }
                }
            }
        }
        AsymptoticSpec::Continuum { popularity, versions, layer_size, layer_mass, b, sizes } => {
            let delta = *layer_size;
            let model = ContinuumScalingModel::new(popularity.to_shape(), versions.to_shape(), move |_, _| delta, *layer_mass)?;
            for &bb in b {
                let limit = asymptotic_hit_theorem2(&model, bb, 1e-7)?;
                for &(n, v) in sizes {
                    let cat = model.finite_catalog(n, v)?;
                    let pop = cat.popularity()?;
                    let budget = bb * (n * v) as f64;
                    let sol = solve_characteristic_time(&pop, &cat, budget, clock, DEFAULT_TOL)?;
                    let id = format!("D{n}-V{v}-b{}", crate::analysis::fmt_g(bb));
                    for d in 0..n {
                        for l in 0..v {
                            rows.push(unit_row(id.clone(), "llru-approx", budget, d, l, sol.hit(d, l)));
                            let (x, y) = ((d + 1) as f64 / n as f64, l as f64 / v as f64);
                            rows.push(unit_row(id.clone(), "limit", budget, d, l, limit.hit(x, y)));
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Validates, computes and writes `<out_dir>/<output>` plus a
/// `.meta.json` sidecar echoing the resolved config.
pub fn run_config(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let rows = compute_rows(config)?;
    fs::create_dir_all(out_dir)?;
    let csv = out_dir.join(config.output_file());
    let mut buf = Vec::new();
    sim::write_rows(&mut buf, &rows)?;
    fs::write(&csv, buf)?;
    let meta = csv.with_extension("meta.json");
    let doc = Meta {
        config,
        catalog_seed: config.catalog_seed(),
        trace_seeds: config.trace_seeds(),
        rows: rows.len(),
        version: env!("CARGO_PKG_VERSION"),
    };
    fs::write(&meta, serde_json::to_string_pretty(&doc)?)?;
    Ok(RunOutput { csv, meta, rows })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `lo, lo + step, ...` up to `hi`, rounded to 10 decimals.
fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| ((lo + step * i as f64) * 1e10).round() / 1e10).collect()
}

pub const PRESET_NAMES: [&str; 13] = [
    "fig2", "fig3a", "fig3b", "fig3c", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig11", "thm1", "thm2",
];

/// Root seed shared by all presets.
pub const PRESET_SEED: u64 = 20_240_601;

const ZIPF: f64 = 0.8;
const OBJECTS: usize = 100;

fn base(name: &str, mode: RunMode) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        mode,
        scenarios: Vec::new(),
        policies: Vec::new(),
        budgets: Vec::new(),
        requests: 0,
        replications: 1,
        seed: PRESET_SEED,
        clock: ClockMode::DiscreteBernoulli,
        resolution: 1.0,
        warmup_fraction: 0.0,
        detail: RowDetail::default(),
        output: None,
        asymptotic: None,
    }
}

fn scenario(id: String, versions: VersionSpec, sizes: SizeSpec) -> ScenarioSpec {
    ScenarioSpec {
        id,
        objects: OBJECTS,
        zipf_exponent: ZIPF,
        versions,
        sizes,
    }
}

fn label(x: f64) -> String {
    crate::analysis::fmt_g(x)
}

/// The fully resolved config behind a named figure.
///
/// Runtime on a laptop: analytic presets (fig3a, fig7, fig8, fig9, fig11,
/// thm1, thm2) take seconds; fig2 takes about a minute; fig3b, fig3c,
/// fig4, fig6 a few minutes; fig5 is the longest at roughly ten.
pub fn figure_preset(name: &str) -> Result<ExperimentConfig> {
    let alphas = grid(0.05, 0.95, 0.05);
    let cfg = match name {
        "fig2" => {
            let mut c = base(name, RunMode::Compare);
            c.scenarios = vec![scenario(
                "fig2".into(),
                VersionSpec::UniformDecreasing { versions: 4 },
                SizeSpec::RandomComposition { total: 240 },
            )];
            c.policies = vec![PolicyKind::Llru];
            c.budgets = linspace(0.0, 24_000.0, 10);
            c.requests = 5_000_000;
            c.detail = RowDetail { versions: false, layers: true };
            c
        }
        "fig3a" => {
            let mut c = base(name, RunMode::Approx);
            c.scenarios = grid(0.0, 50.0, 5.0)
                .into_iter()
                .map(|o| {
                    scenario(
                        format!("o{}", label(o)),
                        VersionSpec::Two { alpha: 0.5 },
                        SizeSpec::TwoVersionMr { beta: 0.5, overhead_percent: o },
                    )
                })
                .collect();
            c.budgets = vec![10.0, 20.0, 100.0];
            c
        }
        "fig3b" | "fig3c" => {
            let mut c = base(name, RunMode::Compare);
            for o in [5.0, 25.0] {
                for &a in &alphas {
                    let versions = if name == "fig3b" {
                        VersionSpec::Two { alpha: a }
                    } else {
                        VersionSpec::TwoOddEven { alpha: a, other_alpha: 0.5 }
                    };
                    c.scenarios.push(scenario(
                        format!("o{}-a{}", label(o), label(a)),
                        versions,
                        SizeSpec::TwoVersionMr { beta: 0.5, overhead_percent: o },
                    ));
                }
            }
            c.policies = vec![PolicyKind::Llru, PolicyKind::MrLru, PolicyKind::Hlru, PolicyKind::HlfuStatic];
            c.budgets = vec![100.0];
            c.requests = 1_000_000;
            c.replications = 2;
            c
        }
        "fig4" => {
            let mut c = base(name, RunMode::Compare);
            c.scenarios = vec![scenario(
                "a0.99-r0.5".into(),
                VersionSpec::Two { alpha: 0.99 },
                SizeSpec::TwoLayer { rho: 0.5 },
            )];
            c.policies = vec![PolicyKind::LBelady, PolicyKind::Llfu, PolicyKind::Llru, PolicyKind::StaticOpt];
            c.budgets = linspace(0.0, 100.0, 20);
            c.requests = 1_000_000;
            c.replications = 5;
            c.resolution = 0.5;
            c
        }
        "fig5" => {
            let mut c = base(name, RunMode::Simulate);
            c.scenarios.push(scenario(
                "v1".into(),
                VersionSpec::Explicit { weights: vec![1.0] },
                SizeSpec::Explicit { layers: vec![1.0] },
            ));
            for a in [0.99, 0.9, 0.5] {
                c.scenarios.push(scenario(
                    format!("a{}-r0.5", label(a)),
                    VersionSpec::Two { alpha: a },
                    SizeSpec::TwoLayer { rho: 0.5 },
                ));
            }
            c.policies = vec![PolicyKind::LBelady, PolicyKind::Llfu, PolicyKind::Llru, PolicyKind::StaticOpt];
            c.budgets = linspace(0.0, 100.0, 20);
            c.requests = 1_000_000;
            c.replications = 3;
            c.resolution = 0.5;
            c
        }
        "fig6" => {
            let mut c = base(name, RunMode::Compare);
            c.scenarios = alphas
                .iter()
                .map(|&a| scenario(format!("a{}", label(a)), VersionSpec::Two { alpha: a }, SizeSpec::TwoLayer { rho: 0.5 }))
                .collect();
            c.policies = vec![PolicyKind::Llru];
            c.budgets = vec![10.0, 20.0, 40.0];
            c.requests = 1_000_000;
            c.replications = 5;
            c.detail = RowDetail { versions: false, layers: true };
            c
        }
        "fig7" => {
            let mut c = base(name, RunMode::Approx);
            for a in grid(0.1, 0.9, 0.1) {
                for r in grid(0.1, 0.9, 0.1) {
                    c.scenarios.push(scenario(
                        format!("a{}-r{}", label(a), label(r)),
                        VersionSpec::Two { alpha: a },
                        SizeSpec::TwoLayer { rho: r },
                    ));
                }
            }
            c.budgets = vec![20.0];
            c
        }
        "fig8" => {
            let mut c = base(name, RunMode::Approx);
            for (rho, kappa) in [(0.2, 0.3), (0.5, 0.3)] {
                for (zeta, eta) in feasible_pairs() {
                    c.scenarios.push(scenario(
                        format!("r{}-k{}-z{}-e{}", label(rho), label(kappa), label(zeta), label(eta)),
                        VersionSpec::Three { zeta, eta },
                        SizeSpec::ThreeLayer { rho, kappa },
                    ));
                }
            }
            c.budgets = vec![80.0];
            c
        }
        "fig9" => {
            let mut c = base(name, RunMode::Approx);
            for (zeta, eta) in [(0.7, 0.2), (0.4, 0.3)] {
                for (rho, kappa) in feasible_pairs() {
                    c.scenarios.push(scenario(
                        format!("z{}-e{}-r{}-k{}", label(zeta), label(eta), label(rho), label(kappa)),
                        VersionSpec::Three { zeta, eta },
                        SizeSpec::ThreeLayer { rho, kappa },
                    ));
                }
            }
            c.budgets = vec![80.0];
            c
        }
        "fig11" => {
            let mut c = base(name, RunMode::Approx);
            let exps = [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
            for m in exps {
                for n in exps {
                    for v in 1..=8 {
                        c.scenarios.push(scenario(
                            format!("m{}-n{}-V{v}", label(m), label(n)),
                            VersionSpec::Parametric { versions: v, m },
                            SizeSpec::Parametric { n },
                        ));
                    }
                }
            }
            c.budgets = linspace(0.0, 100.0, 20);
            c
        }
        "thm1" => {
            let mut c = base(name, RunMode::Asymptotic);
            c.asymptotic = Some(AsymptoticSpec::Layered {
                popularity: ShapeSpec::PowerLaw { exponent: ZIPF },
                version_prob: vec![0.4, 0.3, 0.2, 0.1],
                layer_size: vec![0.25; 4],
                b: vec![0.1, 0.3, 0.5, 0.7],
                objects: vec![50, 200, 1000],
            });
            c
        }
        "thm2" => {
            let mut c = base(name, RunMode::Asymptotic);
            c.asymptotic = Some(AsymptoticSpec::Continuum {
                popularity: ShapeSpec::PowerLaw { exponent: ZIPF },
                versions: ShapeSpec::Uniform,
                layer_size: 1.0,
                layer_mass: LayerMass::Suffix,
                b: vec![0.3, 0.5],
                sizes: vec![(50, 5), (200, 10), (500, 20)],
            });
            c
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(cfg)
}

/// Pairs on a 0.1 grid whose three shares are all at least 0.1.
fn feasible_pairs() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..=8 {
        for j in 1..=8 {
            if i + j <= 9 {
                out.push((i as f64 / 10.0, j as f64 / 10.0));
            }
        }
    }
    out
}
