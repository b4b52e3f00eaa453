//! Trace-driven simulation, replication over seeds, and CSV rows.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{fmt_g, ApproxSolution};
use crate::catalog::{Catalog, DerivedPopularity};
use crate::error::{Error, Result};
use crate::policies::{build_policy, lbelady, AccessOutcome, CachePolicy, PolicyKind};
use crate::workload::{sample_trace, seeded_rng, Trace};

/// Knobs shared by every simulated cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Size quantum of the static-optimal knapsack.
    pub resolution: f64,
    /// Fraction of the trace fed to the cache but not counted.
    pub warmup_fraction: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            warmup_fraction: 0.0,
        }
    }
}

/// Per-request and per-layer counters of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: String,
    pub num_objects: usize,
    pub num_versions: usize,
    pub capacity: f64,
    /// Trace length including warmup.
    pub trace_len: usize,
    pub warmup: usize,
    pub seed: Option<u64>,
    /// Row-major `D x V` request counts per version.
    pub version_requests: Vec<u64>,
    pub version_hits: Vec<u64>,
    /// Per-layer touches and presence hits (a request for `v` touches every
    /// layer `l <= v`; it is a presence hit if `l` was resident). `None` for
    /// policies that do not store pure layers.
    pub layer_touches: Option<Vec<u64>>,
    pub layer_hits: Option<Vec<u64>>,
    pub bytes_evicted: f64,
    pub bypasses: u64,
    pub representation_changes: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl SimReport {
    fn new(policy: &str, catalog: &Catalog, capacity: f64, trace_len: usize, warmup: usize, layered: bool) -> Self {
        let cells = catalog.num_units();
        Self {
            policy: policy.to_string(),
            num_objects: catalog.num_objects(),
            num_versions: catalog.num_versions(),
            capacity,
            trace_len,
            warmup,
            seed: None,
            version_requests: vec![0; cells],
            version_hits: vec![0; cells],
            layer_touches: layered.then(|| vec![0; cells]),
            layer_hits: layered.then(|| vec![0; cells]),
            bytes_evicted: 0.0,
            bypasses: 0,
            representation_changes: 0,
        }
    }

    fn record(&mut self, object: usize, version: usize, out: &AccessOutcome) {
        let base = object * self.num_versions;
        self.version_requests[base + version] += 1;
        self.version_hits[base + version] += out.hit as u64;
        if let (Some(touches), Some(hits)) = (self.layer_touches.as_mut(), self.layer_hits.as_mut()) {
            for l in 0..=version {
                touches[base + l] += 1;
                hits[base + l] += (l < out.resident_layers) as u64;
            }
        }
        self.bytes_evicted += out.evicted_bytes;
        self.bypasses += out.bypass as u64;
        self.representation_changes += out.representation_change as u64;
    }

    /// Counted requests (trace length minus warmup).
    pub fn total_requests(&self) -> u64 {
        self.version_requests.iter().sum()
    }

    pub fn total_hits(&self) -> u64 {
        self.version_hits.iter().sum()
    }

    pub fn total_misses(&self) -> u64 {
        self.total_requests() - self.total_hits()
    }

    /// Fraction of counted requests that hit.
    pub fn hit_rate(&self) -> Option<f64> {
        ratio(self.total_hits(), self.total_requests())
    }

    /// `ĥ(d,v)`; `None` when the version was never requested.
    pub fn version_hit_prob(&self, object: usize, version: usize) -> Option<f64> {
        let i = object * self.num_versions + version;
        ratio(self.version_hits[i], self.version_requests[i])
    }

    /// `ĥ(d,l)`; `None` when never touched or for non-layered policies.
    pub fn layer_hit_prob(&self, object: usize, layer: usize) -> Option<f64> {
        let i = object * self.num_versions + layer;
        ratio(self.layer_hits.as_ref()?[i], self.layer_touches.as_ref()?[i])
    }
}

/// Feeds `trace` through an already constructed policy.
pub fn run_policy(policy: &mut dyn CachePolicy, catalog: &Catalog, trace: &Trace, warmup_fraction: f64) -> Result<SimReport> {
    trace.validate(catalog.num_objects(), catalog.num_versions())?;
    let warmup = warmup_count(trace.len(), warmup_fraction)?;
    let mut report = SimReport::new(policy.name(), catalog, policy.capacity(), trace.len(), warmup, policy.is_layered());
    for (i, r) in trace.entries.iter().enumerate() {
        let out = policy.access(r.object(), r.version());
        if i >= warmup {
            report.record(r.object(), r.version(), &out);
        }
    }
    Ok(report)
}

fn warmup_count(len: usize, fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "warmup fraction must be in [0, 1), got {fraction}"
        )));
    }
    Ok((len as f64 * fraction).floor() as usize)
}

/// Per-request outcomes of `kind` on `trace`, starting from an empty cache.
pub fn simulate_outcomes(kind: PolicyKind, catalog: &Catalog, capacity: f64, trace: &Trace, resolution: f64) -> Result<Vec<AccessOutcome>> {
    if kind == PolicyKind::LBelady {
        return lbelady::run_outcomes(catalog, capacity, trace);
    }
    trace.validate(catalog.num_objects(), catalog.num_versions())?;
    let mut policy = build_policy(kind, catalog, capacity, resolution)?;
    Ok(trace
        .entries
        .iter()
        .map(|r| policy.access(r.object(), r.version()))
        .collect())
}

/// Runs one policy over one trace from a cold cache.
pub fn run_simulation(kind: PolicyKind, catalog: &Catalog, capacity: f64, trace: &Trace, options: &SimOptions) -> Result<SimReport> {
    if trace.is_empty() {
        return Err(Error::Config("trace is empty".into()));
    }
    if kind == PolicyKind::LBelady {
        let warmup = warmup_count(trace.len(), options.warmup_fraction)?;
        let outs = lbelady::run_outcomes(catalog, capacity, trace)?;
        let mut report = SimReport::new(kind.as_str(), catalog, capacity, trace.len(), warmup, true);
        for (i, (r, o)) in trace.entries.iter().zip(&outs).enumerate() {
            if i >= warmup {
                report.record(r.object(), r.version(), o);
            }
        }
        return Ok(report);
    }
    let mut policy = build_policy(kind, catalog, capacity, options.resolution)?;
    run_policy(policy.as_mut(), catalog, trace, options.warmup_fraction)
}

/// Mean and standard error of a metric across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// `None` with fewer than two observations.
    pub std_err: Option<f64>,
    pub count: usize,
}

impl MetricSummary {
    /// Summary of the observations; `None` when there are none.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_err = (values.len() >= 2).then(|| {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Some(Self {
            mean,
            std_err,
            count: values.len(),
        })
    }
}

/// Reports of one policy and budget across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub reports: Vec<SimReport>,
}

impl ReplicationSummary {
    fn summarize(&self, f: impl Fn(&SimReport) -> Option<f64>) -> Option<MetricSummary> {
        let values: Vec<f64> = self.reports.iter().filter_map(f).collect();
        MetricSummary::from_values(&values)
    }

    pub fn hit_rate(&self) -> Option<MetricSummary> {
        self.summarize(SimReport::hit_rate)
    }

    pub fn version_hit_prob(&self, object: usize, version: usize) -> Option<MetricSummary> {
        self.summarize(|r| r.version_hit_prob(object, version))
    }

    pub fn layer_hit_prob(&self, object: usize, layer: usize) -> Option<MetricSummary> {
        self.summarize(|r| r.layer_hit_prob(object, layer))
    }

    pub fn bytes_evicted(&self) -> Option<MetricSummary> {
        self.summarize(|r| Some(r.bytes_evicted))
    }
}

/// Simulates `kind` on one independent trace of length `len` per seed.
/// Seeds run concurrently; reports keep the seed order.
pub fn replicate(kind: PolicyKind, catalog: &Catalog, capacity: f64, len: usize, seeds: &[u64], options: &SimOptions) -> Result<ReplicationSummary> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let pop = catalog.popularity()?;
    let reports = seeds
        .par_iter()
        .map(|&seed| {
            let trace = sample_trace(&pop, len, false, &mut seeded_rng(seed))?;
            let mut report = run_simulation(kind, catalog, capacity, &trace, options)?;
            report.seed = Some(seed);
            Ok(report)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicationSummary { reports })
}

/// One named catalog of a sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub catalog: Catalog,
}

/// Result of one (scenario, policy, budget) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub scenario_id: String,
    pub policy: PolicyKind,
    pub budget: f64,
    pub summary: ReplicationSummary,
}

/// Cartesian sweep over scenarios, policies and budgets. For a given
/// scenario and seed every cell sees the same trace.
pub fn sweep(scenarios: &[Scenario], policies: &[PolicyKind], budgets: &[f64], len: usize, seeds: &[u64], options: &SimOptions) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for s in scenarios {
        for &p in policies {
            for &b in budgets {
                cells.push((s, p, b));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(s, p, b)| {
            Ok(SweepCell {
                scenario_id: s.id.clone(),
                policy: p,
                budget: b,
                summary: replicate(p, &s.catalog, b, len, seeds, options)?,
            })
        })
        .collect()
}

/// Which per-unit rows to emit alongside the aggregate row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RowDetail {
    #[serde(default)]
    pub versions: bool,
    #[serde(default)]
    pub layers: bool,
}

impl RowDetail {
    pub const ALL: RowDetail = RowDetail {
        versions: true,
        layers: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Version,
    Layer,
    Aggregate,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::Version => "version",
            RowKind::Layer => "layer",
            RowKind::Aggregate => "aggregate",
        })
    }
}

pub const CSV_HEADER: &str =
    "scenario_id,policy,B,d,v_or_l,kind,requests,hits,hit_prob,hit_rate,N,seed";

/// One line of the result CSV. Indices are one-based; empty fields are
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scenario_id: String,
    pub policy: String,
    pub budget: f64,
    pub object: Option<usize>,
    pub level: Option<usize>,
    pub kind: RowKind,
    pub requests: Option<u64>,
    pub hits: Option<u64>,
    pub hit_prob: Option<f64>,
    pub hit_rate: Option<f64>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn optf(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            quote(&self.scenario_id),
            quote(&self.policy),
            fmt_g(self.budget),
            opt(self.object),
            opt(self.level),
            self.kind,
            opt(self.requests),
            opt(self.hits),
            optf(self.hit_prob),
            optf(self.hit_rate),
            opt(self.n),
            opt(self.seed)
        )
    }
}

pub fn write_rows<W: Write>(mut out: W, rows: &[CsvRow]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_line())?;
    }
    Ok(())
}

/// Aggregate row plus the requested per-unit rows of one report.
pub fn report_rows(scenario_id: &str, report: &SimReport, detail: RowDetail) -> Vec<CsvRow> {
    let hit_rate = report.hit_rate();
    let base = CsvRow {
        scenario_id: scenario_id.to_string(),
        policy: report.policy.clone(),
        budget: report.capacity,
        object: None,
        level: None,
        kind: RowKind::Aggregate,
        requests: Some(report.total_requests()),
        hits: Some(report.total_hits()),
        hit_prob: hit_rate,
        hit_rate,
        n: Some(report.trace_len as u64),
        seed: report.seed,
    };
    let mut rows = vec![base.clone()];
    let v = report.num_versions;
    if detail.versions {
        for i in 0..report.version_requests.len() {
            rows.push(CsvRow {
                object: Some(i / v + 1),
                level: Some(i % v + 1),
                kind: RowKind::Version,
                requests: Some(report.version_requests[i]),
                hits: Some(report.version_hits[i]),
                hit_prob: ratio(report.version_hits[i], report.version_requests[i]),
                ..base.clone()
            });
        }
    }
    if detail.layers {
        if let (Some(t), Some(h)) = (&report.layer_touches, &report.layer_hits) {
            for i in 0..t.len() {
                rows.push(CsvRow {
                    object: Some(i / v + 1),
                    level: Some(i % v + 1),
                    kind: RowKind::Layer,
                    requests: Some(t[i]),
                    hits: Some(h[i]),
                    hit_prob: ratio(h[i], t[i]),
                    ..base.clone()
                });
            }
        }
    }
    rows
}

/// Rows of an analytic solution. `unit_kind` is [`RowKind::Layer`] for
/// layered solutions and [`RowKind::Version`] for MR ones.
pub fn approx_rows(scenario_id: &str, policy: &str, solution: &ApproxSolution, pop: &DerivedPopularity, unit_kind: RowKind, per_unit: bool) -> Vec<CsvRow> {
    let base = CsvRow {
        scenario_id: scenario_id.to_string(),
        policy: policy.to_string(),
        budget: solution.budget,
        object: None,
        level: None,
        kind: RowKind::Aggregate,
        requests: None,
        hits: None,
        hit_prob: Some(solution.hit_rate(pop)),
        hit_rate: Some(solution.hit_rate(pop)),
        n: None,
        seed: None,
    };
    let mut rows = vec![base.clone()];
    if per_unit {
        let v = solution.num_versions;
        for (i, &h) in solution.hit_prob.iter().enumerate() {
            rows.push(CsvRow {
                object: Some(i / v + 1),
                level: Some(i % v + 1),
                kind: unit_kind,
                hit_prob: Some(h),
                ..base.clone()
            });
        }
    }
    rows
}

/// Row for a single analytic value with no per-unit breakdown.
pub fn value_row(scenario_id: &str, policy: &str, budget: f64, hit_rate: f64) -> CsvRow {
    CsvRow {
        scenario_id: scenario_id.to_string(),
        policy: policy.to_string(),
        budget,
        object: None,
        level: None,
        kind: RowKind::Aggregate,
        requests: None,
        hits: None,
        hit_prob: Some(hit_rate),
        hit_rate: Some(hit_rate),
        n: None,
        seed: None,
    }
}
