//! Working-set (characteristic time) approximation for layered LRU.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, DerivedPopularity};
use crate::error::{Error, Result};

/// Default relative tolerance of the fixed-point solvers.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Clock used by the approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockMode {
    /// One request per slot; a unit is missing after `t - 1` slots with
    /// probability `(1 - p)^(t-1)`.
    DiscreteBernoulli,
    /// Poisson arrivals; a unit is missing after time `t` with probability
    /// `exp(-γ t)`.
    ContinuousPoisson,
}

impl ClockMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ClockMode::DiscreteBernoulli => "discrete-bernoulli",
            ClockMode::ContinuousPoisson => "continuous-poisson",
        }
    }

    fn lower_bound(self) -> f64 {
        match self {
            ClockMode::DiscreteBernoulli => 1.0,
            ClockMode::ContinuousPoisson => 0.0,
        }
    }
}

impl fmt::Display for ClockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClockMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete-bernoulli" | "discrete" => Ok(ClockMode::DiscreteBernoulli),
            "continuous-poisson" | "poisson" => Ok(ClockMode::ContinuousPoisson),
            other => Err(Error::Config(format!("unknown clock mode {other:?}"))),
        }
    }
}

/// Probability that a unit requested with per-slot probability `prob` (or
/// rate `rate`) has not been requested by time `t`.
pub fn miss_probability(mode: ClockMode, prob: f64, rate: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return if prob > 0.0 { 0.0 } else { 1.0 };
    }
    match mode {
        ClockMode::DiscreteBernoulli => {
            let k = t - 1.0;
            if prob <= 0.0 || k <= 0.0 {
                1.0
            } else if prob >= 1.0 {
                0.0
            } else {
                (k * (-prob).ln_1p()).exp()
            }
        }
        ClockMode::ContinuousPoisson => {
            if rate <= 0.0 || t <= 0.0 {
                1.0
            } else {
                (-rate * t).exp()
            }
        }
    }
}

/// Units fed to the solver: one per (object, layer) or per (object, version).
#[derive(Debug, Clone)]
struct Units {
    versions: usize,
    size: Vec<f64>,
    prob: Vec<f64>,
    rate: Vec<f64>,
}

impl Units {
    fn layered(pop: &DerivedPopularity, catalog: &Catalog) -> Result<Self> {
        check_shapes(pop, catalog)?;
        Ok(Self {
            versions: catalog.num_versions(),
            size: catalog.layer_size_matrix().to_vec(),
            prob: pop.layer_probs().to_vec(),
            rate: pop.layer_rates().to_vec(),
        })
    }

    fn versions(pop: &DerivedPopularity, catalog: &Catalog) -> Result<Self> {
        check_shapes(pop, catalog)?;
        let size = catalog
            .mr_size_matrix()
            .ok_or(Error::MissingMrSizes {
                policy: "mr approximation",
            })?
            .to_vec();
        Ok(Self {
            versions: catalog.num_versions(),
            size,
            prob: pop.version_probs().to_vec(),
            rate: catalog.rate_matrix().to_vec(),
        })
    }

    fn working_set(&self, mode: ClockMode, t: f64, skip: impl Fn(usize) -> bool) -> f64 {
        let mut total = 0.0;
        for i in 0..self.size.len() {
            if skip(i) || self.prob[i] <= 0.0 {
                continue;
            }
            total += self.size[i] * (1.0 - miss_probability(mode, self.prob[i], self.rate[i], t));
        }
        total
    }

    fn active_total(&self, skip: impl Fn(usize) -> bool) -> f64 {
        (0..self.size.len())
            .filter(|&i| !skip(i) && self.prob[i] > 0.0)
            .map(|i| self.size[i])
            .sum()
    }

    fn hit(&self, mode: ClockMode, i: usize, t: f64) -> f64 {
        if self.prob[i] <= 0.0 {
            0.0
        } else {
            1.0 - miss_probability(mode, self.prob[i], self.rate[i], t)
        }
    }
}

fn check_shapes(pop: &DerivedPopularity, catalog: &Catalog) -> Result<()> {
    if pop.num_objects() != catalog.num_objects() || pop.num_versions() != catalog.num_versions() {
        return Err(Error::Config(format!(
            "popularity is {}x{} but catalog is {}x{}",
            pop.num_objects(),
            pop.num_versions(),
            catalog.num_objects(),
            catalog.num_versions()
        )));
    }
    Ok(())
}

fn check_budget(budget: f64, tol: f64) -> Result<()> {
    if !(budget > 0.0) || budget.is_nan() {
        return Err(Error::Config(format!("budget must be positive, got {budget}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Solves `f(t) = budget` for a continuous non-decreasing `f` with
/// `f(lower) = 0`, given that `budget < sup f`. Returns `(t, residual)`.
fn solve_increasing(f: impl Fn(f64) -> f64, budget: f64, lower: f64, start: f64, tol: f64) -> (f64, f64) {
    let mut lo = lower;
    let mut hi = start.max(lower);
    let mut iterations = 0;
    while f(hi) < budget {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if !hi.is_finite() || iterations > 4096 {
            return (f64::INFINITY, 0.0);
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
        let width_ok = hi - lo <= tol * hi;
        if width_ok && (f(hi) - budget).abs() <= tol * budget {
            break;
        }
    }
    let (flo, fhi) = (f(lo), f(hi));
    let t = if (flo - budget).abs() < (fhi - budget).abs() { lo } else { hi };
    (t, (f(t) - budget).abs())
}

fn solve_units(
    units: &Units,
    budget: f64,
    mode: ClockMode,
    tol: f64,
    skip: impl Fn(usize) -> bool + Copy,
) -> (f64, f64) {
    if budget >= units.active_total(skip) {
        return (f64::INFINITY, 0.0);
    }
    let start = match mode {
        ClockMode::DiscreteBernoulli => 2.0,
        ClockMode::ContinuousPoisson => {
            let total: f64 = units.rate.iter().sum();
            if total > 0.0 {
                1.0 / total
            } else {
                1.0
            }
        }
    };
    solve_increasing(
        |t| units.working_set(mode, t, skip),
        budget,
        mode.lower_bound(),
        start,
        tol,
    )
}

/// Expected size of the set of layers requested before time `t`.
pub fn expected_working_set(
    pop: &DerivedPopularity,
    catalog: &Catalog,
    t: f64,
    mode: ClockMode,
) -> Result<f64> {
    let units = Units::layered(pop, catalog)?;
    Ok(units.working_set(mode, t, |_| false))
}

/// Characteristic time and implied hit probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSolution {
    /// `+inf` when the whole active catalog fits.
    pub characteristic_time: f64,
    /// Row-major `D x V`, indexed by layer (or by version for MR).
    pub hit_prob: Vec<f64>,
    pub mode: ClockMode,
    pub residual: f64,
    pub budget: f64,
    pub num_versions: usize,
    /// Per-unit request probability used by the solver.
    pub unit_prob: Vec<f64>,
    /// Per-unit size used by the solver.
    pub unit_size: Vec<f64>,
}

impl ApproxSolution {
    fn from_units(units: &Units, budget: f64, mode: ClockMode, t: f64, residual: f64) -> Self {
        let hit_prob = (0..units.size.len()).map(|i| units.hit(mode, i, t)).collect();
        Self {
            characteristic_time: t,
            hit_prob,
            mode,
            residual,
            budget,
            num_versions: units.versions,
            unit_prob: units.prob.clone(),
            unit_size: units.size.clone(),
        }
    }

    pub fn num_objects(&self) -> usize {
        self.hit_prob.len() / self.num_versions
    }

    /// Hit probability of unit `(object, level)`, zero-based.
    pub fn hit(&self, object: usize, level: usize) -> f64 {
        self.hit_prob[object * self.num_versions + level]
    }

    /// Rate-weighted hit rate `Σ q(d,v) h(d,v)`. A layered request for
    /// version `v` hits exactly when its top layer `v` is resident.
    pub fn hit_rate(&self, pop: &DerivedPopularity) -> f64 {
        pop.version_probs()
            .iter()
            .zip(&self.hit_prob)
            .map(|(q, h)| q * h)
            .sum()
    }

    /// Writes a comment line with the solver state, a header, and one row
    /// per unit with one-based indices.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# B={},mode={},t_star={},residual={}",
            fmt_g(self.budget),
            self.mode,
            fmt_g(self.characteristic_time),
            fmt_g(self.residual)
        )?;
        writeln!(out, "d,l,p,delta,hit_prob")?;
        for (i, h) in self.hit_prob.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                i / self.num_versions + 1,
                i % self.num_versions + 1,
                fmt_g(self.unit_prob[i]),
                fmt_g(self.unit_size[i]),
                fmt_g(*h)
            )?;
        }
        Ok(())
    }
}

/// Formats a float with 10 significant digits, dropping trailing zeros.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..10).contains(&exp) {
        let s = format!("{:.9e}", x);
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = trim_zeros(mant);
        let e: i32 = e.parse().unwrap_or(0);
        return format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs());
    }
    let decimals = (9 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Solves `B = Σ δ(d,l) (1 - miss(d,l, t))` for the characteristic time.
pub fn solve_characteristic_time(
    pop: &DerivedPopularity,
    catalog: &Catalog,
    budget: f64,
    mode: ClockMode,
    tol: f64,
) -> Result<ApproxSolution> {
    check_budget(budget, tol)?;
    let units = Units::layered(pop, catalog)?;
    let (t, residual) = solve_units(&units, budget, mode, tol, |_| false);
    Ok(ApproxSolution::from_units(&units, budget, mode, t, residual))
}

/// Same fixed point with units = MR versions of size `s_MR(d,v)` and
/// probability `q(d,v)`.
pub fn mr_approximation(
    pop: &DerivedPopularity,
    catalog: &Catalog,
    budget: f64,
    mode: ClockMode,
    tol: f64,
) -> Result<ApproxSolution> {
    check_budget(budget, tol)?;
    let units = Units::versions(pop, catalog)?;
    let (t, residual) = solve_units(&units, budget, mode, tol, |_| false);
    Ok(ApproxSolution::from_units(&units, budget, mode, t, residual))
}

/// Per-unit fixed point: the characteristic time seen by one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUnitSolution {
    pub characteristic_time: f64,
    pub hit_prob: f64,
    pub residual: f64,
}

/// Solves the fixed point for layer `layer` of `object` with that unit, the
/// object's lower layers, and nothing else excluded from the working set.
/// Lower layers are excluded because they are always requested together
/// with the unit and are therefore more recent than it.
#[allow(clippy::too_many_arguments)]
pub fn per_unit_characteristic_time(
    pop: &DerivedPopularity,
    catalog: &Catalog,
    budget: f64,
    object: usize,
    layer: usize,
    mode: ClockMode,
    tol: f64,
) -> Result<PerUnitSolution> {
    check_budget(budget, tol)?;
    let units = Units::layered(pop, catalog)?;
    let v = catalog.num_versions();
    if object >= catalog.num_objects() {
        return Err(Error::IndexOutOfRange {
            what: "object",
            index: object,
            bound: catalog.num_objects(),
        });
    }
    if layer >= v {
        return Err(Error::IndexOutOfRange {
            what: "layer",
            index: layer,
            bound: v,
        });
    }
    let skip = move |i: usize| i / v == object && i % v <= layer;
    let (t, residual) = solve_units(&units, budget, mode, tol, skip);
    Ok(PerUnitSolution {
        characteristic_time: t,
        hit_prob: units.hit(mode, object * v + layer, t),
        residual,
    })
}
