//! Cache state machines and placement policies.
//!
//! Online layered policies ([`Llru`], [`Llfu`]) and the offline
//! [`LBelady`] keep the layer-prefix property: layer `l + 1` of an object is
//! resident only while layer `l` is. [`MrLru`] stores each version as an
//! independent blob, [`Hlru`] switches between the two representations, and
//! [`static_optimal`] / [`hlfu_static_placement`] compute fixed contents
//! from known request rates.

mod hlfu;
mod hlru;
pub(crate) mod lbelady;
mod llfu;
mod llru;
mod mrlru;
mod recency;
mod static_opt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use hlfu::{hlfu_static_placement, HybridPlacement};
pub use hlru::{check_hybrid_feasibility, Hlru};
pub use lbelady::{LBelady, NextAccessIndex, NEVER};
pub use llfu::{decay_counts, FreqTable, Llfu};
pub use llru::Llru;
pub use mrlru::MrLru;
pub use recency::RecencyList;
pub use static_opt::{static_optimal, Placement, DEFAULT_TABLE_CAP};

use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// Absolute slack used when comparing occupancy against capacity.
pub(crate) fn size_slack(capacity: f64) -> f64 {
    1e-9 * capacity.abs().max(1.0)
}

/// What a resident cache unit represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitKind {
    /// Layer `level` of a layered object.
    Layer,
    /// Version `level` stored as an independent multi-representation blob.
    Version,
}

/// A resident unit: one layer, or one MR version, of an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Unit {
    pub object: usize,
    pub level: usize,
    pub kind: UnitKind,
}

impl Unit {
    pub fn layer(object: usize, level: usize) -> Self {
        Self {
            object,
            level,
            kind: UnitKind::Layer,
        }
    }

    pub fn version(object: usize, level: usize) -> Self {
        Self {
            object,
            level,
            kind: UnitKind::Version,
        }
    }
}

/// Result of serving one request.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AccessOutcome {
    pub hit: bool,
    /// Request was larger than the whole cache and served without caching.
    pub bypass: bool,
    /// Number of requested layers (a prefix) resident before the access.
    pub resident_layers: usize,
    pub evicted_units: usize,
    pub evicted_bytes: f64,
    /// An MR object was converted to layered form.
    pub representation_change: bool,
}

/// Representation of one object inside a hybrid or static cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Residency {
    Absent,
    /// A single version held as an MR blob.
    Mr(usize),
    /// The first `n` layers, `n >= 1`.
    Lr(usize),
}

impl Residency {
    /// Whether a request for `version` is served by this residency.
    pub fn serves(&self, version: usize) -> bool {
        match *self {
            Residency::Absent => false,
            Residency::Mr(u) => u == version,
            Residency::Lr(n) => version < n,
        }
    }

    pub fn size(&self, catalog: &Catalog, object: usize) -> f64 {
        match *self {
            Residency::Absent => 0.0,
            Residency::Mr(u) => catalog.mr_size(object, u).unwrap_or(f64::NAN),
            Residency::Lr(n) => catalog.lr_size(object, n - 1),
        }
    }
}

/// Common interface of every request-driven cache.
pub trait CachePolicy: Send {
    fn name(&self) -> &'static str;

    /// Serves a request for `version` of `object` and updates the state.
    fn access(&mut self, object: usize, version: usize) -> AccessOutcome;

    /// Units evicted by the most recent [`CachePolicy::access`].
    fn last_evicted(&self) -> &[Unit];

    fn capacity(&self) -> f64;

    fn occupancy(&self) -> f64;

    fn resident_units(&self) -> Vec<Unit>;

    /// Whether `resident_layers` in outcomes is meaningful (pure layered storage).
    fn is_layered(&self) -> bool;

    /// Checks occupancy, capacity and layer-prefix invariants.
    fn check_invariants(&self) -> std::result::Result<(), String>;
}

/// Policies selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    Llru,
    Llfu,
    LBelady,
    MrLru,
    Hlru,
    HlfuStatic,
    StaticOpt,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Llru,
        PolicyKind::Llfu,
        PolicyKind::LBelady,
        PolicyKind::MrLru,
        PolicyKind::Hlru,
        PolicyKind::HlfuStatic,
        PolicyKind::StaticOpt,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Llru => "llru",
            PolicyKind::Llfu => "llfu",
            PolicyKind::LBelady => "lbelady",
            PolicyKind::MrLru => "mrlru",
            PolicyKind::Hlru => "hlru",
            PolicyKind::HlfuStatic => "hlfu-static",
            PolicyKind::StaticOpt => "static-opt",
        }
    }

    /// Policies that need MR sizes in the catalog.
    pub fn needs_mr_sizes(&self) -> bool {
        matches!(
            self,
            PolicyKind::MrLru | PolicyKind::Hlru | PolicyKind::HlfuStatic
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(k: PolicyKind) -> Self {
        k.as_str().to_string()
    }
}

/// A cache whose contents never change; used to replay traces against
/// static placements.
#[derive(Debug, Clone)]
pub struct StaticCache {
    name: &'static str,
    capacity: f64,
    occupancy: f64,
    contents: Vec<Residency>,
    num_versions: usize,
}

impl StaticCache {
    pub fn new(
        name: &'static str,
        catalog: &Catalog,
        capacity: f64,
        contents: Vec<Residency>,
    ) -> Result<Self> {
        if contents.len() != catalog.num_objects() {
            return Err(Error::Config(format!(
                "static contents cover {} objects, catalog has {}",
                contents.len(),
                catalog.num_objects()
            )));
        }
        let occupancy = contents
            .iter()
            .enumerate()
            .map(|(d, r)| r.size(catalog, d))
            .sum();
        Ok(Self {
            name,
            capacity,
            occupancy,
            contents,
            num_versions: catalog.num_versions(),
        })
    }

    pub fn contents(&self) -> &[Residency] {
        &self.contents
    }
}

impl CachePolicy for StaticCache {
    fn name(&self) -> &'static str {
        self.name
    }

    fn access(&mut self, object: usize, version: usize) -> AccessOutcome {
        let r = self.contents[object];
        let resident_layers = match r {
            Residency::Lr(n) => n.min(version + 1),
            Residency::Mr(u) if u == version => version + 1,
            _ => 0,
        };
        AccessOutcome {
            hit: r.serves(version),
            resident_layers,
            ..AccessOutcome::default()
        }
    }

    fn last_evicted(&self) -> &[Unit] {
        &[]
    }

    fn capacity(&self) -> f64 {
        self.capacity
    }

    fn occupancy(&self) -> f64 {
        self.occupancy
    }

    fn resident_units(&self) -> Vec<Unit> {
        let mut out = Vec::new();
        for (d, r) in self.contents.iter().enumerate() {
            match *r {
                Residency::Absent => {}
                Residency::Mr(u) => out.push(Unit::version(d, u)),
                Residency::Lr(n) => out.extend((0..n).map(|l| Unit::layer(d, l))),
            }
        }
        out
    }

    fn is_layered(&self) -> bool {
        self.contents.iter().all(|r| !matches!(r, Residency::Mr(_)))
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.occupancy > self.capacity + size_slack(self.capacity) {
            return Err(format!(
                "occupancy {} exceeds capacity {}",
                self.occupancy, self.capacity
            ));
        }
        for (d, r) in self.contents.iter().enumerate() {
            match *r {
                Residency::Mr(u) if u >= self.num_versions => {
                    return Err(format!("object {d}: MR version {u} out of range"))
                }
                Residency::Lr(n) if n == 0 || n > self.num_versions => {
                    return Err(format!("object {d}: bad layer count {n}"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Builds an online policy by kind. Static kinds compute their placement
/// from the catalog's rates; `resolution` is the knapsack grid step for
/// `static-opt`.
pub fn build_policy(
    kind: PolicyKind,
    catalog: &Catalog,
    capacity: f64,
    resolution: f64,
) -> Result<Box<dyn CachePolicy>> {
    if !(capacity >= 0.0) || !capacity.is_finite() {
        return Err(Error::Config(format!(
            "capacity must be finite and non-negative, got {capacity}"
        )));
    }
    Ok(match kind {
        PolicyKind::Llru => Box::new(Llru::new(catalog, capacity)),
        PolicyKind::Llfu => Box::new(Llfu::new(catalog, capacity)),
        PolicyKind::MrLru => Box::new(MrLru::new(catalog, capacity)?),
        PolicyKind::Hlru => Box::new(Hlru::new(catalog, capacity)?),
        PolicyKind::HlfuStatic => {
            let p = hlfu_static_placement(catalog, capacity)?;
            Box::new(StaticCache::new("hlfu-static", catalog, capacity, p.contents)?)
        }
        PolicyKind::StaticOpt => {
            let p = static_optimal(catalog, capacity, resolution, DEFAULT_TABLE_CAP)?;
            Box::new(StaticCache::new("static-opt", catalog, capacity, p.residency())?)
        }
        PolicyKind::LBelady => {
            return Err(Error::Config(
                "lbelady is offline; run it over a full trace".into(),
            ))
        }
    })
}

/// Shared layer-prefix check over per-object resident layer counts.
pub(crate) fn check_layered(
    catalog: &Catalog,
    resident: &[usize],
    occupancy: f64,
    capacity: f64,
    units: &[Unit],
) -> std::result::Result<(), String> {
    if occupancy > capacity + size_slack(capacity) {
        return Err(format!("occupancy {occupancy} exceeds capacity {capacity}"));
    }
    let mut counted = vec![0usize; resident.len()];
    let mut size = 0.0;
    for u in units {
        if u.kind != UnitKind::Layer {
            return Err(format!("unexpected unit {u:?} in layered cache"));
        }
        if u.level >= resident[u.object] {
            return Err(format!(
                "layer {} of object {} resident above prefix {}",
                u.level, u.object, resident[u.object]
            ));
        }
        counted[u.object] += 1;
        size += catalog.layer_size(u.object, u.level);
    }
    for (d, (&c, &r)) in counted.iter().zip(resident).enumerate() {
        if c != r {
            return Err(format!(
                "object {d}: {c} resident units but prefix length {r} (layer-prefix broken)"
            ));
        }
    }
    if (size - occupancy).abs() > 1e-6 * capacity.max(1.0) {
        return Err(format!(
            "occupancy bookkeeping {occupancy} differs from resident total {size}"
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
        }
        assert!(matches!(
            "lru".parse::<PolicyKind>(),
            Err(Error::UnknownPolicy(_))
        ));
        let json = serde_json::to_string(&PolicyKind::HlfuStatic).unwrap();
        assert_eq!(json, "\"hlfu-static\"");
    }

    #[test]
    fn residency_serving() {
        assert!(!Residency::Absent.serves(0));
        assert!(Residency::Mr(1).serves(1));
        assert!(!Residency::Mr(1).serves(0));
        assert!(Residency::Lr(2).serves(1));
        assert!(!Residency::Lr(2).serves(2));
    }
}
