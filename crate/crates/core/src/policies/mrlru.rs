use super::recency::RecencyList;
use super::{size_slack, AccessOutcome, CachePolicy, Unit};
use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// LRU over independent multi-representation versions. A cached version
/// serves only requests for exactly that version.
#[derive(Debug, Clone)]
pub struct MrLru {
    versions: usize,
    sizes: Vec<f64>,
    capacity: f64,
    occupancy: f64,
    order: RecencyList,
    evicted: Vec<Unit>,
}

impl MrLru {
    pub fn new(catalog: &Catalog, capacity: f64) -> Result<Self> {
        let sizes = catalog
            .mr_size_matrix()
            .ok_or(Error::MissingMrSizes { policy: "mrlru" })?
            .to_vec();
        Ok(Self {
            versions: catalog.num_versions(),
            sizes,
            capacity,
            occupancy: 0.0,
            order: RecencyList::new(catalog.num_units()),
            evicted: Vec::new(),
        })
    }

    pub fn is_resident(&self, object: usize, version: usize) -> bool {
        self.order.contains(object * self.versions + version)
    }
}

impl CachePolicy for MrLru {
    fn name(&self) -> &'static str {
        "mrlru"
    }

    fn access(&mut self, object: usize, version: usize) -> AccessOutcome {
        self.evicted.clear();
        let id = object * self.versions + version;
        if self.order.contains(id) {
            self.order.touch(id);
            return AccessOutcome {
                hit: true,
                resident_layers: version + 1,
                ..AccessOutcome::default()
            };
        }
        let size = self.sizes[id];
        let slack = size_slack(self.capacity);
        if size > self.capacity + slack {
            return AccessOutcome {
                bypass: true,
                ..AccessOutcome::default()
            };
        }
        let mut evicted_bytes = 0.0;
        while self.occupancy + size > self.capacity + slack {
            let Some(victim) = self.order.back() else { break };
            self.order.remove(victim);
            let s = self.sizes[victim];
            self.occupancy -= s;
            evicted_bytes += s;
            self.evicted
                .push(Unit::version(victim / self.versions, victim % self.versions));
        }
        self.occupancy += size;
        self.order.touch(id);
        AccessOutcome {
            hit: false,
            evicted_units: self.evicted.len(),
            evicted_bytes,
            ..AccessOutcome::default()
        }
    }

    fn last_evicted(&self) -> &[Unit] {
        &self.evicted
    }

    fn capacity(&self) -> f64 {
        self.capacity
    }

    fn occupancy(&self) -> f64 {
        self.occupancy
    }

    fn resident_units(&self) -> Vec<Unit> {
        self.order
            .iter()
            .map(|id| Unit::version(id / self.versions, id % self.versions))
            .collect()
    }

    fn is_layered(&self) -> bool {
        false
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.occupancy > self.capacity + size_slack(self.capacity) {
            return Err(format!(
                "occupancy {} exceeds capacity {}",
                self.occupancy, self.capacity
            ));
        }
        let total: f64 = self.order.iter().map(|id| self.sizes[id]).sum();
        if (total - self.occupancy).abs() > 1e-6 * self.capacity.max(1.0) {
            return Err(format!(
                "occupancy bookkeeping {} differs from resident total {total}",
                self.occupancy
            ));
        }
        Ok(())
    }
}
