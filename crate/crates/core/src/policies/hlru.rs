use super::recency::RecencyList;
use super::{size_slack, AccessOutcome, CachePolicy, Residency, Unit};
use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// Checks the constraints under which greedy hybrid policies never lose
/// space by switching representation: `s_MR(d,v) <= s_LR(d,v)` and
/// `min_{u<v} s_MR(d,u) + s_MR(d,v) >= s_LR(d,v)`.
pub fn check_hybrid_feasibility(catalog: &Catalog, policy: &'static str) -> Result<()> {
    if !catalog.has_mr_sizes() {
        return Err(Error::MissingMrSizes { policy });
    }
    let tol = 1e-9;
    for d in 0..catalog.num_objects() {
        let mut smallest_lower = f64::INFINITY;
        for v in 0..catalog.num_versions() {
            let mr = catalog.mr_size(d, v).unwrap_or_default();
            let lr = catalog.lr_size(d, v);
            if mr > lr * (1.0 + tol) + tol {
                return Err(Error::HybridInfeasible {
                    object: d,
                    version: v,
                    reason: format!("MR size {mr} exceeds layered size {lr}"),
                });
            }
            if v > 0 && smallest_lower + mr < lr * (1.0 - tol) - tol {
                return Err(Error::HybridInfeasible {
                    object: d,
                    version: v,
                    reason: format!(
                        "two MR versions ({smallest_lower} + {mr}) are smaller than layered size {lr}"
                    ),
                });
            }
            smallest_lower = smallest_lower.min(mr);
        }
    }
    Ok(())
}

/// Greedy hybrid LRU: an object requested in a single version is held as an
/// MR blob; once a second version is requested it is converted to layered
/// form up to the larger of the two versions. MR blobs and layers share one
/// recency list.
#[derive(Debug, Clone)]
pub struct Hlru {
    catalog: Catalog,
    capacity: f64,
    occupancy: f64,
    state: Vec<Residency>,
    order: RecencyList,
    evicted: Vec<Unit>,
}

impl Hlru {
    pub fn new(catalog: &Catalog, capacity: f64) -> Result<Self> {
        check_hybrid_feasibility(catalog, "hlru")?;
        Ok(Self {
            catalog: catalog.clone(),
            capacity,
            occupancy: 0.0,
            state: vec![Residency::Absent; catalog.num_objects()],
            order: RecencyList::new(2 * catalog.num_units()),
            evicted: Vec::new(),
        })
    }

    pub fn residency(&self, object: usize) -> Residency {
        self.state[object]
    }

    fn mr_id(&self, object: usize, version: usize) -> usize {
        object * self.catalog.num_versions() + version
    }

    fn layer_id(&self, object: usize, layer: usize) -> usize {
        self.catalog.num_units() + object * self.catalog.num_versions() + layer
    }

    fn decode(&self, id: usize) -> Unit {
        let units = self.catalog.num_units();
        let v = self.catalog.num_versions();
        if id < units {
            Unit::version(id / v, id % v)
        } else {
            Unit::layer((id - units) / v, (id - units) % v)
        }
    }

    fn refresh_layers(&mut self, object: usize, top: usize) {
        for l in (0..=top).rev() {
            let id = self.layer_id(object, l);
            self.order.touch(id);
        }
    }

    /// Evicts least-recent units of other objects until `need` more fits.
    fn make_room(&mut self, object: usize, need: f64) -> f64 {
        let slack = size_slack(self.capacity);
        let mut evicted_bytes = 0.0;
        let mut cursor = self.order.back();
        while self.occupancy + need > self.capacity + slack {
            let Some(id) = cursor else { break };
            cursor = self.order.newer(id);
            let unit = self.decode(id);
            if unit.object == object {
                continue;
            }
            self.order.remove(id);
            let size = match unit.kind {
                super::UnitKind::Version => {
                    self.state[unit.object] = Residency::Absent;
                    self.catalog.mr_size(unit.object, unit.level).unwrap_or_default()
                }
                super::UnitKind::Layer => {
                    debug_assert_eq!(
                        Residency::Lr(unit.level + 1),
                        self.state[unit.object],
                        "tail unit is not a top layer"
                    );
                    self.state[unit.object] = if unit.level == 0 {
                        Residency::Absent
                    } else {
                        Residency::Lr(unit.level)
                    };
                    self.catalog.layer_size(unit.object, unit.level)
                }
            };
            self.occupancy -= size;
            evicted_bytes += size;
            self.evicted.push(unit);
        }
        evicted_bytes
    }

    fn miss(&mut self, evicted_bytes: f64, resident_layers: usize, changed: bool) -> AccessOutcome {
        AccessOutcome {
            hit: false,
            resident_layers,
            evicted_units: self.evicted.len(),
            evicted_bytes,
            representation_change: changed,
            ..AccessOutcome::default()
        }
    }
}

impl CachePolicy for Hlru {
    fn name(&self) -> &'static str {
        "hlru"
    }

    fn access(&mut self, object: usize, version: usize) -> AccessOutcome {
        self.evicted.clear();
        let slack = size_slack(self.capacity);
        let bypass = AccessOutcome {
            bypass: true,
            ..AccessOutcome::default()
        };
        match self.state[object] {
            Residency::Mr(u) if u == version => {
                let id = self.mr_id(object, u);
                self.order.touch(id);
                AccessOutcome {
                    hit: true,
                    resident_layers: version + 1,
                    ..AccessOutcome::default()
                }
            }
            Residency::Lr(n) if n > version => {
                self.refresh_layers(object, version);
                AccessOutcome {
                    hit: true,
                    resident_layers: version + 1,
                    ..AccessOutcome::default()
                }
            }
            Residency::Absent => {
                let size = self.catalog.mr_size(object, version).unwrap_or_default();
                if size > self.capacity + slack {
                    return bypass;
                }
                let freed = self.make_room(object, size);
                self.occupancy += size;
                let id = self.mr_id(object, version);
                self.order.touch(id);
                self.state[object] = Residency::Mr(version);
                self.miss(freed, 0, false)
            }
            Residency::Mr(u) => {
                let top = u.max(version);
                let target = self.catalog.lr_size(object, top);
                if target > self.capacity + slack {
                    return bypass;
                }
                let id = self.mr_id(object, u);
                self.order.remove(id);
                self.occupancy -= self.catalog.mr_size(object, u).unwrap_or_default();
                let freed = self.make_room(object, target);
                self.occupancy += target;
                self.refresh_layers(object, top);
                self.state[object] = Residency::Lr(top + 1);
                self.miss(freed, 0, true)
            }
            Residency::Lr(n) => {
                let full = self.catalog.lr_size(object, version);
                if full > self.capacity + slack {
                    return AccessOutcome {
                        resident_layers: n,
                        ..bypass
                    };
                }
                let need = full - self.catalog.lr_size(object, n - 1);
                let freed = self.make_room(object, need);
                self.occupancy += need;
                self.refresh_layers(object, version);
                self.state[object] = Residency::Lr(version + 1);
                self.miss(freed, n, false)
            }
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
        self.order.iter().map(|id| self.decode(id)).collect()
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
        let mut seen = vec![Residency::Absent; self.state.len()];
        let mut total = 0.0;
        for u in self.resident_units() {
            match u.kind {
                super::UnitKind::Version => {
                    if seen[u.object] != Residency::Absent {
                        return Err(format!("object {} has mixed representations", u.object));
                    }
                    seen[u.object] = Residency::Mr(u.level);
                    total += self.catalog.mr_size(u.object, u.level).unwrap_or_default();
                }
                super::UnitKind::Layer => {
                    seen[u.object] = match seen[u.object] {
                        Residency::Absent => Residency::Lr(1),
                        Residency::Lr(n) => Residency::Lr(n + 1),
                        Residency::Mr(_) => {
                            return Err(format!("object {} has mixed representations", u.object))
                        }
                    };
                    total += self.catalog.layer_size(u.object, u.level);
                }
            }
        }
        for (d, (s, r)) in seen.iter().zip(&self.state).enumerate() {
            if s != r {
                return Err(format!("object {d}: recorded {r:?} but resident {s:?}"));
            }
            if let Residency::Lr(n) = r {
                for l in 0..*n {
                    if !self.order.contains(self.layer_id(d, l)) {
                        return Err(format!("object {d}: layer {l} missing (layer-prefix broken)"));
                    }
                }
            }
        }
        if (total - self.occupancy).abs() > 1e-6 * self.capacity.max(1.0) {
            return Err(format!(
                "occupancy bookkeeping {} differs from resident total {total}",
                self.occupancy
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::OverheadModel;

    fn overhead_catalog(objects: usize, o: f64) -> Catalog {
        Catalog::with_overhead(
            &vec![vec![0.5, 1.0]; objects],
            OverheadModel::new(o).unwrap(),
            &vec![vec![0.5, 0.5]; objects],
        )
        .unwrap()
    }

    #[test]
    fn cold_request_stored_as_mr() {
        let cat = overhead_catalog(1, 25.0);
        let mut c = Hlru::new(&cat, 10.0).unwrap();
        let out = c.access(0, 0);
        assert!(!out.hit);
        assert_eq!(c.residency(0), Residency::Mr(0));
        assert!((c.occupancy() - 0.5).abs() < 1e-12);
        assert!(c.occupancy() < cat.lr_size(0, 0));
    }

    #[test]
    fn second_version_converts_to_layers() {
        let cat = overhead_catalog(1, 25.0);
        let mut c = Hlru::new(&cat, 10.0).unwrap();
        c.access(0, 0);
        let out = c.access(0, 1);
        assert!(!out.hit && out.representation_change);
        assert_eq!(c.residency(0), Residency::Lr(2));
        assert!((c.occupancy() - 1.25).abs() < 1e-12);
        assert!(c.occupancy() <= 0.5 + 1.0);
        assert!(c.access(0, 0).hit);
        c.check_invariants().unwrap();
    }

    #[test]
    fn same_version_hits_without_change() {
        let cat = overhead_catalog(1, 25.0);
        let mut c = Hlru::new(&cat, 10.0).unwrap();
        c.access(0, 1);
        let out = c.access(0, 1);
        assert!(out.hit && !out.representation_change);
        assert_eq!(c.residency(0), Residency::Mr(1));
    }

    #[test]
    fn conversion_evicts_other_objects() {
        let cat = overhead_catalog(2, 25.0);
        let mut c = Hlru::new(&cat, 1.5).unwrap();
        c.access(0, 0);
        c.access(1, 1);
        c.access(0, 1);
        assert_eq!(c.residency(0), Residency::Lr(2));
        assert_eq!(c.residency(1), Residency::Absent);
        assert_eq!(c.last_evicted(), &[Unit::version(1, 1)]);
        c.check_invariants().unwrap();
    }

    #[test]
    fn rejects_infeasible_catalogs() {
        // Layered form larger than two MR versions together.
        let cat = Catalog::from_rows(&[vec![1.0, 2.0]], Some(&[vec![0.5, 1.0]]), &[vec![1.0, 1.0]])
            .unwrap();
        assert!(matches!(
            Hlru::new(&cat, 5.0),
            Err(Error::HybridInfeasible { .. })
        ));
        let cat = Catalog::from_rows(&[vec![0.4, 0.6]], Some(&[vec![0.5, 1.0]]), &[vec![1.0, 1.0]])
            .unwrap();
        assert!(Hlru::new(&cat, 5.0).is_err());
    }
}
