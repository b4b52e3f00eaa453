use super::recency::RecencyList;
use super::{check_layered, size_slack, AccessOutcome, CachePolicy, Unit};
use crate::catalog::Catalog;

/// Layered LRU.
///
/// A request for version `v` touches layers `0..=v`. Touched layers move to
/// the most-recent end with lower layers newer than higher ones, so the
/// least-recent end always holds the top layer of some object and tail
/// eviction preserves the layer prefix. On a miss the requested object's
/// layers are pinned while room is made.
#[derive(Debug, Clone)]
pub struct Llru {
    catalog: Catalog,
    capacity: f64,
    occupancy: f64,
    resident: Vec<usize>,
    order: RecencyList,
    evicted: Vec<Unit>,
}

impl Llru {
    pub fn new(catalog: &Catalog, capacity: f64) -> Self {
        Self {
            catalog: catalog.clone(),
            capacity,
            occupancy: 0.0,
            resident: vec![0; catalog.num_objects()],
            order: RecencyList::new(catalog.num_units()),
            evicted: Vec::new(),
        }
    }

    /// Number of resident layers of `object`.
    pub fn resident_layers(&self, object: usize) -> usize {
        self.resident[object]
    }

    /// Resident units from most to least recent.
    pub fn recency_order(&self) -> Vec<Unit> {
        let v = self.catalog.num_versions();
        self.order.iter().map(|id| Unit::layer(id / v, id % v)).collect()
    }

    fn refresh(&mut self, object: usize, version: usize) {
        let base = object * self.catalog.num_versions();
        for l in (0..=version).rev() {
            self.order.touch(base + l);
        }
    }
}

impl CachePolicy for Llru {
    fn name(&self) -> &'static str {
        "llru"
    }

    fn access(&mut self, object: usize, version: usize) -> AccessOutcome {
        self.evicted.clear();
        let present = self.resident[object];
        let resident_layers = present.min(version + 1);
        if present > version {
            self.refresh(object, version);
            return AccessOutcome {
                hit: true,
                resident_layers,
                ..AccessOutcome::default()
            };
        }
        let full = self.catalog.lr_size(object, version);
        let slack = size_slack(self.capacity);
        if full > self.capacity + slack {
            return AccessOutcome {
                bypass: true,
                resident_layers,
                ..AccessOutcome::default()
            };
        }
        let held = if present == 0 {
            0.0
        } else {
            self.catalog.lr_size(object, present - 1)
        };
        let need = full - held;
        let v = self.catalog.num_versions();
        let mut evicted_bytes = 0.0;
        let mut cursor = self.order.back();
        while self.occupancy + need > self.capacity + slack {
            let Some(id) = cursor else { break };
            cursor = self.order.newer(id);
            let (e, l) = (id / v, id % v);
            if e == object {
                continue;
            }
            debug_assert_eq!(l + 1, self.resident[e], "tail unit is not a top layer");
            self.order.remove(id);
            self.resident[e] = l;
            let s = self.catalog.layer_size(e, l);
            self.occupancy -= s;
            evicted_bytes += s;
            self.evicted.push(Unit::layer(e, l));
        }
        self.occupancy += need;
        self.resident[object] = version + 1;
        self.refresh(object, version);
        AccessOutcome {
            hit: false,
            resident_layers,
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
        self.recency_order()
    }

    fn is_layered(&self) -> bool {
        true
    }

    fn check_invariants(&self) -> Result<(), String> {
        check_layered(
            &self.catalog,
            &self.resident,
            self.occupancy,
            self.capacity,
            &self.recency_order(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_catalog(objects: usize) -> Catalog {
        Catalog::from_rows(&vec![vec![1.0]; objects], None, &vec![vec![1.0]; objects]).unwrap()
    }

    #[test]
    fn fits_entirely() {
        let mut c = Llru::new(&unit_catalog(2), 2.0);
        let hits: Vec<bool> = [0, 1, 0].iter().map(|&d| c.access(d, 0).hit).collect();
        assert_eq!(hits, vec![false, false, true]);
        assert_eq!(c.resident_units().len(), 2);
    }

    #[test]
    fn classic_lru_step() {
        let mut c = Llru::new(&unit_catalog(3), 2.0);
        c.access(0, 0);
        c.access(1, 0);
        let out = c.access(2, 0);
        assert!(!out.hit);
        assert_eq!(c.last_evicted(), &[Unit::layer(0, 0)]);
    }

    #[test]
    fn higher_layer_is_older_within_a_touch() {
        let cat = Catalog::from_rows(
            &[vec![1.0, 1.0], vec![1.0, 0.0]],
            None,
            &[vec![1.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let mut c = Llru::new(&cat, 2.0);
        c.access(0, 1);
        assert_eq!(c.recency_order(), vec![Unit::layer(0, 0), Unit::layer(0, 1)]);
        let out = c.access(1, 0);
        assert!(!out.hit);
        assert_eq!(c.last_evicted(), &[Unit::layer(0, 1)]);
        assert_eq!(c.resident_layers(0), 1);
        assert_eq!(c.resident_layers(1), 1);
        c.check_invariants().unwrap();
    }

    #[test]
    fn oversize_requests_bypass() {
        let cat = Catalog::from_rows(&[vec![1.0, 5.0]], None, &[vec![1.0, 1.0]]).unwrap();
        let mut c = Llru::new(&cat, 2.0);
        c.access(0, 0);
        let out = c.access(0, 1);
        assert!(out.bypass && !out.hit);
        assert_eq!(out.resident_layers, 1);
        assert_eq!(c.resident_layers(0), 1);
        let z = Llru::new(&cat, 0.0).access(0, 0);
        assert!(z.bypass);
    }

    #[test]
    fn partial_prefix_extension() {
        let cat = Catalog::from_rows(
            &[vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]],
            None,
            &[vec![1.0; 3], vec![1.0; 3]],
        )
        .unwrap();
        let mut c = Llru::new(&cat, 4.0);
        c.access(0, 0);
        c.access(1, 1);
        // Object 0 grows to three layers; only object 1's top layer goes.
        let out = c.access(0, 2);
        assert!(!out.hit);
        assert_eq!(out.resident_layers, 1);
        assert_eq!(c.last_evicted(), &[Unit::layer(1, 1)]);
        c.check_invariants().unwrap();
    }
}
