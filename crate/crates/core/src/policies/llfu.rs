use std::cmp::Reverse;
use std::collections::BTreeSet;

use super::{check_layered, size_slack, AccessOutcome, CachePolicy, Unit};
use crate::catalog::Catalog;

/// Per-layer access counts for every unit of the catalog, resident or not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqTable {
    versions: usize,
    counts: Vec<u64>,
}

impl FreqTable {
    pub fn new(num_objects: usize, num_versions: usize) -> Self {
        Self {
            versions: num_versions,
            counts: vec![0; num_objects * num_versions],
        }
    }

    /// Wraps explicit counts, row-major by object.
    pub fn from_counts(num_versions: usize, counts: Vec<u64>) -> Self {
        assert!(num_versions > 0 && counts.len().is_multiple_of(num_versions));
        Self {
            versions: num_versions,
            counts,
        }
    }

    #[inline]
    pub fn get(&self, object: usize, layer: usize) -> u64 {
        self.counts[object * self.versions + layer]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Counts one request for `version`: every layer up to it is touched.
    pub fn record(&mut self, object: usize, version: usize) {
        let base = object * self.versions;
        for c in &mut self.counts[base..=base + version] {
            *c += 1;
        }
    }

    pub fn min(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    /// Whether `c(d, l) >= c(d, l + 1)` holds for every object.
    pub fn is_layer_monotone(&self) -> bool {
        self.counts
            .chunks(self.versions)
            .all(|row| row.windows(2).all(|w| w[0] >= w[1]))
    }
}

/// Subtracts the smallest count from every count.
pub fn decay_counts(freq: &mut FreqTable) {
    let m = freq.min();
    if m > 0 {
        for c in &mut freq.counts {
            *c -= m;
        }
    }
}

/// Eviction key: smallest first. Higher layers go before lower ones on
/// equal counts, then the least recently accessed unit.
type Key = (u64, Reverse<u32>, u64, u32);

/// Layered LFU with a global, persistent frequency table.
#[derive(Debug, Clone)]
pub struct Llfu {
    catalog: Catalog,
    capacity: f64,
    occupancy: f64,
    resident: Vec<usize>,
    freq: FreqTable,
    last_access: Vec<u64>,
    queue: BTreeSet<Key>,
    clock: u64,
    evicted: Vec<Unit>,
}

impl Llfu {
    pub fn new(catalog: &Catalog, capacity: f64) -> Self {
        Self {
            catalog: catalog.clone(),
            capacity,
            occupancy: 0.0,
            resident: vec![0; catalog.num_objects()],
            freq: FreqTable::new(catalog.num_objects(), catalog.num_versions()),
            last_access: vec![0; catalog.num_units()],
            queue: BTreeSet::new(),
            clock: 0,
            evicted: Vec::new(),
        }
    }

    pub fn freq(&self) -> &FreqTable {
        &self.freq
    }

    pub fn resident_layers(&self, object: usize) -> usize {
        self.resident[object]
    }

    fn key(&self, object: usize, layer: usize) -> Key {
        let id = object * self.catalog.num_versions() + layer;
        (
            self.freq.counts[id],
            Reverse(layer as u32),
            self.last_access[id],
            object as u32,
        )
    }

    /// Subtracts the smallest count from every unit's count; eviction order
    /// is unchanged.
    pub fn decay_counts(&mut self) {
        decay_counts(&mut self.freq);
        let keys: Vec<Key> = (0..self.resident.len())
            .flat_map(|d| (0..self.resident[d]).map(move |l| (d, l)))
            .map(|(d, l)| self.key(d, l))
            .collect();
        self.queue = keys.into_iter().collect();
    }
}

impl CachePolicy for Llfu {
    fn name(&self) -> &'static str {
        "llfu"
    }

    fn access(&mut self, object: usize, version: usize) -> AccessOutcome {
        self.evicted.clear();
        self.clock += 1;
        let present = self.resident[object];
        let resident_layers = present.min(version + 1);
        let v = self.catalog.num_versions();

        // Counts are bumped before any eviction decision.
        for l in 0..=version {
            let resident = l < present;
            if resident {
                let old = self.key(object, l);
                self.queue.remove(&old);
            }
            let id = object * v + l;
            self.freq.counts[id] += 1;
            self.last_access[id] = self.clock;
            if resident {
                let new = self.key(object, l);
                self.queue.insert(new);
            }
        }
        if present > version {
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

        let mut victims: Vec<Key> = Vec::new();
        let mut freed = 0.0;
        for key in self.queue.iter() {
            if self.occupancy - freed + need <= self.capacity + slack {
                break;
            }
            let (e, l) = (key.3 as usize, key.1 .0 as usize);
            if e == object {
                continue;
            }
            freed += self.catalog.layer_size(e, l);
            victims.push(*key);
        }
        let mut evicted_bytes = 0.0;
        for key in victims {
            let (e, l) = (key.3 as usize, key.1 .0 as usize);
            debug_assert_eq!(l + 1, self.resident[e], "evicting below the top layer");
            self.queue.remove(&key);
            self.resident[e] = l;
            let s = self.catalog.layer_size(e, l);
            self.occupancy -= s;
            evicted_bytes += s;
            self.evicted.push(Unit::layer(e, l));
        }
        self.occupancy += need;
        for l in present..=version {
            let k = self.key(object, l);
            self.queue.insert(k);
        }
        self.resident[object] = version + 1;
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
        self.queue
            .iter()
            .map(|k| Unit::layer(k.3 as usize, k.1 .0 as usize))
            .collect()
    }

    fn is_layered(&self) -> bool {
        true
    }

    fn check_invariants(&self) -> Result<(), String> {
        if !self.freq.is_layer_monotone() {
            return Err("access counts not monotone across layers".into());
        }
        check_layered(
            &self.catalog,
            &self.resident,
            self.occupancy,
            self.capacity,
            &self.resident_units(),
        )
    }
}
