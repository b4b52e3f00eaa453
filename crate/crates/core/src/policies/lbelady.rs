use std::collections::BTreeSet;

use super::{check_layered, size_slack, AccessOutcome, CachePolicy, Unit};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::workload::Trace;

/// Next-access position of a unit that is never touched again.
pub const NEVER: u64 = u64::MAX;

/// Positions at which each (object, layer) is touched by a trace. A request
/// for version `v` touches layers `0..=v`.
#[derive(Debug, Clone)]
pub struct NextAccessIndex {
    versions: usize,
    touches: Vec<Vec<u64>>,
}

impl NextAccessIndex {
    pub fn build(trace: &Trace, num_objects: usize, num_versions: usize) -> Result<Self> {
        trace.validate(num_objects, num_versions)?;
        let mut touches = vec![Vec::new(); num_objects * num_versions];
        for (t, r) in trace.entries.iter().enumerate() {
            let base = r.object() * num_versions;
            for l in 0..=r.version() {
                touches[base + l].push(t as u64);
            }
        }
        Ok(Self {
            versions: num_versions,
            touches,
        })
    }

    /// Smallest position strictly after `t` touching `layer` of `object`,
    /// or [`NEVER`].
    pub fn next_after(&self, t: u64, object: usize, layer: usize) -> u64 {
        let list = &self.touches[object * self.versions + layer];
        let i = list.partition_point(|&p| p <= t);
        list.get(i).copied().unwrap_or(NEVER)
    }
}

/// Layered Belady: evicts the resident layer whose next use is farthest in
/// the future. Offline; it replays a fixed trace.
#[derive(Debug, Clone)]
pub struct LBelady {
    catalog: Catalog,
    capacity: f64,
    occupancy: f64,
    resident: Vec<usize>,
    index: NextAccessIndex,
    trace: Trace,
    position: usize,
    next_use: Vec<u64>,
    // (next use, layer, object); evicted from the largest end.
    queue: BTreeSet<(u64, u32, u32)>,
    evicted: Vec<Unit>,
}

impl LBelady {
    pub fn new(catalog: &Catalog, capacity: f64, trace: &Trace) -> Result<Self> {
        let index = NextAccessIndex::build(trace, catalog.num_objects(), catalog.num_versions())?;
        Ok(Self {
            catalog: catalog.clone(),
            capacity,
            occupancy: 0.0,
            resident: vec![0; catalog.num_objects()],
            index,
            trace: trace.clone(),
            position: 0,
            next_use: vec![NEVER; catalog.num_units()],
            queue: BTreeSet::new(),
            evicted: Vec::new(),
        })
    }

    pub fn remaining(&self) -> usize {
        self.trace.len() - self.position
    }

    pub fn resident_layers(&self, object: usize) -> usize {
        self.resident[object]
    }

    /// Serves the next request of the trace.
    pub fn step(&mut self) -> Option<AccessOutcome> {
        let r = *self.trace.entries.get(self.position)?;
        let t = self.position as u64;
        self.position += 1;
        Some(self.serve(t, r.object(), r.version()))
    }

    fn retag(&mut self, t: u64, object: usize, layer: usize, resident: bool) {
        let id = object * self.catalog.num_versions() + layer;
        if resident {
            self.queue
                .remove(&(self.next_use[id], layer as u32, object as u32));
        }
        let f = self.index.next_after(t, object, layer);
        self.next_use[id] = f;
        self.queue.insert((f, layer as u32, object as u32));
    }

    fn serve(&mut self, t: u64, object: usize, version: usize) -> AccessOutcome {
        self.evicted.clear();
        let present = self.resident[object];
        let resident_layers = present.min(version + 1);
        if present > version {
            for l in 0..=version {
                self.retag(t, object, l, true);
            }
            return AccessOutcome {
                hit: true,
                resident_layers,
                ..AccessOutcome::default()
            };
        }
        let full = self.catalog.lr_size(object, version);
        let slack = size_slack(self.capacity);
        if full > self.capacity + slack {
            // The resident prefix was still touched by this request.
            for l in 0..present {
                self.retag(t, object, l, true);
            }
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
        let mut victims = Vec::new();
        let mut freed = 0.0;
        for key in self.queue.iter().rev() {
            if self.occupancy - freed + need <= self.capacity + slack {
                break;
            }
            let (e, l) = (key.2 as usize, key.1 as usize);
            if e == object {
                continue;
            }
            freed += self.catalog.layer_size(e, l);
            victims.push(*key);
        }
        let mut evicted_bytes = 0.0;
        for key in victims {
            let (e, l) = (key.2 as usize, key.1 as usize);
            debug_assert_eq!(l + 1, self.resident[e], "evicting below the top layer");
            self.queue.remove(&key);
            self.resident[e] = l;
            self.next_use[e * self.catalog.num_versions() + l] = NEVER;
            let s = self.catalog.layer_size(e, l);
            self.occupancy -= s;
            evicted_bytes += s;
            self.evicted.push(Unit::layer(e, l));
        }
        self.occupancy += need;
        for l in 0..=version {
            self.retag(t, object, l, l < present);
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
}

impl CachePolicy for LBelady {
    fn name(&self) -> &'static str {
        "lbelady"
    }

    /// Requests must arrive in trace order.
    fn access(&mut self, object: usize, version: usize) -> AccessOutcome {
        let expected = self.trace.entries[self.position];
        assert!(
            expected.object() == object && expected.version() == version,
            "lbelady received ({object}, {version}) but the trace has ({}, {}) at position {}",
            expected.object(),
            expected.version(),
            self.position
        );
        self.step().expect("trace exhausted")
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
            .map(|k| Unit::layer(k.2 as usize, k.1 as usize))
            .collect()
    }

    fn is_layered(&self) -> bool {
        true
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        check_layered(
            &self.catalog,
            &self.resident,
            self.occupancy,
            self.capacity,
            &self.resident_units(),
        )
    }
}

/// Runs LBelady over the whole trace, returning one outcome per request.
pub(crate) fn run_outcomes(
    catalog: &Catalog,
    capacity: f64,
    trace: &Trace,
) -> Result<Vec<AccessOutcome>> {
    if !(capacity >= 0.0) {
        return Err(Error::Config(format!("capacity must be non-negative, got {capacity}")));
    }
    let mut policy = LBelady::new(catalog, capacity, trace)?;
    let mut out = Vec::with_capacity(trace.len());
    while let Some(o) = policy.step() {
        out.push(o);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_catalog(objects: usize) -> Catalog {
        Catalog::from_rows(&vec![vec![1.0]; objects], None, &vec![vec![1.0]; objects]).unwrap()
    }

    #[test]
    fn evicts_the_unit_never_used_again() {
        let cat = unit_catalog(3);
        let trace = Trace::from_pairs(&[(0, 0), (1, 0), (2, 0), (0, 0)]);
        let mut b = LBelady::new(&cat, 2.0, &trace).unwrap();
        let hits: Vec<bool> = std::iter::from_fn(|| b.step()).map(|o| o.hit).collect();
        assert_eq!(hits, vec![false, false, false, true]);
    }

    #[test]
    fn bypass_refreshes_the_resident_prefix() {
        // Object 0 holds two unit layers; a bypassed request for its third
        // layer must not leave stale next-use keys behind.
        let cat = Catalog::from_rows(&vec![vec![1.0, 1.0, 1.0]; 2], None, &vec![vec![1.0; 3]; 2])
            .unwrap();
        let trace = Trace::from_pairs(&[(0, 1), (0, 2), (0, 0), (1, 0), (0, 1)]);
        let mut b = LBelady::new(&cat, 2.0, &trace).unwrap();
        while b.step().is_some() {
            b.check_invariants().unwrap();
        }
        assert_eq!(b.resident_layers(0), 2);
        assert_eq!(b.resident_layers(1), 0);
    }

    #[test]
    fn first_touches_always_miss() {
        let cat = unit_catalog(4);
        let trace = Trace::from_pairs(&[(0, 0), (1, 0), (2, 0), (3, 0)]);
        let outs = run_outcomes(&cat, 2.0, &trace).unwrap();
        assert!(outs.iter().all(|o| !o.hit));
    }

    #[test]
    fn infinite_ties_prefer_higher_layer_then_object() {
        let cat = Catalog::from_rows(&vec![vec![1.0, 1.0]; 3], None, &vec![vec![1.0, 1.0]; 3])
            .unwrap();
        let trace = Trace::from_pairs(&[(0, 1), (1, 0), (2, 0)]);
        let mut b = LBelady::new(&cat, 3.0, &trace).unwrap();
        b.step();
        b.step();
        b.step();
        assert_eq!(b.last_evicted(), &[Unit::layer(0, 1)]);
        b.check_invariants().unwrap();
    }

    #[test]
    fn next_access_query() {
        let trace = Trace::from_pairs(&[(0, 1), (0, 0), (1, 0), (0, 1)]);
        let idx = NextAccessIndex::build(&trace, 2, 2).unwrap();
        assert_eq!(idx.next_after(0, 0, 0), 1);
        assert_eq!(idx.next_after(0, 0, 1), 3);
        assert_eq!(idx.next_after(3, 0, 0), NEVER);
        assert_eq!(idx.next_after(0, 1, 1), NEVER);
    }
}
