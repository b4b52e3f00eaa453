//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use layercache::workload::Trace;
use layercache::Catalog;
use rand::Rng;

/// `Σ_d Σ_{v < prefix[d]} λ(d, v)`, summed in object order.
pub fn prefix_value(cat: &Catalog, prefix: &[usize]) -> f64 {
    let mut total = 0.0;
    for (d, &k) in prefix.iter().enumerate() {
        for v in 0..k {
            total += cat.rate(d, v);
        }
    }
    total
}

fn prefix_size(cat: &Catalog, prefix: &[usize]) -> f64 {
    prefix
        .iter()
        .enumerate()
        .map(|(d, &k)| if k == 0 { 0.0 } else { cat.lr_size(d, k - 1) })
        .sum()
}

/// Best value over every per-object prefix choice that fits in `budget`.
pub fn enumerate_static_opt(cat: &Catalog, budget: f64) -> f64 {
    let (n, v) = (cat.num_objects(), cat.num_versions());
    let mut prefix = vec![0usize; n];
    let mut best = 0.0f64;
    loop {
        if prefix_size(cat, &prefix) <= budget + 1e-9 {
            best = best.max(prefix_value(cat, &prefix));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            prefix[i] += 1;
            if prefix[i] <= v {
                break;
            }
            prefix[i] = 0;
            i += 1;
        }
    }
}

/// Random catalog with integer layer sizes in `0..=max_size` (the first
/// layer at least 1) and rates in `(0, 1]`.
pub fn random_integer_catalog<R: Rng>(rng: &mut R, objects: usize, versions: usize, max_size: u32) -> Catalog {
    let layers: Vec<Vec<f64>> = (0..objects)
        .map(|_| {
            (0..versions)
                .map(|l| {
                    let lo = if l == 0 { 1 } else { 0 };
                    rng.random_range(lo..=max_size) as f64
                })
                .collect()
        })
        .collect();
    let rates: Vec<Vec<f64>> = (0..objects)
        .map(|_| (0..versions).map(|_| 1.0 - rng.random::<f64>()).collect())
        .collect();
    Catalog::from_rows(&layers, None, &rates).unwrap()
}

/// Unit-size layered catalog with equal rates.
pub fn unit_catalog(objects: usize, versions: usize) -> Catalog {
    Catalog::from_rows(&vec![vec![1.0; versions]; objects], None, &vec![vec![1.0; versions]; objects]).unwrap()
}

/// Fewest misses any demand-fetching layered cache of `capacity` unit
/// layers can achieve on `trace`, by exhaustive search over eviction
/// choices.
pub fn offline_min_misses(objects: usize, capacity: usize, trace: &[(usize, usize)]) -> u32 {
    fn go(
        t: usize,
        state: Vec<u8>,
        capacity: usize,
        trace: &[(usize, usize)],
        memo: &mut HashMap<(usize, Vec<u8>), u32>,
    ) -> u32 {
        if t == trace.len() {
            return 0;
        }
        if let Some(&m) = memo.get(&(t, state.clone())) {
            return m;
        }
        let (d, v) = trace[t];
        let need = v as u8 + 1;
        let best = if state[d] >= need {
            go(t + 1, state.clone(), capacity, trace, memo)
        } else if need as usize > capacity {
            1 + go(t + 1, state.clone(), capacity, trace, memo)
        } else {
            // Every way of shrinking the other objects' prefixes so the
            // requested prefix fits.
            let mut best = u32::MAX;
            let mut next = state.clone();
            next[d] = need;
            let others: Vec<usize> = (0..state.len()).filter(|&e| e != d).collect();
            let mut choice = vec![0u8; others.len()];
            loop {
                for (i, &e) in others.iter().enumerate() {
                    next[e] = choice[i];
                }
                let used: usize = next.iter().map(|&x| x as usize).sum();
                if used <= capacity {
                    best = best.min(go(t + 1, next.clone(), capacity, trace, memo));
                }
                let mut i = 0;
                loop {
                    if i == others.len() {
                        break;
                    }
                    choice[i] += 1;
                    if choice[i] <= state[others[i]] {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == others.len() {
                    break;
                }
            }
            1 + best
        };
        memo.insert((t, state), best);
        best
    }
    go(0, vec![0; objects], capacity, trace, &mut HashMap::new())
}

/// Textbook size-aware LRU over whole objects. Returns the hit sequence.
pub fn textbook_lru(sizes: &[f64], capacity: f64, trace: &Trace) -> Vec<bool> {
    let mut order: Vec<usize> = Vec::new(); // most recent last
    let mut used = 0.0;
    let mut out = Vec::with_capacity(trace.len());
    for r in &trace.entries {
        let d = r.object();
        if let Some(i) = order.iter().position(|&x| x == d) {
            order.remove(i);
            order.push(d);
            out.push(true);
            continue;
        }
        out.push(false);
        if sizes[d] > capacity + 1e-9 {
            continue;
        }
        while used + sizes[d] > capacity + 1e-9 {
            let e = order.remove(0);
            used -= sizes[e];
        }
        used += sizes[d];
        order.push(d);
    }
    out
}

/// Textbook LFU with persistent counts; ties go to the least recently
/// accessed object.
pub fn textbook_lfu(sizes: &[f64], capacity: f64, trace: &Trace) -> Vec<bool> {
    let n = sizes.len();
    let mut count = vec![0u64; n];
    let mut last = vec![0u64; n];
    let mut resident = vec![false; n];
    let mut used = 0.0;
    let mut out = Vec::with_capacity(trace.len());
    for (t, r) in trace.entries.iter().enumerate() {
        let d = r.object();
        count[d] += 1;
        last[d] = t as u64 + 1;
        if resident[d] {
            out.push(true);
            continue;
        }
        out.push(false);
        if sizes[d] > capacity + 1e-9 {
            continue;
        }
        while used + sizes[d] > capacity + 1e-9 {
            let e = (0..n)
                .filter(|&e| resident[e])
                .min_by_key(|&e| (count[e], last[e], e))
                .unwrap();
            resident[e] = false;
            used -= sizes[e];
        }
        resident[d] = true;
        used += sizes[d];
    }
    out
}

/// Textbook Belady: evict the object requested farthest in the future,
/// ties to the larger index.
pub fn textbook_belady(sizes: &[f64], capacity: f64, trace: &Trace) -> Vec<bool> {
    let n = sizes.len();
    let reqs: Vec<usize> = trace.entries.iter().map(|r| r.object()).collect();
    let mut later = vec![usize::MAX; reqs.len()];
    let mut seen = vec![usize::MAX; n];
    for t in (0..reqs.len()).rev() {
        later[t] = seen[reqs[t]];
        seen[reqs[t]] = t;
    }
    let mut next = vec![usize::MAX; n];
    let mut resident = vec![false; n];
    let mut used = 0.0;
    let mut out = Vec::with_capacity(reqs.len());
    for (t, &d) in reqs.iter().enumerate() {
        next[d] = later[t];
        if resident[d] {
            out.push(true);
            continue;
        }
        out.push(false);
        if sizes[d] > capacity + 1e-9 {
            continue;
        }
        while used + sizes[d] > capacity + 1e-9 {
            let e = (0..n)
                .filter(|&e| resident[e] && e != d)
                .max_by_key(|&e| (next[e], e))
                .unwrap();
            resident[e] = false;
            used -= sizes[e];
        }
        resident[d] = true;
        used += sizes[d];
    }
    out
}
