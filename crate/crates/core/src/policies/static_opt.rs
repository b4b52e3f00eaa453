use super::Residency;
use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// Default cap on the number of cells in the knapsack choice table.
pub const DEFAULT_TABLE_CAP: u128 = 200_000_000;

/// Static layered placement: object `d` holds its first `prefix[d]`
/// versions (equivalently layers).
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub prefix: Vec<usize>,
    /// `Σ λ(d,v)` over cached versions.
    pub value: f64,
    /// Exact (unrounded) space used.
    pub size: f64,
}

impl Placement {
    /// `x(d, v)` for zero-based `v`.
    pub fn includes(&self, object: usize, version: usize) -> bool {
        version < self.prefix[object]
    }

    pub fn residency(&self) -> Vec<Residency> {
        self.prefix
            .iter()
            .map(|&n| if n == 0 { Residency::Absent } else { Residency::Lr(n) })
            .collect()
    }

    /// Value normalized by the total request rate.
    pub fn hit_rate(&self, catalog: &Catalog) -> f64 {
        self.value / catalog.rate_matrix().iter().sum::<f64>()
    }
}

fn cells_up(size: f64, resolution: f64) -> usize {
    let x = size / resolution;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn cells_down(size: f64, resolution: f64) -> usize {
    let x = size / resolution;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// Hit-rate-maximizing layered placement under the capacity and prefix
/// constraints.
///
/// Each object picks a version prefix (a multiple-choice knapsack item).
/// Sizes are quantized to `resolution`: item costs round up and the budget
/// rounds down, so the result is always feasible, and exact whenever every
/// size is a multiple of the resolution.
pub fn static_optimal(
    catalog: &Catalog,
    capacity: f64,
    resolution: f64,
    table_cap: u128,
) -> Result<Placement> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::Config(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    if !(capacity >= 0.0) || !capacity.is_finite() {
        return Err(Error::Config(format!(
            "capacity must be finite and non-negative, got {capacity}"
        )));
    }
    let d_count = catalog.num_objects();
    let v_count = catalog.num_versions();
    let budget = cells_down(capacity, resolution);
    let table = (d_count as u128) * (budget as u128 + 1);
    if table > table_cap {
        return Err(Error::TableTooLarge {
            cells: table,
            cap: table_cap,
        });
    }

    // best[c]: max value using at most c cells over the objects seen so far.
    let mut best = vec![0.0f64; budget + 1];
    let mut choice = vec![0u16; d_count * (budget + 1)];
    let mut next = vec![0.0f64; budget + 1];
    let mut costs = Vec::with_capacity(v_count);
    let mut values = Vec::with_capacity(v_count);
    for d in 0..d_count {
        costs.clear();
        values.clear();
        let mut acc = 0.0;
        for v in 0..v_count {
            acc += catalog.rate(d, v);
            costs.push(cells_up(catalog.lr_size(d, v), resolution));
            values.push(acc);
        }
        let row = &mut choice[d * (budget + 1)..(d + 1) * (budget + 1)];
        for c in 0..=budget {
            let mut top = best[c];
            let mut pick = 0u16;
            for v in 0..v_count {
                if costs[v] <= c {
                    let cand = best[c - costs[v]] + values[v];
                    if cand > top {
                        top = cand;
                        pick = (v + 1) as u16;
                    }
                }
            }
            next[c] = top;
            row[c] = pick;
        }
        std::mem::swap(&mut best, &mut next);
    }

    let mut prefix = vec![0usize; d_count];
    let mut c = budget;
    for d in (0..d_count).rev() {
        let pick = choice[d * (budget + 1) + c] as usize;
        prefix[d] = pick;
        if pick > 0 {
            c -= cells_up(catalog.lr_size(d, pick - 1), resolution);
        }
    }
    let value = prefix
        .iter()
        .enumerate()
        .map(|(d, &n)| catalog.rates(d)[..n].iter().sum::<f64>())
        .sum();
    let size = prefix
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(d, &n)| catalog.lr_size(d, n - 1))
        .sum();
    Ok(Placement {
        prefix,
        value,
        size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn everything_fits() {
        let cat = Catalog::from_rows(
            &[vec![1.0, 2.0], vec![0.5, 0.5]],
            None,
            &[vec![0.3, 0.2], vec![0.4, 0.1]],
        )
        .unwrap();
        let p = static_optimal(&cat, 10.0, 0.5, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!(p.prefix, vec![2, 2]);
        assert!((p.value - 1.0).abs() < 1e-12);
        assert!((p.hit_rate(&cat) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_object_example() {
        let cat = Catalog::from_rows(
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            None,
            &[vec![0.4, 0.1], vec![0.3, 0.2]],
        )
        .unwrap();
        let p = static_optimal(&cat, 2.0, 1.0, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!(p.prefix, vec![1, 1]);
        assert!((p.value - 0.7).abs() < 1e-12);
        assert!(p.includes(0, 0) && !p.includes(0, 1));
    }

    #[test]
    fn coarse_grid_stays_feasible() {
        let cat = Catalog::from_rows(&[vec![0.3], vec![0.3]], None, &[vec![1.0], vec![1.0]])
            .unwrap();
        let p = static_optimal(&cat, 0.6, 0.25, DEFAULT_TABLE_CAP).unwrap();
        assert!(p.size <= 0.6);
        assert_eq!(p.prefix.iter().sum::<usize>(), 1);
    }

    #[test]
    fn table_cap_enforced() {
        let cat = Catalog::from_rows(&[vec![1.0]], None, &[vec![1.0]]).unwrap();
        assert!(matches!(
            static_optimal(&cat, 1000.0, 1e-3, 1000),
            Err(Error::TableTooLarge { .. })
        ));
        assert!(static_optimal(&cat, 1.0, 0.0, 1000).is_err());
    }
}
