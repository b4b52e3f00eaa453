use super::hlru::check_hybrid_feasibility;
use super::{size_slack, Residency};
use crate::catalog::Catalog;
use crate::error::Result;

/// Fixed hybrid contents chosen by the static greedy HLFU pass.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPlacement {
    pub contents: Vec<Residency>,
    /// Rate of requests served by the contents.
    pub value: f64,
    pub size: f64,
}

impl HybridPlacement {
    pub fn hit_rate(&self, catalog: &Catalog) -> f64 {
        self.value / catalog.rate_matrix().iter().sum::<f64>()
    }
}

/// Static greedy hybrid LFU placement.
///
/// Versions are visited once in descending rate order (ties: smaller
/// object, then smaller version). A version of an uncached object enters as
/// an MR blob if it fits; a version of an already cached object converts the
/// object to layers up to the larger version if that fits after releasing
/// the object's current space. Items that do not fit, and versions with no
/// demand, are skipped.
pub fn hlfu_static_placement(catalog: &Catalog, capacity: f64) -> Result<HybridPlacement> {
    check_hybrid_feasibility(catalog, "hlfu-static")?;
    let v_count = catalog.num_versions();
    let mut ranked: Vec<(usize, usize)> = (0..catalog.num_objects())
        .flat_map(|d| (0..v_count).map(move |v| (d, v)))
        .collect();
    ranked.sort_by(|a, b| {
        catalog
            .rate(b.0, b.1)
            .total_cmp(&catalog.rate(a.0, a.1))
            .then(a.cmp(b))
    });

    let slack = size_slack(capacity);
    let mut contents = vec![Residency::Absent; catalog.num_objects()];
    let mut used = 0.0;
    for (d, v) in ranked {
        let current = contents[d];
        if catalog.rate(d, v) <= 0.0 || current.serves(v) {
            continue;
        }
        let held = current.size(catalog, d);
        let proposal = match current {
            Residency::Absent => Residency::Mr(v),
            Residency::Mr(u) => Residency::Lr(u.max(v) + 1),
            Residency::Lr(n) => Residency::Lr(n.max(v + 1)),
        };
        let new_size = proposal.size(catalog, d);
        if used - held + new_size <= capacity + slack {
            used += new_size - held;
            contents[d] = proposal;
        }
    }
    let value = contents
        .iter()
        .enumerate()
        .map(|(d, r)| {
            (0..v_count)
                .filter(|&v| r.serves(v))
                .map(|v| catalog.rate(d, v))
                .sum::<f64>()
        })
        .sum();
    Ok(HybridPlacement {
        contents,
        value,
        size: used,
    })
}
