//! Variance of the working-set size.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, DerivedPopularity};
use crate::error::{Error, Result};

/// Upper bound `(D V / 4 + D V (V - 1)) δ_max²` on the variance of the
/// working-set size at any time.
pub fn variance_bound(num_objects: usize, num_versions: usize, delta_max: f64) -> f64 {
    let (d, v) = (num_objects as f64, num_versions as f64);
    (d * v / 4.0 + d * v * (v - 1.0)) * delta_max * delta_max
}

/// Realized working-set sizes at a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkingSetSample {
    /// Slot `t`; each replication observes requests in slots `1..t`.
    pub horizon: u64,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

impl WorkingSetSample {
    pub fn replications(&self) -> usize {
        self.values.len()
    }
}

/// Monte Carlo estimate of the working-set size `S(t)`: per replication,
/// draw `t - 1` IRM requests and sum the sizes of the distinct layers they
/// touch (a request for version `v` touches layers `0..=v`).
pub fn sample_working_set_variance<R: Rng + ?Sized>(
    pop: &DerivedPopularity,
    catalog: &Catalog,
    horizon: u64,
    replications: usize,
    rng: &mut R,
) -> Result<WorkingSetSample> {
    if replications < 2 {
        return Err(Error::Config(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let v = catalog.num_versions();
    let alias = WeightedAliasIndex::new(pop.version_probs().to_vec())
        .map_err(|e| Error::Config(format!("cannot sample from popularity: {e}")))?;
    // top[d]: number of layers of d touched so far in this replication.
    let mut top = vec![0usize; catalog.num_objects()];
    let mut touched = Vec::new();
    let mut values = Vec::with_capacity(replications);
    for _ in 0..replications {
        for &d in &touched {
            top[d] = 0;
        }
        touched.clear();
        for _ in 1..horizon {
            let cell = alias.sample(rng);
            let (d, ver) = (cell / v, cell % v);
            if top[d] == 0 {
                touched.push(d);
            }
            top[d] = top[d].max(ver + 1);
        }
        let s: f64 = touched
            .iter()
            .map(|&d| catalog.lr_size(d, top[d] - 1))
            .sum();
        values.push(s);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(WorkingSetSample {
        horizon,
        values,
        mean,
        variance,
    })
}
