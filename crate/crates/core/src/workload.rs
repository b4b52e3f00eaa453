//! Request-distribution builders and IRM trace sampling.
//!
//! All randomness flows from explicit 64-bit seeds through [`seeded_rng`];
//! child streams are derived with [`derive_seed`].

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp};

use crate::catalog::DerivedPopularity;
use crate::error::{Error, Result};

/// Generator used by every stochastic routine in the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of child stream `stream` under `root`: `splitmix64(root ^ splitmix64(stream))`.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    splitmix64(root ^ splitmix64(stream))
}

/// Zipf object popularity `q(d) ∝ (d+1)^-exponent`, normalized.
pub fn zipf_object_popularity(num_objects: usize, exponent: f64) -> Result<Vec<f64>> {
    if num_objects == 0 {
        return Err(Error::Config("zipf needs at least one object".into()));
    }
    if !exponent.is_finite() || exponent < 0.0 {
        return Err(Error::Config(format!(
            "zipf exponent must be non-negative, got {exponent}"
        )));
    }
    let weights: Vec<f64> = (1..=num_objects)
        .map(|d| (d as f64).powf(-exponent))
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Splits `object_prob` into `cuts.len() + 1` pieces using sorted cut
/// points in `(0, 1)` and returns them in descending order.
pub fn split_from_cuts(object_prob: f64, cuts: &[f64]) -> Vec<f64> {
    let mut sorted = cuts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    let mut parts: Vec<f64> = sorted
        .iter()
        .chain(std::iter::once(&1.0))
        .map(|c| {
            let part = (c - prev) * object_prob;
            prev = *c;
            part
        })
        .collect();
    parts.sort_by(|a, b| b.total_cmp(a));
    parts
}

/// Random decreasing version split: a uniform point of the simplex,
/// sorted in descending order and scaled to `object_prob`.
pub fn split_versions_uniform_decreasing<R: Rng + ?Sized>(
    object_prob: f64,
    versions: usize,
    rng: &mut R,
) -> Vec<f64> {
    if versions <= 1 {
        return vec![object_prob; versions.min(1)];
    }
    loop {
        let cuts: Vec<f64> = (0..versions - 1)
            .map(|_| rng.random::<f64>())
            .collect();
        let parts = split_from_cuts(object_prob, &cuts);
        // Ties and empty pieces have probability zero but would break the
        // strict ordering; redraw if they occur.
        if parts.iter().all(|p| *p > 0.0) && parts.windows(2).all(|w| w[0] > w[1]) {
            return parts;
        }
    }
}

fn check_fraction(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Config(format!("{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

/// Two-version split `(alpha * q, (1 - alpha) * q)`.
pub fn split_versions_two(object_prob: f64, alpha: f64) -> Result<[f64; 2]> {
    check_fraction("alpha", alpha)?;
    Ok([alpha * object_prob, (1.0 - alpha) * object_prob])
}

/// Three-version split `(zeta * q, eta * q, (1 - zeta - eta) * q)`.
pub fn split_versions_three(object_prob: f64, zeta: f64, eta: f64) -> Result<[f64; 3]> {
    check_fraction("zeta", zeta)?;
    check_fraction("eta", eta)?;
    if zeta + eta > 1.0 + 1e-12 {
        return Err(Error::Config(format!(
            "zeta + eta must not exceed 1, got {}",
            zeta + eta
        )));
    }
    let rest = (1.0 - zeta - eta).max(0.0);
    Ok([zeta * object_prob, eta * object_prob, rest * object_prob])
}

/// Version weights `(V - v)^m / Σ_i i^m` for zero-based `v`.
pub fn parametric_version_popularity(versions: usize, m: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..versions).map(|v| ((versions - v) as f64).powf(m)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Layer sizes `(l + 1)^n / Σ_i i^n` for zero-based `l`; they sum to one.
pub fn parametric_layer_sizes(versions: usize, n: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=versions).map(|l| (l as f64).powf(n)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Integer composition of `total` given sorted, distinct cut points in
/// `1..total`.
pub fn composition_from_cuts(total: u64, cuts: &[u64]) -> Vec<u64> {
    let mut prev = 0;
    cuts.iter()
        .chain(std::iter::once(&total))
        .map(|c| {
            let part = c - prev;
            prev = *c;
            part
        })
        .collect()
}

/// Uniform random composition of `total` into `versions` integer parts,
/// each at least one.
pub fn random_layer_sizes<R: Rng + ?Sized>(
    versions: usize,
    total: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if versions == 0 || total < versions as u64 {
        return Err(Error::Config(format!(
            "cannot split {total} into {versions} parts of at least one unit"
        )));
    }
    let mut cuts: Vec<u64> = index::sample(rng, (total - 1) as usize, versions - 1)
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect();
    cuts.sort_unstable();
    Ok(composition_from_cuts(total, &cuts))
}

/// One request for version `version` of object `object` (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    pub object: u32,
    pub version: u32,
}

impl Request {
    pub fn new(object: usize, version: usize) -> Self {
        Self {
            object: object as u32,
            version: version as u32,
        }
    }

    #[inline]
    pub fn object(&self) -> usize {
        self.object as usize
    }

    #[inline]
    pub fn version(&self) -> usize {
        self.version as usize
    }
}

/// A finite request sequence, optionally with Poisson arrival times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub entries: Vec<Request>,
    pub timestamps: Option<Vec<f64>>,
}

impl Trace {
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        Self {
            entries: pairs.iter().map(|&(d, v)| Request::new(d, v)).collect(),
            timestamps: None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks every entry against catalog dimensions.
    pub fn validate(&self, num_objects: usize, num_versions: usize) -> Result<()> {
        for (i, r) in self.entries.iter().enumerate() {
            if r.object() >= num_objects || r.version() >= num_versions {
                return Err(Error::TraceFormat {
                    line: i + 1,
                    reason: format!(
                        "request ({}, {}) outside a {num_objects}x{num_versions} catalog",
                        r.object() + 1,
                        r.version() + 1
                    ),
                });
            }
        }
        Ok(())
    }

    /// Writes one `d,v` line per request with one-based indices.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.entries {
            writeln!(out, "{},{}", r.object + 1, r.version + 1)?;
        }
        Ok(())
    }

    /// Parses the format produced by [`Trace::write_to`]. Blank lines are skipped.
    pub fn read_from<B: BufRead>(input: B) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| Error::TraceFormat {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (d, v) = line.split_once(',').ok_or_else(|| err("expected `d,v`"))?;
            let d: usize = d.trim().parse().map_err(|_| err("bad object index"))?;
            let v: usize = v.trim().parse().map_err(|_| err("bad version index"))?;
            if d == 0 || v == 0 {
                return Err(err("indices are one-based"));
            }
            entries.push(Request::new(d - 1, v - 1));
        }
        Ok(Self {
            entries,
            timestamps: None,
        })
    }
}

/// Draws `len` i.i.d. requests with probability `q(d,v)`. With
/// `timestamps`, arrival times follow a Poisson process of the total rate;
/// the request sequence itself is the same either way.
pub fn sample_trace<R: Rng + ?Sized>(
    popularity: &DerivedPopularity,
    len: usize,
    timestamps: bool,
    rng: &mut R,
) -> Result<Trace> {
    let v = popularity.num_versions();
    let alias = WeightedAliasIndex::new(popularity.version_probs().to_vec())
        .map_err(|e| Error::Config(format!("cannot sample from popularity: {e}")))?;
    let mut entries = Vec::with_capacity(len);
    let mut times = timestamps.then(|| Vec::with_capacity(len));
    let gap = Exp::new(popularity.total_rate())
        .map_err(|e| Error::Config(format!("bad total rate: {e}")))?;
    let mut clock = 0.0;
    for _ in 0..len {
        let cell = alias.sample(rng);
        entries.push(Request::new(cell / v, cell % v));
        if let Some(ts) = times.as_mut() {
            clock += gap.sample(rng);
            ts.push(clock);
        }
    }
    Ok(Trace {
        entries,
        timestamps: times,
    })
}
