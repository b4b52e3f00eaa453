//! Continuum limits of the working-set approximation as the number of
//! objects (and, for the two-dimensional model, versions) grows.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::quad::{adaptive_simpson, unit_square};
use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// Default absolute tolerance of the quadratures.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Increasing shape on `[0, 1]` with `F(0) = 0`, `F(1) = 1`, supplied with
/// its derivative.
#[derive(Clone)]
pub enum Shape {
    /// `F(x) = x`.
    Uniform,
    /// `F(x) = x^(1-s)` for `0 <= s < 1`: the continuum of Zipf(s).
    PowerLaw { exponent: f64 },
    /// `F(x) = ln(1 + c x) / ln(1 + c)` for `c > 0`.
    Logarithmic { scale: f64 },
    Custom { cdf: Fn1, density: Fn1 },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Uniform => f.write_str("Uniform"),
            Shape::PowerLaw { exponent } => write!(f, "PowerLaw({exponent})"),
            Shape::Logarithmic { scale } => write!(f, "Logarithmic({scale})"),
            Shape::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Shape::PowerLaw { exponent } if !(0.0..1.0).contains(&exponent) => Err(Error::Config(
                format!("power-law exponent must be in [0, 1), got {exponent}"),
            )),
            Shape::Logarithmic { scale } if !(scale > 0.0 && scale.is_finite()) => Err(
                Error::Config(format!("logarithmic scale must be positive, got {scale}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Shape::Uniform => x,
            Shape::PowerLaw { exponent } => x.powf(1.0 - exponent),
            Shape::Logarithmic { scale } => (scale * x).ln_1p() / scale.ln_1p(),
            Shape::Custom { cdf, .. } => cdf(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Shape::Uniform => 1.0,
            Shape::PowerLaw { exponent } => {
                if x <= 0.0 {
                    if *exponent > 0.0 {
                        f64::INFINITY
                    } else {
                        1.0
                    }
                } else {
                    (1.0 - exponent) * x.powf(-exponent)
                }
            }
            Shape::Logarithmic { scale } => scale / ((1.0 + scale * x) * scale.ln_1p()),
            Shape::Custom { density, .. } => density(x),
        }
    }
}

/// `1 - exp(-rate)` with `0 * inf` treated as zero rate.
fn fill(tau: f64, density: f64, mass: f64) -> f64 {
    if mass <= 0.0 || tau <= 0.0 {
        return 0.0;
    }
    let r = tau * density * mass;
    if r.is_nan() {
        return 0.0;
    }
    -(-r).exp_m1()
}

/// Finds `τ` with `mass(τ) = b` for a non-decreasing `mass`, `mass(0) = 0`.
fn solve_tau(mass: impl Fn(f64) -> f64, b: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut n = 0;
    while mass(hi) < b {
        lo = hi;
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) < b {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

type VersionProfile = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;
type LayerField = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// Object continuum with a finite number of versions.
///
/// Object `x ∈ [0,1]` has popularity density `F'(x)`, version split
/// `g(v; x)` (summing to 1 over zero-based `v`) and layer sizes `Δ(x, l)`.
#[derive(Clone)]
pub struct LayeredScalingModel {
    pub num_versions: usize,
    pub popularity: Shape,
    pub version_prob: VersionProfile,
    pub layer_size: LayerField,
}

impl fmt::Debug for LayeredScalingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LayeredScalingModel")
            .field("num_versions", &self.num_versions)
            .field("popularity", &self.popularity)
            .finish_non_exhaustive()
    }
}

impl LayeredScalingModel {
    /// Version split and layer sizes independent of `x`.
    pub fn homogeneous(popularity: Shape, version_prob: Vec<f64>, layer_size: Vec<f64>) -> Result<Self> {
        if version_prob.is_empty() || version_prob.len() != layer_size.len() {
            return Err(Error::Config(
                "version profile and layer sizes must be non-empty and of equal length".into(),
            ));
        }
        let sum: f64 = version_prob.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || version_prob.iter().any(|&g| g < 0.0) {
            return Err(Error::Config(format!(
                "version profile must be a probability vector, sums to {sum}"
            )));
        }
        if layer_size.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::Config("layer sizes must be non-negative".into()));
        }
        popularity.validate()?;
        let v = version_prob.len();
        Ok(Self {
            num_versions: v,
            popularity,
            version_prob: Arc::new(move |i, _| version_prob[i]),
            layer_size: Arc::new(move |_, l| layer_size[l]),
        })
    }

    /// Suffix mass `Σ_{v >= l} g(v; x)`.
    pub fn layer_mass(&self, x: f64, layer: usize) -> f64 {
        (layer..self.num_versions).map(|v| (self.version_prob)(v, x)).sum()
    }

    /// `∫ Σ_l Δ(x,l) 1{layer mass > 0} dx`: the largest attainable `b`.
    pub fn total_mass(&self, quad_tol: f64) -> f64 {
        adaptive_simpson(
            |x| {
                (0..self.num_versions)
                    .filter(|&l| self.layer_mass(x, l) > 0.0)
                    .map(|l| (self.layer_size)(x, l))
                    .sum()
            },
            0.0,
            1.0,
            quad_tol,
        )
    }

    fn mass(&self, tau: f64, quad_tol: f64) -> f64 {
        adaptive_simpson(
            |x| {
                let dens = self.popularity.density(x);
                (0..self.num_versions)
                    .map(|l| (self.layer_size)(x, l) * fill(tau, dens, self.layer_mass(x, l)))
                    .sum()
            },
            0.0,
            1.0,
            quad_tol,
        )
    }

    /// Finite catalog with `rate(d,v) = (F(d/D) - F((d-1)/D)) g(v; d/D)` and
    /// `δ(d,l) = Δ(d/D, l)`, one-based `d`.
    pub fn finite_catalog(&self, num_objects: usize) -> Result<Catalog> {
        let big_d = num_objects as f64;
        let mut layers = Vec::with_capacity(num_objects);
        let mut rates = Vec::with_capacity(num_objects);
        for d in 1..=num_objects {
            let x = d as f64 / big_d;
            let q = self.popularity.cdf(x) - self.popularity.cdf((d - 1) as f64 / big_d);
            rates.push(
                (0..self.num_versions)
                    .map(|v| q * (self.version_prob)(v, x))
                    .collect(),
            );
            layers.push((0..self.num_versions).map(|l| (self.layer_size)(x, l)).collect());
        }
        Catalog::from_rows(&layers, None, &rates)
    }
}

/// Limit solution of [`asymptotic_hit_theorem1`].
#[derive(Debug, Clone)]
pub struct LayeredLimit {
    pub model: LayeredScalingModel,
    pub b: f64,
    /// Scaled characteristic time: `t* ≈ D τ`.
    pub tau: f64,
}

impl LayeredLimit {
    /// `h(x, l) = 1 - exp(-τ F'(x) Σ_{v >= l} g(v; x))`, zero-based `l`.
    pub fn hit(&self, x: f64, layer: usize) -> f64 {
        if self.tau.is_infinite() {
            return if self.model.layer_mass(x, layer) > 0.0 { 1.0 } else { 0.0 };
        }
        fill(self.tau, self.model.popularity.density(x), self.model.layer_mass(x, layer))
    }
}

/// Solves `b = ∫ Σ_l Δ(x,l) (1 - exp(-τ F'(x) Σ_{v>=l} g(v;x))) dx` for `τ`.
pub fn asymptotic_hit_theorem1(model: &LayeredScalingModel, b: f64, quad_tol: f64) -> Result<LayeredLimit> {
    let total = model.total_mass(quad_tol);
    if !(b > 0.0 && b < total) {
        return Err(Error::Config(format!(
            "scaled budget b must lie in (0, {total}), got {b}"
        )));
    }
    let tau = solve_tau(|t| model.mass(t, quad_tol), b);
    Ok(LayeredLimit {
        model: model.clone(),
        b,
        tau,
    })
}

/// How the per-layer request intensity of the two-dimensional model is
/// formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerMass {
    /// `F'(x) (1 - G(y))`: the suffix mass of versions at or above `y`,
    /// matching the finite layer probabilities. Time scales as `D τ`.
    #[default]
    Suffix,
    /// `F'(x) G'(y)`: the version density at `y`. Time scales as `D V τ`.
    Density,
}

/// Object and version continuum: popularity shape `F`, version shape `G`,
/// layer-size field `Δ(x, y)`.
#[derive(Clone)]
pub struct ContinuumScalingModel {
    pub popularity: Shape,
    pub versions: Shape,
    pub layer_size: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub layer_mass: LayerMass,
}

impl fmt::Debug for ContinuumScalingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumScalingModel")
            .field("popularity", &self.popularity)
            .field("versions", &self.versions)
            .field("layer_mass", &self.layer_mass)
            .finish_non_exhaustive()
    }
}

impl ContinuumScalingModel {
    pub fn new(popularity: Shape, versions: Shape, layer_size: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, layer_mass: LayerMass) -> Result<Self> {
        popularity.validate()?;
        versions.validate()?;
        Ok(Self {
            popularity,
            versions,
            layer_size: Arc::new(layer_size),
            layer_mass,
        })
    }

    fn intensity(&self, x: f64, y: f64) -> f64 {
        let fx = self.popularity.density(x);
        match self.layer_mass {
            LayerMass::Suffix => fill_arg(fx, 1.0 - self.versions.cdf(y)),
            LayerMass::Density => fill_arg(fx, self.versions.density(y)),
        }
    }

    pub fn total_mass(&self, quad_tol: f64) -> f64 {
        unit_square(
            |x, y| if self.intensity(x, y) > 0.0 { (self.layer_size)(x, y) } else { 0.0 },
            quad_tol,
        )
    }

    fn mass(&self, tau: f64, quad_tol: f64) -> f64 {
        unit_square(
            |x, y| (self.layer_size)(x, y) * fill(tau, self.intensity(x, y), 1.0),
            quad_tol,
        )
    }

    /// Finite catalog with
    /// `rate(d,v) = (F(d/D) - F((d-1)/D)) (G(v/V) - G((v-1)/V))` and
    /// `δ(d,l) = Δ(d/D, l/V)`, one-based `d`, `v`, `l`.
    pub fn finite_catalog(&self, num_objects: usize, num_versions: usize) -> Result<Catalog> {
        let (bd, bv) = (num_objects as f64, num_versions as f64);
        let mut layers = Vec::with_capacity(num_objects);
        let mut rates = Vec::with_capacity(num_objects);
        for d in 1..=num_objects {
            let x = d as f64 / bd;
            let q = self.popularity.cdf(x) - self.popularity.cdf((d - 1) as f64 / bd);
            rates.push(
                (1..=num_versions)
                    .map(|v| q * (self.versions.cdf(v as f64 / bv) - self.versions.cdf((v - 1) as f64 / bv)))
                    .collect(),
            );
            layers.push(
                (1..=num_versions)
                    .map(|l| (self.layer_size)(x, l as f64 / bv))
                    .collect(),
            );
        }
        Catalog::from_rows(&layers, None, &rates)
    }
}

fn fill_arg(density: f64, mass: f64) -> f64 {
    if mass <= 0.0 {
        0.0
    } else {
        density * mass
    }
}

/// Limit solution of [`asymptotic_hit_theorem2`].
#[derive(Debug, Clone)]
pub struct ContinuumLimit {
    pub model: ContinuumScalingModel,
    pub b: f64,
    pub tau: f64,
}

impl ContinuumLimit {
    pub fn hit(&self, x: f64, y: f64) -> f64 {
        let r = self.model.intensity(x, y);
        if self.tau.is_infinite() {
            return if r > 0.0 { 1.0 } else { 0.0 };
        }
        fill(self.tau, r, 1.0)
    }

    /// Characteristic time of the finite system this limit approximates.
    pub fn characteristic_time(&self, num_objects: usize, num_versions: usize) -> f64 {
        match self.model.layer_mass {
            LayerMass::Suffix => num_objects as f64 * self.tau,
            LayerMass::Density => (num_objects * num_versions) as f64 * self.tau,
        }
    }
}

/// Solves `b = ∫∫ Δ(x,y) (1 - exp(-τ r(x,y))) dx dy` for `τ`, where
/// `r` is the per-layer intensity chosen by the model's [`LayerMass`].
pub fn asymptotic_hit_theorem2(model: &ContinuumScalingModel, b: f64, quad_tol: f64) -> Result<ContinuumLimit> {
    let total = model.total_mass(quad_tol);
    if !(b > 0.0 && b < total) {
        return Err(Error::Config(format!(
            "scaled budget b must lie in (0, {total}), got {b}"
        )));
    }
    let tau = solve_tau(|t| model.mass(t, quad_tol), b);
    Ok(ContinuumLimit {
        model: model.clone(),
        b,
        tau,
    })
}
