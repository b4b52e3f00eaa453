//! Object catalog: per-layer sizes, per-version multi-representation sizes
//! and per-version request rates, plus the popularity quantities derived
//! from them.
//!
//! Indices are zero-based throughout the library. Version `v` of an object
//! is served in layered form by layers `0..=v`; external formats (trace
//! files, CSV) shift to one-based numbering at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable description of `D` objects with `V` versions each.
///
/// Matrices are stored row-major with one row per object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogDoc", into = "CatalogDoc")]
pub struct Catalog {
    num_objects: usize,
    num_versions: usize,
    layer_size: Vec<f64>,
    lr_prefix: Vec<f64>,
    mr_size: Option<Vec<f64>>,
    rate: Vec<f64>,
}

/// Serialized form: nested rows, one per object.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CatalogDoc {
    num_objects: usize,
    num_versions: usize,
    layer_size: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mr_size: Option<Vec<Vec<f64>>>,
    rate: Vec<Vec<f64>>,
}

impl TryFrom<CatalogDoc> for Catalog {
    type Error = Error;

    fn try_from(doc: CatalogDoc) -> Result<Self> {
        let catalog = Catalog::from_rows(&doc.layer_size, doc.mr_size.as_deref(), &doc.rate)?;
        if catalog.num_objects != doc.num_objects || catalog.num_versions != doc.num_versions {
            return Err(Error::InvalidCatalog(format!(
                "declared shape {}x{} does not match matrices {}x{}",
                doc.num_objects, doc.num_versions, catalog.num_objects, catalog.num_versions
            )));
        }
        Ok(catalog)
    }
}

impl From<Catalog> for CatalogDoc {
    fn from(c: Catalog) -> Self {
        let v = c.num_versions;
        let rows = |m: &[f64]| m.chunks(v).map(<[f64]>::to_vec).collect::<Vec<_>>();
        CatalogDoc {
            num_objects: c.num_objects,
            num_versions: c.num_versions,
            layer_size: rows(&c.layer_size),
            mr_size: c.mr_size.as_deref().map(rows),
            rate: rows(&c.rate),
        }
    }
}

fn flatten(rows: &[Vec<f64>], what: &str, versions: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * versions);
    for (d, row) in rows.iter().enumerate() {
        if row.len() != versions {
            return Err(Error::InvalidCatalog(format!(
                "{what} row {d} has {} entries, expected {versions}",
                row.len()
            )));
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}

impl Catalog {
    /// Builds a catalog from flat row-major matrices and checks every invariant.
    pub fn new(
        num_objects: usize,
        num_versions: usize,
        layer_size: Vec<f64>,
        mr_size: Option<Vec<f64>>,
        rate: Vec<f64>,
    ) -> Result<Self> {
        if num_objects == 0 || num_versions == 0 {
            return Err(Error::InvalidCatalog(
                "catalog needs at least one object and one version".into(),
            ));
        }
        let cells = num_objects * num_versions;
        if layer_size.len() != cells || rate.len() != cells {
            return Err(Error::InvalidCatalog(format!(
                "expected {cells} layer sizes and rates, got {} and {}",
                layer_size.len(),
                rate.len()
            )));
        }
        if let Some((i, s)) = layer_size
            .iter()
            .enumerate()
            .find(|(_, s)| !s.is_finite() || **s < 0.0)
        {
            return Err(Error::InvalidCatalog(format!(
                "layer size {s} of object {} layer {} must be finite and non-negative",
                i / num_versions,
                i % num_versions
            )));
        }
        if let Some((i, r)) = rate
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || **r < 0.0)
        {
            return Err(Error::InvalidCatalog(format!(
                "rate {r} of object {} version {} must be finite and non-negative",
                i / num_versions,
                i % num_versions
            )));
        }
        for (d, row) in rate.chunks(num_versions).enumerate() {
            if !row.iter().any(|r| *r > 0.0) {
                return Err(Error::InvalidCatalog(format!(
                    "object {d} has no version with a positive request rate"
                )));
            }
        }
        if let Some(mr) = &mr_size {
            if mr.len() != cells {
                return Err(Error::InvalidCatalog(format!(
                    "expected {cells} MR sizes, got {}",
                    mr.len()
                )));
            }
            for (d, row) in mr.chunks(num_versions).enumerate() {
                if row.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                    return Err(Error::InvalidCatalog(format!(
                        "object {d}: MR sizes must be finite and positive"
                    )));
                }
                if row.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidCatalog(format!(
                        "object {d}: MR sizes must be strictly increasing in the version"
                    )));
                }
            }
        }
        let mut lr_prefix = Vec::with_capacity(cells);
        for row in layer_size.chunks(num_versions) {
            let mut acc = 0.0;
            for s in row {
                acc += s;
                lr_prefix.push(acc);
            }
        }
        Ok(Self {
            num_objects,
            num_versions,
            layer_size,
            lr_prefix,
            mr_size,
            rate,
        })
    }

    /// Builds a catalog from per-object rows.
    pub fn from_rows(
        layer_rows: &[Vec<f64>],
        mr_rows: Option<&[Vec<f64>]>,
        rate_rows: &[Vec<f64>],
    ) -> Result<Self> {
        let versions = layer_rows.first().map_or(0, Vec::len);
        if layer_rows.len() != rate_rows.len() {
            return Err(Error::InvalidCatalog(format!(
                "{} layer-size rows but {} rate rows",
                layer_rows.len(),
                rate_rows.len()
            )));
        }
        let mr = match mr_rows {
            Some(rows) => {
                if rows.len() != layer_rows.len() {
                    return Err(Error::InvalidCatalog(format!(
                        "{} MR rows for {} objects",
                        rows.len(),
                        layer_rows.len()
                    )));
                }
                Some(flatten(rows, "mr_size", versions)?)
            }
            None => None,
        };
        Self::new(
            layer_rows.len(),
            versions,
            flatten(layer_rows, "layer_size", versions)?,
            mr,
            flatten(rate_rows, "rate", versions)?,
        )
    }

    /// Builds an MR+LR catalog where layered sizes carry a fixed overhead
    /// over the multi-representation sizes.
    pub fn with_overhead(
        mr_rows: &[Vec<f64>],
        overhead: OverheadModel,
        rate_rows: &[Vec<f64>],
    ) -> Result<Self> {
        let layers = mr_rows
            .iter()
            .map(|row| overhead.layer_sizes(row))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&layers, Some(mr_rows), rate_rows)
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn num_versions(&self) -> usize {
        self.num_versions
    }

    /// Number of (object, layer) units.
    pub fn num_units(&self) -> usize {
        self.num_objects * self.num_versions
    }

    #[inline]
    pub fn layer_size(&self, object: usize, layer: usize) -> f64 {
        self.layer_size[object * self.num_versions + layer]
    }

    pub fn layer_sizes(&self, object: usize) -> &[f64] {
        let v = self.num_versions;
        &self.layer_size[object * v..(object + 1) * v]
    }

    pub fn layer_size_matrix(&self) -> &[f64] {
        &self.layer_size
    }

    #[inline]
    pub fn rate(&self, object: usize, version: usize) -> f64 {
        self.rate[object * self.num_versions + version]
    }

    pub fn rates(&self, object: usize) -> &[f64] {
        let v = self.num_versions;
        &self.rate[object * v..(object + 1) * v]
    }

    pub fn rate_matrix(&self) -> &[f64] {
        &self.rate
    }

    pub fn has_mr_sizes(&self) -> bool {
        self.mr_size.is_some()
    }

    #[inline]
    pub fn mr_size(&self, object: usize, version: usize) -> Option<f64> {
        self.mr_size
            .as_ref()
            .map(|m| m[object * self.num_versions + version])
    }

    pub fn mr_size_matrix(&self) -> Option<&[f64]> {
        self.mr_size.as_deref()
    }

    /// Space taken by version `version` in layered form: the sum of layers
    /// `0..=version`.
    pub fn lr_version_size(&self, object: usize, version: usize) -> Result<f64> {
        if object >= self.num_objects {
            return Err(Error::IndexOutOfRange {
                what: "object",
                index: object,
                bound: self.num_objects,
            });
        }
        if version >= self.num_versions {
            return Err(Error::IndexOutOfRange {
                what: "version",
                index: version,
                bound: self.num_versions,
            });
        }
        Ok(self.lr_size(object, version))
    }

    /// Unchecked variant of [`Catalog::lr_version_size`].
    #[inline]
    pub fn lr_size(&self, object: usize, version: usize) -> f64 {
        self.lr_prefix[object * self.num_versions + version]
    }

    /// Size of every layer of every object.
    pub fn total_lr_size(&self) -> f64 {
        self.layer_size.iter().sum()
    }

    /// Size of every MR version of every object, if MR sizes are present.
    pub fn total_mr_size(&self) -> Option<f64> {
        self.mr_size.as_ref().map(|m| m.iter().sum())
    }

    /// Largest single layer.
    pub fn max_layer_size(&self) -> f64 {
        self.layer_size.iter().copied().fold(0.0, f64::max)
    }

    /// Same catalog with every rate multiplied by `factor`.
    pub fn scaled_rates(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.num_objects,
            self.num_versions,
            self.layer_size.clone(),
            self.mr_size.clone(),
            self.rate.iter().map(|r| r * factor).collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Request probabilities and layer rates derived from the rate matrix.
    pub fn popularity(&self) -> Result<DerivedPopularity> {
        derive_popularity(self)
    }
}

/// Probabilities derived from a catalog's rate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedPopularity {
    num_objects: usize,
    num_versions: usize,
    total_rate: f64,
    object_prob: Vec<f64>,
    version_prob: Vec<f64>,
    layer_rate: Vec<f64>,
    layer_prob: Vec<f64>,
}

impl DerivedPopularity {
    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn num_versions(&self) -> usize {
        self.num_versions
    }

    /// Total request rate over all objects and versions.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn object_prob(&self, object: usize) -> f64 {
        self.object_prob[object]
    }

    pub fn object_probs(&self) -> &[f64] {
        &self.object_prob
    }

    pub fn version_prob(&self, object: usize, version: usize) -> f64 {
        self.version_prob[object * self.num_versions + version]
    }

    pub fn version_probs(&self) -> &[f64] {
        &self.version_prob
    }

    /// Rate of requests touching `layer` of `object`: requests for any
    /// version at or above the layer.
    pub fn layer_rate(&self, object: usize, layer: usize) -> f64 {
        self.layer_rate[object * self.num_versions + layer]
    }

    pub fn layer_rates(&self) -> &[f64] {
        &self.layer_rate
    }

    pub fn layer_prob(&self, object: usize, layer: usize) -> f64 {
        self.layer_prob[object * self.num_versions + layer]
    }

    pub fn layer_probs(&self) -> &[f64] {
        &self.layer_prob
    }
}

/// Computes `q(d)`, `q(d,v)`, the layer rates (row suffix sums of the rate
/// matrix) and the layer request probabilities.
pub fn derive_popularity(catalog: &Catalog) -> Result<DerivedPopularity> {
    let v = catalog.num_versions;
    let total_rate: f64 = catalog.rate.iter().sum();
    if !(total_rate > 0.0) {
        return Err(Error::Config("total request rate must be positive".into()));
    }
    let version_prob: Vec<f64> = catalog.rate.iter().map(|r| r / total_rate).collect();
    let object_prob = catalog
        .rate
        .chunks(v)
        .map(|row| row.iter().sum::<f64>() / total_rate)
        .collect();
    let mut layer_rate = vec![0.0; catalog.rate.len()];
    for (src, dst) in catalog.rate.chunks(v).zip(layer_rate.chunks_mut(v)) {
        let mut acc = 0.0;
        for l in (0..v).rev() {
            acc += src[l];
            dst[l] = acc;
        }
    }
    // Summation order differs from the total's; clamp the rounding.
    let layer_prob = layer_rate.iter().map(|g| (g / total_rate).min(1.0)).collect();
    Ok(DerivedPopularity {
        num_objects: catalog.num_objects,
        num_versions: v,
        total_rate,
        object_prob,
        version_prob,
        layer_rate,
        layer_prob,
    })
}

/// Percent overhead of layered storage over multi-representation storage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub overhead_percent: f64,
}

impl OverheadModel {
    pub fn new(overhead_percent: f64) -> Result<Self> {
        if !overhead_percent.is_finite() || overhead_percent < 0.0 {
            return Err(Error::Config(format!(
                "overhead must be a non-negative percentage, got {overhead_percent}"
            )));
        }
        Ok(Self { overhead_percent })
    }

    pub fn factor(&self) -> f64 {
        1.0 + self.overhead_percent / 100.0
    }

    /// Layered size of a version whose MR size is `mr_size`.
    pub fn lr_from_mr(&self, mr_size: f64) -> f64 {
        self.factor() * mr_size
    }

    /// Layer sizes whose prefix sums equal the inflated MR sizes.
    pub fn layer_sizes(&self, mr_sizes: &[f64]) -> Result<Vec<f64>> {
        apply_overhead(mr_sizes, self.overhead_percent)
    }
}

/// Converts strictly increasing MR sizes into layer sizes carrying an
/// `overhead_percent` penalty, so that `s_LR(v) = (1 + o/100) * s_MR(v)`.
pub fn apply_overhead(mr_sizes: &[f64], overhead_percent: f64) -> Result<Vec<f64>> {
    let model = OverheadModel::new(overhead_percent)?;
    if mr_sizes.is_empty() {
        return Err(Error::InvalidCatalog("no MR sizes given".into()));
    }
    if mr_sizes.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::InvalidCatalog("MR sizes must be positive".into()));
    }
    if mr_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCatalog(
            "MR sizes must be strictly increasing".into(),
        ));
    }
    let f = model.factor();
    let mut prev = 0.0;
    Ok(mr_sizes
        .iter()
        .map(|s| {
            let layer = f * (s - prev);
            prev = *s;
            layer
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_object_suffix_sums() {
        let c = Catalog::from_rows(&[vec![1.0, 1.0]], None, &[vec![0.7, 0.3]]).unwrap();
        let p = c.popularity().unwrap();
        assert!(close(p.object_prob(0), 1.0));
        assert!(close(p.layer_prob(0, 0), 1.0));
        assert!(close(p.layer_prob(0, 1), 0.3));
    }

    #[test]
    fn one_version_layer_prob_is_object_prob() {
        let c = Catalog::from_rows(
            &[vec![1.0], vec![2.0], vec![3.0]],
            None,
            &[vec![0.5], vec![0.25], vec![0.25]],
        )
        .unwrap();
        let p = c.popularity().unwrap();
        for d in 0..3 {
            assert!(close(p.layer_prob(d, 0), p.object_prob(d)));
        }
    }

    #[test]
    fn lr_version_size_is_prefix_sum() {
        let c = Catalog::from_rows(
            &[vec![1.0; 4], vec![0.5, 0.5, 0.0, 0.0], vec![60.0; 4]],
            None,
            &[vec![1.0; 4], vec![1.0; 4], vec![1.0; 4]],
        )
        .unwrap();
        assert_eq!(c.lr_version_size(0, 3).unwrap(), 4.0);
        assert_eq!(c.lr_version_size(1, 1).unwrap(), 1.0);
        assert_eq!(c.lr_version_size(2, 1).unwrap(), 120.0);
        assert!(matches!(
            c.lr_version_size(0, 4),
            Err(Error::IndexOutOfRange { what: "version", .. })
        ));
        assert!(matches!(
            c.lr_version_size(3, 0),
            Err(Error::IndexOutOfRange { what: "object", .. })
        ));
    }

    #[test]
    fn overhead_layers() {
        let z = apply_overhead(&[0.5, 1.0], 0.0).unwrap();
        assert_eq!(z, vec![0.5, 0.5]);
        let q = apply_overhead(&[0.5, 1.0], 25.0).unwrap();
        assert!(close(q[0], 0.625) && close(q[1], 0.625));
        assert!(close(q.iter().sum::<f64>(), 1.25));
        let f = apply_overhead(&[0.5, 1.0], 5.0).unwrap();
        assert!(close(f.iter().sum::<f64>(), 1.05));
        assert!(apply_overhead(&[1.0, 1.0], 5.0).is_err());
        assert!(apply_overhead(&[1.0, 0.5], 5.0).is_err());
        assert!(apply_overhead(&[0.5, 1.0], -1.0).is_err());
    }

    #[test]
    fn rejects_bad_catalogs() {
        assert!(Catalog::from_rows(&[vec![1.0]], None, &[vec![0.0]]).is_err());
        assert!(Catalog::from_rows(&[vec![-1.0]], None, &[vec![1.0]]).is_err());
        assert!(Catalog::from_rows(&[vec![1.0, 1.0]], None, &[vec![1.0]]).is_err());
        assert!(
            Catalog::from_rows(&[vec![1.0, 1.0]], Some(&[vec![2.0, 1.0]]), &[vec![1.0, 1.0]])
                .is_err()
        );
        assert!(Catalog::new(0, 1, vec![], None, vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = Catalog::with_overhead(
            &[vec![0.5, 1.0], vec![0.25, 2.0]],
            OverheadModel::new(25.0).unwrap(),
            &[vec![0.3, 0.2], vec![0.1, 0.4]],
        )
        .unwrap();
        let text = c.to_json().unwrap();
        assert!(text.contains("\"layer_size\""));
        let back = Catalog::from_json(&text).unwrap();
        assert_eq!(c, back);

        let bad = text.replace("\"num_objects\": 2", "\"num_objects\": 3");
        assert!(Catalog::from_json(&bad).is_err());
    }

    #[test]
    fn suffix_sum_identity() {
        let c = Catalog::from_rows(
            &[vec![1.0, 2.0, 3.0]],
            None,
            &[vec![0.2, 0.5, 0.3]],
        )
        .unwrap();
        let p = c.popularity().unwrap();
        for l in 0..2 {
            assert!(close(p.layer_rate(0, l) - p.layer_rate(0, l + 1), c.rate(0, l)));
        }
    }
}
