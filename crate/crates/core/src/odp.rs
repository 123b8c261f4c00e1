//! Observed data points (renewable forecast errors): CSV I/O and a seeded
//! synthetic generator.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OdpSource {
    File { path: String },
    Synthetic { seed: u64 },
    Derived,
}

/// `K₀` forecast-error points of equal dimension, in MW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdpSet {
    dimension: usize,
    points: Vec<Vec<f64>>,
    pub source: OdpSource,
}

impl OdpSet {
    pub fn new(dimension: usize, points: Vec<Vec<f64>>, source: OdpSource) -> Result<Self> {
        for (k, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::DimensionMismatch(format!(
                    "point {k} has {} coordinates, expected {dimension}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("point {k} has a non-finite coordinate")));
            }
        }
        Ok(Self { dimension, points, source })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k]
    }

    /// Subset by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            dimension: self.dimension,
            points: idx.iter().map(|&k| self.points[k].clone()).collect(),
            source: OdpSource::Derived,
        }
    }

    /// Reads the `odp_id,dw_1,…,dw_J` format.
    pub fn read_csv<R: Read>(reader: R, source: OdpSource) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
        if headers.get(0) != Some("odp_id") {
            return Err(Error::Data("first column must be odp_id".into()));
        }
        let dim = headers.len() - 1;
        for (j, h) in headers.iter().skip(1).enumerate() {
            if h != format!("dw_{}", j + 1) {
                return Err(Error::Data(format!("column {} must be dw_{}, found {h}", j + 2, j + 1)));
            }
        }
        let mut points = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
            let p = rec
                .iter()
                .skip(1)
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Data(format!("record {}: {e}", line + 1)))?;
            points.push(p);
        }
        Self::new(dim, points, source)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["odp_id".to_string()];
        header.extend((1..=self.dimension).map(|j| format!("dw_{j}")));
        w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
        for (k, p) in self.points.iter().enumerate() {
            let mut rec = vec![(k + 1).to_string()];
            rec.extend(p.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Data(e.to_string()))?;
        Ok(())
    }
}

/// Truncated correlated Gaussian forecast-error generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdpGeneratorConfig {
    pub dimension: usize,
    /// Per-dimension standard deviation (MW).
    pub std: Vec<f64>,
    /// Row-major `dimension × dimension` correlation matrix.
    pub correlation: Vec<f64>,
    /// Samples with any `|Δw_j|` above this are redrawn.
    pub truncation: Option<f64>,
    pub count: usize,
    pub seed: u64,
}

impl OdpGeneratorConfig {
    /// Independent dimensions with a common standard deviation.
    pub fn independent(dimension: usize, std: f64, count: usize, seed: u64) -> Self {
        let mut correlation = vec![0.0; dimension * dimension];
        for i in 0..dimension {
            correlation[i * dimension + i] = 1.0;
        }
        Self {
            dimension,
            std: vec![std; dimension],
            correlation,
            truncation: None,
            count,
            seed,
        }
    }
}

/// Lower-triangular factor of a symmetric PSD matrix; zero pivots allowed.
fn psd_cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < -1e-9 {
            return Err(Error::InvalidConfig("correlation matrix is not positive semi-definite".into()));
        }
        let piv = d.max(0.0).sqrt();
        l[j * n + j] = piv;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if piv > 1e-12 {
                l[i * n + j] = s / piv;
            } else if s.abs() > 1e-9 {
                return Err(Error::InvalidConfig("correlation matrix is not positive semi-definite".into()));
            }
        }
    }
    Ok(l)
}

pub fn gen_odps(cfg: &OdpGeneratorConfig) -> Result<OdpSet> {
    let n = cfg.dimension;
    if cfg.std.len() != n || cfg.correlation.len() != n * n {
        return Err(Error::InvalidConfig("std/correlation sizes do not match the dimension".into()));
    }
    if cfg.count == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    if cfg.std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::InvalidConfig("standard deviations must be finite and ≥ 0".into()));
    }
    for i in 0..n {
        if (cfg.correlation[i * n + i] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig("correlation diagonal must be 1".into()));
        }
        for j in 0..i {
            if (cfg.correlation[i * n + j] - cfg.correlation[j * n + i]).abs() > 1e-12 {
                return Err(Error::InvalidConfig("correlation matrix must be symmetric".into()));
            }
        }
    }
    if let Some(t) = cfg.truncation {
        if !(t > 0.0) {
            return Err(Error::InvalidConfig("truncation half-width must be > 0".into()));
        }
    }
    let l = psd_cholesky(&cfg.correlation, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::with_capacity(cfg.count);
    let mut z = vec![0.0; n];
    while points.len() < cfg.count {
        let mut attempts = 0;
        let p = loop {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::InvalidConfig("truncation rejects almost every sample".into()));
            }
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let p: Vec<f64> = (0..n)
                .map(|i| cfg.std[i] * (0..=i).map(|k| l[i * n + k] * z[k]).sum::<f64>())
                .collect();
            if cfg.truncation.is_none_or(|t| p.iter().all(|v| v.abs() <= t)) {
                break p;
            }
        };
        points.push(p);
    }
    OdpSet::new(n, points, OdpSource::Synthetic { seed: cfg.seed })
}
