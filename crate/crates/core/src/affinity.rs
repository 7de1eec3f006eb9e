//! Datasets and affinity matrices.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};
use crate::par;
use crate::symmat::{eig, SymMatrix};

/// `n` samples with `dim` real features, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    points: Vec<f64>,
    dim: usize,
    labels: Option<Vec<usize>>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        points: Vec<f64>,
        dim: usize,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(SscError::InvalidArgument(format!(
                "{} values cannot form rows of {dim} features",
                points.len()
            )));
        }
        let n = points.len() / dim;
        if n < 2 {
            return Err(SscError::InvalidArgument(format!(
                "a dataset needs at least 2 samples, got {n}"
            )));
        }
        if let Some(p) = points.iter().position(|v| !v.is_finite()) {
            return Err(SscError::NonFinite {
                row: p / dim,
                col: p % dim,
            });
        }
        let mut class_names = Vec::new();
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(SscError::DimensionMismatch {
                    expected: n,
                    found: l.len(),
                });
            }
            let k = l.iter().max().map_or(0, |m| m + 1);
            class_names = (0..k).map(|c| c.to_string()).collect();
        }
        Ok(Dataset {
            name: name.into(),
            points,
            dim,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Class names indexed by label id.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|_| self.class_names.len())
    }

    /// Reorders samples: row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Dataset {
        let mut points = Vec::with_capacity(self.points.len());
        for &p in perm {
            points.extend_from_slice(self.point(p));
        }
        Dataset {
            name: self.name.clone(),
            points,
            dim: self.dim,
            labels: self
                .labels
                .as_ref()
                .map(|l| perm.iter().map(|&p| l[p]).collect()),
            class_names: self.class_names.clone(),
        }
    }

    fn with_points(&self, points: Vec<f64>, dim: usize) -> Dataset {
        Dataset {
            name: self.name.clone(),
            points,
            dim,
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Column means.
    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.dim];
        for i in 0..self.len() {
            for (m, v) in mu.iter_mut().zip(self.point(i)) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        mu.iter_mut().for_each(|m| *m /= n);
        mu
    }

    /// Z-scores every feature. Constant features are centered only.
    pub fn standardized(&self) -> Dataset {
        let mu = self.mean();
        let n = self.len();
        let mut sd = vec![0.0; self.dim];
        for i in 0..n {
            for ((s, v), m) in sd.iter_mut().zip(self.point(i)).zip(&mu) {
                *s += (v - m) * (v - m);
            }
        }
        sd.iter_mut()
            .for_each(|s| *s = (*s / (n as f64 - 1.0).max(1.0)).sqrt());
        let mut points = self.points.clone();
        for row in points.chunks_mut(self.dim) {
            for ((v, m), s) in row.iter_mut().zip(&mu).zip(&sd) {
                *v -= m;
                if *s > 0.0 {
                    *v /= s;
                }
            }
        }
        self.with_points(points, self.dim)
    }
}

/// Which CSV column carries the ground-truth class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

/// Reads a comma-separated file of samples. The first row is treated as a
/// header when none of its feature cells parse as numbers. Labels are mapped
/// to ids in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label: Option<&LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SscError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path, label)
}

/// As [`load_csv`] for in-memory text; `name` stands in for the path in
/// diagnostics and names the dataset.
pub fn parse_csv(text: &str, name: &str, label: Option<&LabelColumn>) -> Result<Dataset> {
    read_csv(text.as_bytes(), Path::new(name), label)
}

fn read_csv(
    source: impl std::io::Read,
    path: &Path,
    label: Option<&LabelColumn>,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);

    let csv_err = |row: usize, col: Option<usize>, msg: String| SscError::Csv {
        path: path.to_path_buf(),
        row,
        col,
        msg,
    };

    let mut records = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(r + 1, None, e.to_string()))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push((r + 1, rec));
    }
    if records.is_empty() {
        return Err(csv_err(0, None, "file contains no rows".into()));
    }

    let width = records[0].1.len();
    let first = &records[0].1;
    let label_idx_hint = match label {
        Some(LabelColumn::Index(i)) => Some(*i),
        _ => None,
    };
    let header = matches!(label, Some(LabelColumn::Name(_)))
        || first
            .iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != label_idx_hint)
            .all(|(_, cell)| cell.parse::<f64>().is_err());

    let label_idx = match label {
        None => None,
        Some(LabelColumn::Index(i)) => {
            if *i >= width {
                return Err(csv_err(
                    records[0].0,
                    Some(*i + 1),
                    format!("label column {i} out of range for {width} columns"),
                ));
            }
            Some(*i)
        }
        Some(LabelColumn::Name(name)) => Some(
            first
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| csv_err(records[0].0, None, format!("no column named '{name}'")))?,
        ),
    };

    let body = if header { &records[1..] } else { &records[..] };
    let dim = width - usize::from(label_idx.is_some());
    let mut points = Vec::with_capacity(body.len() * dim);
    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(body.len());
    for (row, rec) in body {
        if rec.len() != width {
            return Err(csv_err(
                *row,
                None,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                let next = names.len();
                let id = *ids.entry(cell.to_string()).or_insert_with(|| {
                    names.push(cell.to_string());
                    next
                });
                labels.push(id);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| csv_err(*row, Some(c + 1), format!("'{cell}' is not a number")))?;
                if !v.is_finite() {
                    return Err(csv_err(*row, Some(c + 1), "value is not finite".into()));
                }
                points.push(v);
            }
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut ds = Dataset::new(name, points, dim, label_idx.map(|_| labels))?;
    if label_idx.is_some() {
        ds.class_names = names;
    }
    Ok(ds)
}

/// Projects the centered data onto its `dims` leading principal axes.
pub fn pca_reduce(data: &Dataset, dims: usize) -> Result<Dataset> {
    let n = data.len();
    let m = data.dim();
    if dims == 0 || dims > n.min(m) {
        return Err(SscError::InvalidArgument(format!(
            "PCA target dimension {dims} outside 1..={}",
            n.min(m)
        )));
    }
    let mu = data.mean();
    let centered: Vec<f64> = data
        .points()
        .chunks(m)
        .flat_map(|r| r.iter().zip(&mu).map(|(v, c)| v - c))
        .collect();

    let mut out = vec![0.0; n * dims];
    if m <= n {
        // Scatter matrix XᵀX; its eigenvectors are the principal axes.
        let scatter = SymMatrix::from_fn(m, |a, b| {
            centered.chunks(m).map(|r| r[a] * r[b]).sum::<f64>()
        });
        let e = eig(&scatter)?;
        for (i, row) in centered.chunks(m).enumerate() {
            for k in 0..dims {
                out[i * dims + k] = row.iter().zip(e.vector(k)).map(|(a, b)| a * b).sum();
            }
        }
    } else {
        // Gram matrix XXᵀ = UΣ²Uᵀ; scores are UΣ.
        let gram = SymMatrix::from_fn(n, |a, b| {
            centered[a * m..(a + 1) * m]
                .iter()
                .zip(&centered[b * m..(b + 1) * m])
                .map(|(x, y)| x * y)
                .sum()
        });
        let e = eig(&gram)?;
        for k in 0..dims {
            let sigma = e.values()[k].max(0.0).sqrt();
            for i in 0..n {
                out[i * dims + k] = e.component(i, k) * sigma;
            }
        }
    }
    Ok(data.with_points(out, dims))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(−‖aᵢ − aⱼ‖² / δ²)`.
    Gaussian { width: f64 },
    /// `(aᵢᵀaⱼ + 1)^d`.
    Polynomial { degree: u32 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { width } if !(width > 0.0 && width.is_finite()) => Err(
                SscError::InvalidArgument(format!("Gaussian width must be positive, got {width}")),
            ),
            KernelSpec::Polynomial { degree: 0 } => Err(SscError::InvalidArgument(
                "polynomial degree must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The scalar kernel parameter (δ or d).
    pub fn param(&self) -> f64 {
        match *self {
            KernelSpec::Gaussian { width } => width,
            KernelSpec::Polynomial { degree } => degree as f64,
        }
    }

    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { width } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (width * width)).exp()
            }
            KernelSpec::Polynomial { degree } => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot + 1.0).powi(degree as i32)
            }
        }
    }
}

pub fn build_affinity(data: &Dataset, spec: &KernelSpec) -> Result<SymMatrix> {
    spec.validate()?;
    let n = data.len();
    let mut k = vec![0.0; n * n];
    par::for_each_row_mut(&mut k, n, |i, row| {
        let a = data.point(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j && matches!(spec, KernelSpec::Gaussian { .. }) {
                1.0
            } else {
                spec.eval(a, data.point(j))
            };
        }
    });
    if let Some(p) = k.iter().position(|v| !v.is_finite()) {
        return Err(SscError::NonFiniteKernel { i: p / n, j: p % n });
    }
    Ok(SymMatrix::from_raw(n, k))
}

/// Keeps `K[i][j]` when `i` is among the `k_nn` largest off-diagonal
/// affinities of row `j` or vice versa; zeroes the rest. The diagonal is kept.
/// Ties are broken toward the lower column index.
pub fn knn_sparsify(k: &SymMatrix, k_nn: usize) -> Result<SymMatrix> {
    let n = k.n();
    if k_nn == 0 || k_nn >= n {
        return Err(SscError::InvalidArgument(format!(
            "k_nn must lie in 1..{n}, got {k_nn}"
        )));
    }
    let mut keep = vec![false; n * n];
    for i in 0..n {
        let mut cols: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        cols.sort_by(|&a, &b| k.get(i, b).total_cmp(&k.get(i, a)).then(a.cmp(&b)));
        for &j in &cols[..k_nn] {
            keep[i * n + j] = true;
            keep[j * n + i] = true;
        }
        keep[i * n + i] = true;
    }
    let data = k
        .as_slice()
        .iter()
        .zip(&keep)
        .map(|(&v, &kp)| if kp { v } else { 0.0 })
        .collect();
    SymMatrix::from_row_major(n, data)
}

/// Median Euclidean distance over all unordered pairs of distinct samples.
pub fn median_pairwise_distance(data: &Dataset) -> f64 {
    let n = data.len();
    let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = data
                .point(i)
                .iter()
                .zip(data.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d.push(d2.sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len().is_multiple_of(2) {
        0.5 * (d[mid - 1] + d[mid])
    } else {
        d[mid]
    }
}
