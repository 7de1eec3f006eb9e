//! Run configuration, read from TOML.
//!
//! ```toml
//! k = 3
//! restarts = 10
//! seed = 0
//! normalizers = ["none", "ratio_cut", "sinkhorn", "frobenius_qp", "ld_ssc1", "ld_ssc2"]
//! output_dir = "out/iris"
//!
//! [dataset]
//! path = "../data/iris.csv"   # relative to this file
//! label = "species"           # header name or 0-based column index
//! # builtin = "two_blobs"     # instead of path: iris | two_blobs | two_gaussians
//! # n = 100                   # sample count for two_gaussians
//! # pca_dims = 5
//! # high_dimensional = true   # PCA to 5 dimensions unless pca_dims is set
//! # standardize = false
//! # k_nn = 10                 # symmetric kNN sparsification, off by default
//!
//! [kernel]
//! kind = "gaussian"
//! median_multiples = [0.1, 0.2, 0.5, 1, 2, 5, 10]  # δ = multiple × median distance
//! # widths = [0.5, 1.0]       # absolute δ values instead
//! # kind = "polynomial"
//! # degrees = [1, 2, 3]
//!
//! [solver]                    # optional; omitted fields keep their defaults
//! max_outer = 1000
//!
//! [iterative]                 # Sinkhorn and Frobenius-QP stopping rule
//! tol = 1e-7
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ssc_core::affinity::{
    knn_sparsify, load_csv, median_pairwise_distance, parse_csv, pca_reduce, Dataset, LabelColumn,
};
use ssc_core::ldssc::SolverConfig;
use ssc_core::normalize::{IterativeConfig, NormalizerKind, NormalizerSpec};
use ssc_core::synthetic::{two_blobs, two_gaussians};

/// PCA target used for datasets marked high-dimensional.
pub const DEFAULT_PCA_DIMS: usize = 5;

pub const DEFAULT_MEDIAN_MULTIPLES: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
pub const DEFAULT_DEGREES: [u32; 6] = [1, 2, 3, 4, 5, 6];

const IRIS_CSV: &str = include_str!("../../../data/iris.csv");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub kernel: KernelGrid,
    #[serde(default = "all_normalizers")]
    pub normalizers: Vec<NormalizerKind>,
    pub k: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub iterative: IterativeConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    pub builtin: Option<Builtin>,
    pub label: Option<LabelSelector>,
    pub n: Option<usize>,
    pub pca_dims: Option<usize>,
    #[serde(default)]
    pub high_dimensional: bool,
    #[serde(default)]
    pub standardize: bool,
    pub k_nn: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Iris,
    TwoBlobs,
    TwoGaussians,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelSelector {
    Index(usize),
    Name(String),
}

impl From<&LabelSelector> for LabelColumn {
    fn from(l: &LabelSelector) -> Self {
        match l {
            LabelSelector::Index(i) => LabelColumn::Index(*i),
            LabelSelector::Name(s) => LabelColumn::Name(s.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGrid {
    pub kind: KernelKind,
    pub median_multiples: Option<Vec<f64>>,
    pub widths: Option<Vec<f64>>,
    pub degrees: Option<Vec<u32>>,
}

impl Default for KernelGrid {
    fn default() -> Self {
        KernelGrid {
            kind: KernelKind::Gaussian,
            median_multiples: None,
            widths: None,
            degrees: None,
        }
    }
}

/// One grid point: the kernel actually used plus the value as written in the
/// config (a median multiple, an absolute width or a degree).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub kernel: ssc_core::affinity::KernelSpec,
    pub label: f64,
}

impl KernelGrid {
    /// Expands the grid for `data`; median multiples are resolved against the
    /// dataset's median pairwise distance.
    pub fn points(&self, data: &Dataset) -> Result<Vec<GridPoint>> {
        use ssc_core::affinity::KernelSpec;
        let pts: Vec<GridPoint> = match self.kind {
            KernelKind::Gaussian => {
                if self.degrees.is_some() {
                    bail!("`degrees` only applies to the polynomial kernel");
                }
                match (&self.widths, &self.median_multiples) {
                    (Some(_), Some(_)) => {
                        bail!("give either `widths` or `median_multiples`, not both")
                    }
                    (Some(w), None) => w
                        .iter()
                        .map(|&width| GridPoint {
                            kernel: KernelSpec::Gaussian { width },
                            label: width,
                        })
                        .collect(),
                    (None, m) => {
                        let med = median_pairwise_distance(data);
                        if !(med > 0.0) {
                            bail!("median pairwise distance is zero; give absolute `widths`");
                        }
                        m.as_deref()
                            .unwrap_or(&DEFAULT_MEDIAN_MULTIPLES)
                            .iter()
                            .map(|&s| GridPoint {
                                kernel: KernelSpec::Gaussian { width: s * med },
                                label: s,
                            })
                            .collect()
                    }
                }
            }
            KernelKind::Polynomial => {
                if self.widths.is_some() || self.median_multiples.is_some() {
                    bail!("widths apply only to the Gaussian kernel");
                }
                self.degrees
                    .as_deref()
                    .unwrap_or(&DEFAULT_DEGREES)
                    .iter()
                    .map(|&degree| GridPoint {
                        kernel: KernelSpec::Polynomial { degree },
                        label: degree as f64,
                    })
                    .collect()
            }
        };
        if pts.is_empty() {
            bail!("kernel grid is empty");
        }
        for p in &pts {
            p.kernel.validate()?;
        }
        Ok(pts)
    }
}

fn all_normalizers() -> Vec<NormalizerKind> {
    NormalizerKind::ALL.to_vec()
}

fn default_restarts() -> usize {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("ssc-out")
}

/// A dataset after loading and preprocessing, ready for kernel evaluation.
pub struct Prepared {
    pub data: Dataset,
    pub k_nn: Option<usize>,
}

impl RunConfig {
    /// Reads a config file. Relative dataset and output paths are resolved
    /// against the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg =
            Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &cfg.dataset.path {
            if p.is_relative() {
                cfg.dataset.path = Some(base.join(p));
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.restarts == 0 {
            bail!("restarts must be at least 1");
        }
        if self.normalizers.is_empty() {
            bail!("no normalizers selected");
        }
        match (&self.dataset.path, &self.dataset.builtin) {
            (Some(_), Some(_)) => bail!("dataset: give either `path` or `builtin`, not both"),
            (None, None) => bail!("dataset: `path` or `builtin` is required"),
            _ => {}
        }
        if self.dataset.n.is_some() && self.dataset.builtin != Some(Builtin::TwoGaussians) {
            bail!("dataset: `n` only applies to builtin = \"two_gaussians\"");
        }
        for kind in &self.normalizers {
            self.spec(*kind).validate()?;
        }
        Ok(())
    }

    pub fn spec(&self, kind: NormalizerKind) -> NormalizerSpec {
        NormalizerSpec {
            kind,
            iterative: self.iterative,
            solver: self.solver,
        }
    }

    /// Loads the dataset and applies standardization and PCA.
    pub fn prepare(&self) -> Result<Prepared> {
        let d = &self.dataset;
        let mut data = match (&d.path, d.builtin) {
            (Some(p), _) => load_csv(p, d.label.as_ref().map(LabelColumn::from).as_ref())?,
            (None, Some(Builtin::Iris)) => {
                parse_csv(IRIS_CSV, "iris", Some(&LabelColumn::Name("species".into())))?
            }
            (None, Some(Builtin::TwoBlobs)) => two_blobs(50, self.seed),
            (None, Some(Builtin::TwoGaussians)) => {
                two_gaussians(d.n.unwrap_or(200), 4.0, self.seed)
            }
            (None, None) => unreachable!("validated"),
        };
        if let Some(classes) = data.num_classes() {
            if classes > self.k {
                log::warn!("dataset has {classes} classes but k = {}", self.k);
            }
        }
        if d.standardize {
            data = data.standardized();
        }
        let dims = d
            .pca_dims
            .or(d.high_dimensional.then_some(DEFAULT_PCA_DIMS));
        if let Some(dims) = dims {
            data = pca_reduce(&data, dims)?;
        }
        if self.k > data.len() {
            bail!("k = {} exceeds the {} samples", self.k, data.len());
        }
        if let Some(k_nn) = d.k_nn {
            if k_nn == 0 || k_nn >= data.len() {
                bail!("k_nn must lie in 1..{}", data.len());
            }
        }
        Ok(Prepared { data, k_nn: d.k_nn })
    }
}

/// Sparsifies when configured.
pub fn maybe_sparsify(k: ssc_core::SymMatrix, k_nn: Option<usize>) -> Result<ssc_core::SymMatrix> {
    Ok(match k_nn {
        Some(m) => knn_sparsify(&k, m)?,
        None => k,
    })
}
