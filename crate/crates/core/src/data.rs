//! Dataset ingestion and generation.
//!
//! Covers IDX image files, PCA with standardization, class-balanced
//! subsampling, QNN-labeled quantum datasets, the computational-basis
//! counterexample dataset and the discrete-logarithm task. Datasets travel
//! as CSV with a JSON sidecar holding provenance and a SHA-256 of the CSV.

use std::collections::BTreeMap;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom as _;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::engineer::{BinarizeMode, EngineeredLabels};
use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};
use crate::rng::stream;
use crate::statevec::{embed_basis, qnn_expectation, EmbeddingSpec, QnnSpec};

pub const DRESS: u8 = 3;
pub const SHIRT: u8 = 6;
pub const MAX_DLOG_PRIME: u64 = 1_000_000;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qnn: Option<QnnSpec>,
    #[serde(default)]
    pub seeds: BTreeMap<String, u64>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    /// Rows of the parent dataset this one was drawn from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl DatasetMeta {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, name: &str, seed: u64) -> Self {
        self.seeds.insert(name.to_string(), seed);
        self
    }

    pub fn with_param(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

fn check_rows(x: &[Vec<f64>]) -> Result<usize> {
    let width = x.first().map_or(0, Vec::len);
    for (i, row) in x.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Shape(format!("row {i} has {} features, expected {width}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(width)
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, meta: DatasetMeta) -> Result<Self> {
        check_rows(&x)?;
        if x.len() != y.len() {
            return Err(Error::Shape(format!("{} inputs but {} targets", x.len(), y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite target".into()));
        }
        Ok(Self { x, y, meta })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            meta: DatasetMeta {
                source_indices: Some(idx.to_vec()),
                split: None,
                ..self.meta.clone()
            },
        }
    }

    /// Seeded shuffle, first `n_train` rows train and the rest test.
    pub fn train_test_split(&self, n_train: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        if n_train > self.len() {
            return Err(Error::InsufficientData {
                requested: n_train,
                available: self.len(),
            });
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut stream(seed, "train-test", 0));
        let split = Split {
            train: idx[..n_train].to_vec(),
            test: idx[n_train..].to_vec(),
        };
        let mut train = self.select(&split.train);
        let mut test = self.select(&split.test);
        train.meta.source_indices = None;
        test.meta.source_indices = None;
        train.meta.seeds.insert("split".into(), seed);
        test.meta.seeds.insert("split".into(), seed);
        train.meta.split = Some(split.clone());
        test.meta.split = Some(split);
        Ok((train, test))
    }

    pub fn to_csv_string(&self) -> String {
        let n = self.n_features();
        let mut out = (0..n).map(|j| format!("x_{j}")).collect::<Vec<_>>();
        out.push("y".into());
        let mut text = out.join(",") + "\n";
        for (row, y) in self.x.iter().zip(&self.y) {
            for v in row {
                text.push_str(&format!("{v},"));
            }
            text.push_str(&format!("{y}\n"));
        }
        text
    }

    /// Writes the CSV and `<path>.json` with the metadata and the CSV hash.
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string();
        std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
        write_sidecar(path, &self.meta, &text, None)
    }

    /// Reads a CSV written by [`Dataset::write`]. The sidecar is optional;
    /// when present its hash must match the CSV.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (header, cols) = parse_csv(path, &text)?;
        let n = header.iter().take_while(|h| h.starts_with("x_")).count();
        if header.len() != n + 1 || header[n] != "y" {
            return Err(Error::format(path, "expected header x_0,...,x_{n-1},y"));
        }
        let meta = match read_sidecar(path, &text)? {
            Some(side) => serde_json::from_value(side.meta).map_err(|e| Error::format(sidecar(path), e.to_string()))?,
            None => DatasetMeta::new(path.display().to_string()),
        };
        let x = cols.iter().map(|r| r[..n].to_vec()).collect();
        let y = cols.iter().map(|r| r[n]).collect();
        Dataset::new(x, y, meta)
    }
}

/// Hex SHA-256 of a file's bytes, as recorded in sidecars.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    dataset_hash: String,
    meta: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    engineering: Option<EngineeringInfo>,
}

fn write_sidecar(path: &Path, meta: &DatasetMeta, csv: &str, engineering: Option<EngineeringInfo>) -> Result<()> {
    let side = Sidecar {
        dataset_hash: content_hash(csv.as_bytes()),
        meta: serde_json::to_value(meta).expect("meta serializes"),
        engineering,
    };
    let p = sidecar(path);
    let text = serde_json::to_string_pretty(&side).expect("sidecar serializes") + "\n";
    std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

fn read_sidecar(path: &Path, csv: &str) -> Result<Option<Sidecar>> {
    let p = sidecar(path);
    if !p.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|e| Error::format(&p, e.to_string()))?;
    if side.dataset_hash != content_hash(csv.as_bytes()) {
        return Err(Error::format(&p, "dataset hash does not match the CSV"));
    }
    Ok(Some(side))
}

fn parse_csv(path: &Path, text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(Error::format(path, format!("row {} has {} fields", i + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

// ---------------------------------------------------------------------------
// engineered export

/// Scalars describing how the engineered labels were built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineeringInfo {
    pub lambda_used: f64,
    pub g_gen: f64,
    pub s_tra: f64,
    pub cap_satisfied: bool,
    pub mode: BinarizeMode,
    pub noise_p: f64,
    pub noise_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineeredDataset {
    pub x: Vec<Vec<f64>>,
    pub y_real: Vec<f64>,
    pub y_class: Vec<f64>,
    pub meta: DatasetMeta,
    pub info: EngineeringInfo,
}

impl EngineeredDataset {
    pub fn new(x: Vec<Vec<f64>>, labels: &EngineeredLabels, meta: DatasetMeta) -> Result<Self> {
        check_rows(&x)?;
        if x.len() != labels.y_class.len() {
            return Err(Error::Shape(format!("{} inputs but {} labels", x.len(), labels.y_class.len())));
        }
        let e = &labels.engineered;
        Ok(Self {
            x,
            y_real: e.y_real.clone(),
            y_class: labels.y_class.clone(),
            meta,
            info: EngineeringInfo {
                lambda_used: e.lambda_used,
                g_gen: e.g_gen_achieved,
                s_tra: e.s_tra,
                cap_satisfied: e.cap_satisfied,
                mode: labels.mode,
                noise_p: labels.noise_p,
                noise_seed: labels.noise_seed,
            },
        })
    }

    /// The classification view (`y = y_class`).
    pub fn classification(&self) -> Dataset {
        Dataset {
            x: self.x.clone(),
            y: self.y_class.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let n = self.x.first().map_or(0, Vec::len);
        let mut head: Vec<String> = (0..n).map(|j| format!("x_{j}")).collect();
        head.push("y_real".into());
        head.push("y_class".into());
        let mut text = head.join(",") + "\n";
        for ((row, r), c) in self.x.iter().zip(&self.y_real).zip(&self.y_class) {
            for v in row {
                text.push_str(&format!("{v},"));
            }
            text.push_str(&format!("{r},{c}\n"));
        }
        text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string();
        std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
        write_sidecar(path, &self.meta, &text, Some(self.info.clone()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (header, rows) = parse_csv(path, &text)?;
        let n = header.iter().take_while(|h| h.starts_with("x_")).count();
        if header.len() != n + 2 || header[n] != "y_real" || header[n + 1] != "y_class" {
            return Err(Error::format(path, "expected header x_0,...,x_{n-1},y_real,y_class"));
        }
        let side = read_sidecar(path, &text)?.ok_or_else(|| Error::format(sidecar(path), "missing sidecar"))?;
        let info = side
            .engineering
            .ok_or_else(|| Error::format(sidecar(path), "sidecar lacks engineering details"))?;
        let meta = serde_json::from_value(side.meta).map_err(|e| Error::format(sidecar(path), e.to_string()))?;
        Ok(Self {
            x: rows.iter().map(|r| r[..n].to_vec()).collect(),
            y_real: rows.iter().map(|r| r[n]).collect(),
            y_class: rows.iter().map(|r| r[n + 1]).collect(),
            meta,
            info,
        })
    }
}

// ---------------------------------------------------------------------------
// IDX

#[derive(Clone, Debug, PartialEq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

/// Parse an unsigned-byte IDX file, gunzipping when the gzip magic is present.
pub fn read_idx(path: &Path) -> Result<IdxArray> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::format(path, format!("gzip: {e}")))?;
        out
    } else {
        raw
    };
    parse_idx(&bytes).map_err(|m| Error::format(path, m))
}

fn parse_idx(bytes: &[u8]) -> std::result::Result<IdxArray, String> {
    if bytes.len() < 4 {
        return Err("file shorter than the IDX magic".into());
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if magic != 0x0000_0803 && magic != 0x0000_0801 {
        return Err(format!("bad magic 0x{magic:08x}"));
    }
    let ndim = bytes[3] as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err("truncated dimension header".into());
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|d| {
            let o = 4 + 4 * d;
            u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize
        })
        .collect();
    let len = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("dimension overflow")?;
    let body = &bytes[header..];
    if body.len() != len {
        return Err(format!("expected {len} data bytes, found {}", body.len()));
    }
    Ok(IdxArray {
        dims,
        data: body.to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    /// One flattened row-major image per entry.
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl ImageSet {
    pub fn label_histogram(&self) -> BTreeMap<u8, usize> {
        let mut h = BTreeMap::new();
        for &l in &self.labels {
            *h.entry(l).or_insert(0) += 1;
        }
        h
    }

    /// Binary task on two classes: `positive` → +1, `negative` → −1, raw
    /// pixel intensities as features.
    pub fn binary_task(&self, positive: u8, negative: u8) -> Dataset {
        let (x, y) = self
            .images
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == positive || l == negative)
            .map(|(img, &l)| {
                let row: Vec<f64> = img.iter().map(|&p| p as f64).collect();
                (row, if l == positive { 1.0 } else { -1.0 })
            })
            .unzip();
        Dataset {
            x,
            y,
            meta: DatasetMeta::new("fashion-mnist")
                .with_param("positive_class", positive)
                .with_param("negative_class", negative),
        }
    }
}

/// Load an image file (magic 0x803) and its label file (magic 0x801).
pub fn load_fashion_mnist(images: &Path, labels: &Path) -> Result<ImageSet> {
    let img = read_idx(images)?;
    let lab = read_idx(labels)?;
    if img.dims.len() != 3 {
        return Err(Error::format(images, "image file must be three-dimensional"));
    }
    if lab.dims.len() != 1 {
        return Err(Error::format(labels, "label file must be one-dimensional"));
    }
    if img.dims[0] != lab.dims[0] {
        return Err(Error::format(
            labels,
            format!("{} labels for {} images", lab.dims[0], img.dims[0]),
        ));
    }
    if let Some(bad) = lab.data.iter().find(|&&l| l > 9) {
        return Err(Error::format(labels, format!("label {bad} outside 0-9")));
    }
    let (rows, cols) = (img.dims[1], img.dims[2]);
    let images = img.data.chunks(rows * cols.max(1)).map(<[u8]>::to_vec).collect();
    Ok(ImageSet {
        rows,
        cols,
        images,
        labels: lab.data,
    })
}

/// Locate `<split>-images-idx3-ubyte[.gz]` and `<split>-labels-idx1-ubyte[.gz]`
/// in `dir` (`split` is `train` or `t10k`).
pub fn load_fashion_mnist_dir(dir: &Path, split: &str) -> Result<ImageSet> {
    let find = |stem: String| -> Result<PathBuf> {
        let plain = dir.join(&stem);
        let gz = dir.join(format!("{stem}.gz"));
        if plain.exists() {
            Ok(plain)
        } else if gz.exists() {
            Ok(gz)
        } else {
            Err(Error::io(
                plain,
                std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file not found"),
            ))
        }
    };
    load_fashion_mnist(
        &find(format!("{split}-images-idx3-ubyte"))?,
        &find(format!("{split}-labels-idx1-ubyte"))?,
    )
}

// ---------------------------------------------------------------------------
// PCA

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Principal axes, one unit vector per component.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues (population normalization), descending, all of them.
    pub eigenvalues: Vec<f64>,
    /// Standard deviation of each projected coordinate.
    pub scale: Vec<f64>,
}

impl Pca {
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        self.project(row).iter().zip(&self.scale).map(|(v, s)| v / s).collect()
    }

    /// Back-projection of an unstandardized coordinate vector.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, a) in self.components.iter().zip(coords) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += a * v;
            }
        }
        out
    }
}

/// Project onto the top `k` principal components, then standardize each
/// output coordinate to zero mean and unit (population) standard deviation.
pub fn pca_standardize(x: &[Vec<f64>], k: usize) -> Result<(Pca, Vec<Vec<f64>>)> {
    let dim = check_rows(x)?;
    let n = x.len();
    if k == 0 || k > n.min(dim) {
        return Err(Error::InvalidInput(format!(
            "{k} components requested from {n} points in {dim} dimensions"
        )));
    }
    let mean: Vec<f64> = (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, dim, |i, j| x[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / n as f64;
    let eig = sym_eig(&SymMatrix::from_dmatrix(cov)?)?;
    let components: Vec<Vec<f64>> = (0..k).map(|c| eig.column(c)).collect();
    let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    let floor = 1e-12 * total.max(f64::MIN_POSITIVE).sqrt();
    let mut pca = Pca {
        mean,
        components,
        eigenvalues: eig.values.clone(),
        scale: vec![1.0; k],
    };
    let projected: Vec<Vec<f64>> = x.par_iter().map(|r| pca.project(r)).collect();
    for c in 0..k {
        let m = projected.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = projected.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if !(sd > floor) {
            return Err(Error::DegenerateDimension(c));
        }
        pca.scale[c] = sd;
    }
    let out = projected
        .iter()
        .map(|r| r.iter().zip(&pca.scale).map(|(v, s)| v / s).collect())
        .collect();
    Ok((pca, out))
}

// ---------------------------------------------------------------------------
// subsampling

/// Draw `n` rows without replacement. With exactly two label values the draw
/// is class-balanced (the lower label takes the odd extra row); rows keep
/// their source order. Drawing every row returns the dataset unchanged.
pub fn subsample(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > ds.len() {
        return Err(Error::InsufficientData {
            requested: n,
            available: ds.len(),
        });
    }
    if n == ds.len() {
        let mut out = ds.clone();
        out.meta.source_indices = Some((0..n).collect());
        out.meta.seeds.insert("subsample".into(), seed);
        return Ok(out);
    }
    let mut classes: Vec<f64> = ds.y.clone();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    let mut chosen = if classes.len() == 2 {
        let mut picked = Vec::with_capacity(n);
        for (c, &label) in classes.iter().enumerate() {
            let want = n / 2 + usize::from(c == 0 && n % 2 == 1);
            let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == label).collect();
            if members.len() < want {
                return Err(Error::InsufficientData {
                    requested: want,
                    available: members.len(),
                });
            }
            members.shuffle(&mut stream(seed, "subsample", c as u64));
            picked.extend_from_slice(&members[..want]);
        }
        picked
    } else {
        let mut all: Vec<usize> = (0..ds.len()).collect();
        all.shuffle(&mut stream(seed, "subsample", 0));
        all.truncate(n);
        all
    };
    chosen.sort_unstable();
    let mut out = ds.select(&chosen);
    out.meta.seeds.insert("subsample".into(), seed);
    Ok(out)
}

// ---------------------------------------------------------------------------
// generators

/// Labels `⟨Z_0⟩` after the QNN acting on each embedded input.
pub fn gen_quantum_dataset_with(x: &[Vec<f64>], spec: &EmbeddingSpec, qnn: &QnnSpec) -> Result<Dataset> {
    spec.validate()?;
    qnn.validate()?;
    let states = spec.embed_all(x)?;
    let y = states
        .par_iter()
        .map(|s| qnn_expectation(s, qnn))
        .collect::<Result<Vec<f64>>>()?;
    let mut meta = DatasetMeta::new("quantum")
        .with_seed("qnn", qnn.coupling_seed)
        .with_seed("e3_haar", spec.e3_haar_seed);
    meta.embedding = Some(spec.clone());
    meta.qnn = Some(qnn.clone());
    Dataset::new(x.to_vec(), y, meta)
}

/// QNN-labeled dataset with standard normal couplings from `qnn_seed`.
pub fn gen_quantum_dataset(x: &[Vec<f64>], spec: &EmbeddingSpec, qnn_seed: u64) -> Result<Dataset> {
    gen_quantum_dataset_with(x, spec, &QnnSpec::random(spec.register_size(), qnn_seed))
}

/// Inputs uniform over `{0, π}ⁿ` (with replacement); labels are `⟨Z⟩` of the
/// last qubit of the computational-basis state, so `+1` iff `x_{n−1} = 0`.
pub fn gen_appendix_g_dataset(n: usize, count: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one qubit".into()));
    }
    crate::statevec::StateVector::zero(n)?;
    let rows: Vec<(Vec<f64>, f64)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "appendix-g", i as u64);
            let x: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { std::f64::consts::PI } else { 0.0 })
                .collect();
            let y = embed_basis(&x)?.expect_z(n - 1);
            Ok((x, y))
        })
        .collect::<Result<_>>()?;
    let (x, y) = rows.into_iter().unzip();
    let meta = DatasetMeta::new("basis-counterexample")
        .with_seed("sample", seed)
        .with_param("n", n);
    Dataset::new(x, y, meta)
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Discrete-log labeling on `Z_p^*` by a precomputed power table.
#[derive(Clone, Debug, PartialEq)]
pub struct DlogTask {
    pub p: u64,
    pub g: u64,
    pub s: u64,
    /// `log[x]` for `x ∈ 1..p`, valued in `1..=p−1` (`log 1 = p−1`); index 0 unused.
    log: Vec<u64>,
}

impl DlogTask {
    pub fn new(p: u64, g: u64, s: u64) -> Result<Self> {
        if !(3..=MAX_DLOG_PRIME).contains(&p) || !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not an odd prime ≤ {MAX_DLOG_PRIME}")));
        }
        if g.is_multiple_of(p) {
            return Err(Error::InvalidGenerator { g, p });
        }
        let mut log = vec![0u64; p as usize];
        let mut v = 1u64;
        for k in 1..p {
            v = v * (g % p) % p;
            if log[v as usize] != 0 {
                return Err(Error::InvalidGenerator { g, p });
            }
            log[v as usize] = k;
        }
        Ok(Self { p, g, s, log })
    }

    /// Multiplicative order of `g` by brute force.
    pub fn order(p: u64, g: u64) -> u64 {
        let mut v = g % p;
        if v == 0 {
            return 0;
        }
        let mut k = 1;
        while v != 1 {
            v = v * (g % p) % p;
            k += 1;
        }
        k
    }

    pub fn log(&self, x: u64) -> u64 {
        self.log[(x % self.p) as usize]
    }

    /// `+1` iff `log x` lies in `[s, s + (p−3)/2]`, read modulo `p−1`.
    pub fn label(&self, x: u64) -> f64 {
        let m = self.p - 1;
        let offset = (self.log(x) % m + m - self.s % m) % m;
        if offset <= (self.p - 3) / 2 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn z(&self, x: u64) -> f64 {
        self.log(x) as f64 / self.p as f64
    }

    pub fn elements(&self) -> impl Iterator<Item = u64> {
        1..self.p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DlogDataset {
    /// Inputs `x_i` as single features, labels ±1.
    pub dataset: Dataset,
    /// `z_i = log_g(x_i)/p`.
    pub z: Vec<f64>,
    pub elements: Vec<u64>,
}

/// `count` elements drawn uniformly from `Z_p^*` with replacement.
pub fn gen_dlog_dataset(p: u64, g: u64, s: u64, count: usize, seed: u64) -> Result<DlogDataset> {
    let task = DlogTask::new(p, g, s)?;
    let elements: Vec<u64> = (0..count)
        .map(|i| stream(seed, "dlog", i as u64).random_range(1..p))
        .collect();
    let meta = DatasetMeta::new("dlog")
        .with_seed("sample", seed)
        .with_param("p", p)
        .with_param("g", g)
        .with_param("s", s);
    let dataset = Dataset::new(
        elements.iter().map(|&x| vec![x as f64]).collect(),
        elements.iter().map(|&x| task.label(x)).collect(),
        meta,
    )?;
    Ok(DlogDataset {
        dataset,
        z: elements.iter().map(|&x| task.z(x)).collect(),
        elements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engineer::Engineered;
    use crate::kernels::fidelity_gram;
    use crate::rng::rng_from_seed;
    use crate::statevec::Embedding;
    use approx::assert_abs_diff_eq;
    use std::io::Write as _;

    fn idx_bytes(magic: u32, dims: &[u32], data: &[u8]) -> Vec<u8> {
        let mut out = magic.to_be_bytes().to_vec();
        for d in dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(data);
        out
    }

    fn write_idx_pair(dir: &Path, gz: bool) -> (PathBuf, PathBuf) {
        let count = 20u32;
        let pixels: Vec<u8> = (0..count * 4 * 4).map(|i| (i * 7 % 256) as u8).collect();
        let labels: Vec<u8> = (0..count).map(|i| (i % 10) as u8).collect();
        let img = idx_bytes(0x803, &[count, 4, 4], &pixels);
        let lab = idx_bytes(0x801, &[count], &labels);
        let write = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            if gz {
                let mut e = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
                e.write_all(bytes).unwrap();
                std::fs::write(&p, e.finish().unwrap()).unwrap();
            } else {
                std::fs::write(&p, bytes).unwrap();
            }
            p
        };
        (write("img", &img), write("lab", &lab))
    }

    #[test]
    fn idx_plain_and_gzip_agree() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("plain");
        let gz = dir.path().join("gz");
        std::fs::create_dir_all(&plain).unwrap();
        std::fs::create_dir_all(&gz).unwrap();
        let (i1, l1) = write_idx_pair(&plain, false);
        let (i2, l2) = write_idx_pair(&gz, true);
        let a = load_fashion_mnist(&i1, &l1).unwrap();
        let b = load_fashion_mnist(&i2, &l2).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.rows, a.cols, a.images.len()), (4, 4, 20));
        assert_eq!(a.label_histogram().len(), 10);
        assert_eq!(a.images[1][0], (16 * 7) as u8);
        let task = a.binary_task(DRESS, SHIRT);
        assert_eq!(task.len(), 4);
        assert_eq!(task.y, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn idx_errors() {
        assert!(parse_idx(&idx_bytes(0x803, &[2, 2, 2], &[0; 7])).is_err());
        assert!(parse_idx(&idx_bytes(0x803, &[2, 2], &[])).is_err());
        assert!(parse_idx(&idx_bytes(0x804, &[1], &[0])).is_err());
        assert!(parse_idx(&[0, 0]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad");
        std::fs::write(&p, idx_bytes(0x801, &[5], &[1, 2])).unwrap();
        assert!(matches!(read_idx(&p), Err(Error::Format { .. })));
        assert!(matches!(
            load_fashion_mnist_dir(dir.path(), "train"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn pca_line_recovers_position() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0 + 2.0 * i as f64, -3.0 + i as f64]).collect();
        let (_, out) = pca_standardize(&x, 1).unwrap();
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let corr = pearson(&out.iter().map(|r| r[0]).collect::<Vec<_>>(), &t);
        assert_abs_diff_eq!(corr.abs(), 1.0, epsilon = 1e-12);
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng_from_seed(seed);
        (0..n)
            .map(|_| (0..d).map(|j| (j + 1) as f64 * r.random_range(-1.0..1.0) + j as f64).collect())
            .collect()
    }

    #[test]
    fn pca_postconditions() {
        let x = gaussian_rows(50, 6, 1);
        let (pca, out) = pca_standardize(&x, 3).unwrap();
        for c in 0..3 {
            let col: Vec<f64> = out.iter().map(|r| r[c]).collect();
            let m = col.iter().sum::<f64>() / 50.0;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 50.0).sqrt();
            assert!(m.abs() <= 1e-10);
            assert_abs_diff_eq!(sd, 1.0, epsilon = 1e-10);
            // sign convention
            let comp = &pca.components[c];
            let big = comp.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(big > 0.0);
            for d in 0..3 {
                let dot: f64 = comp.iter().zip(&pca.components[d]).map(|(a, b)| a * b).sum();
                assert_abs_diff_eq!(dot, if c == d { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
        // mean squared reconstruction error = discarded eigenvalue mass
        let err: f64 = x
            .iter()
            .map(|r| {
                let rec = pca.reconstruct(&pca.project(r));
                r.iter().zip(&rec).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            / 50.0;
        let discarded: f64 = pca.eigenvalues[3..].iter().sum();
        assert_abs_diff_eq!(err, discarded, epsilon = 1e-10);
        assert_eq!(pca.transform(&x[7]), out[7]);
    }

    #[test]
    fn pca_errors() {
        let x = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
        assert!(matches!(pca_standardize(&x, 1), Err(Error::DegenerateDimension(0))));
        let line: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, i as f64]).collect();
        assert!(matches!(pca_standardize(&line, 2), Err(Error::DegenerateDimension(1))));
        assert!(pca_standardize(&line, 3).is_err());
    }

    #[test]
    fn pca_row_permutation_commutes() {
        let x = gaussian_rows(30, 4, 2);
        let (_, out) = pca_standardize(&x, 2).unwrap();
        let perm: Vec<usize> = (0..30).rev().collect();
        let xp: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
        let (_, outp) = pca_standardize(&xp, 2).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            for c in 0..2 {
                assert_abs_diff_eq!(outp[k][c], out[i][c], epsilon = 1e-9);
            }
        }
    }

    fn binary_ds(n: usize, positives: usize) -> Dataset {
        Dataset::new(
            (0..n).map(|i| vec![i as f64]).collect(),
            (0..n).map(|i| if i < positives { 1.0 } else { -1.0 }).collect(),
            DatasetMeta::new("test"),
        )
        .unwrap()
    }

    #[test]
    fn subsample_behaviour() {
        let ds = binary_ds(100, 30);
        let full = subsample(&ds, 100, 4).unwrap();
        assert_eq!(full.x, ds.x);
        assert_eq!(full.y, ds.y);

        let a = subsample(&ds, 41, 9).unwrap();
        assert_eq!(a, subsample(&ds, 41, 9).unwrap());
        assert_ne!(a.x, subsample(&ds, 41, 10).unwrap().x);
        let pos = a.y.iter().filter(|&&v| v > 0.0).count();
        assert!((pos as i64 - (41 - pos) as i64).abs() <= 1);
        assert!(a.meta.source_indices.as_ref().unwrap().windows(2).all(|w| w[0] < w[1]));

        assert!(matches!(subsample(&ds, 101, 0), Err(Error::InsufficientData { .. })));
        assert!(matches!(subsample(&ds, 80, 0), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn train_test_split_partitions() {
        let ds = binary_ds(20, 10);
        let (tr, te) = ds.train_test_split(15, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (15, 5));
        let split = tr.meta.split.clone().unwrap();
        let mut all = [split.train.clone(), split.test.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        assert_eq!(tr.x[0], ds.x[split.train[0]]);
    }

    #[test]
    fn csv_round_trip_bit_exact() {
        let x = vec![vec![0.1, -1.0 / 3.0], vec![1e-300, std::f64::consts::PI]];
        let ds = Dataset::new(x, vec![0.7, -0.123_456_789_012_345_67], DatasetMeta::new("t").with_seed("a", 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        ds.write(&p).unwrap();
        assert_eq!(Dataset::read(&p).unwrap(), ds);
        let side: Value = serde_json::from_str(&std::fs::read_to_string(sidecar(&p)).unwrap()).unwrap();
        assert_eq!(side["dataset_hash"], content_hash(&std::fs::read(&p).unwrap()));

        std::fs::write(&p, "x_0,x_1,y\n0,0,1\n").unwrap();
        assert!(matches!(Dataset::read(&p), Err(Error::Format { .. })));
        std::fs::remove_file(sidecar(&p)).unwrap();
        assert_eq!(Dataset::read(&p).unwrap().y, vec![1.0]);
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(Dataset::read(&p).is_err());
    }

    #[test]
    fn engineered_round_trip() {
        let labels = EngineeredLabels {
            engineered: Engineered {
                y_real: vec![0.25, -1.0 / 7.0],
                v: vec![0.0, 1.0],
                lambda_used: 1e-3,
                g_gen_achieved: 2.5,
                s_tra: 0.001,
                cap_satisfied: true,
            },
            y_class: vec![1.0, -1.0],
            mode: BinarizeMode::SignNoise,
            noise_p: 0.1,
            noise_seed: 11,
        };
        let e = EngineeredDataset::new(vec![vec![1.5], vec![-0.1]], &labels, DatasetMeta::new("eng")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        e.write(&p).unwrap();
        assert_eq!(EngineeredDataset::read(&p).unwrap(), e);
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("x_0,y_real,y_class\n"));
        assert_eq!(e.classification().y, vec![1.0, -1.0]);
    }

    #[test]
    fn quantum_dataset_zero_couplings_bloch() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![0.3 * i as f64, -0.2, 0.9]).collect();
        let spec = EmbeddingSpec::new(Embedding::E1, 3, 0);
        let qnn = QnnSpec {
            couplings: vec![0.0; 2],
            trotter_steps: 10,
            time: 10.0,
            coupling_seed: 0,
        };
        let ds = gen_quantum_dataset_with(&x, &spec, &qnn).unwrap();
        for (r, y) in x.iter().zip(&ds.y) {
            assert_abs_diff_eq!(*y, (2.0 * r[0]).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn quantum_dataset_reproducible_and_bounded() {
        let x = gaussian_rows(10, 3, 3);
        for scheme in [Embedding::E1, Embedding::E2, Embedding::E3] {
            let spec = EmbeddingSpec::new(scheme, 3, 8);
            let a = gen_quantum_dataset(&x, &spec, 21).unwrap();
            assert_eq!(a, gen_quantum_dataset(&x, &spec, 21).unwrap());
            assert!(a.y.iter().all(|v| (-1.0..=1.0).contains(v)));
            // regenerating from meta alone
            let meta = &a.meta;
            let again = gen_quantum_dataset_with(&x, meta.embedding.as_ref().unwrap(), meta.qnn.as_ref().unwrap()).unwrap();
            assert_eq!(again.y, a.y);
        }
    }

    #[test]
    fn appendix_g_labels_and_gram() {
        let ds = gen_appendix_g_dataset(5, 40, 2).unwrap();
        for (x, y) in ds.x.iter().zip(&ds.y) {
            assert!(x.iter().all(|&v| v == 0.0 || v == std::f64::consts::PI));
            assert_eq!(*y, if x[4] == 0.0 { 1.0 } else { -1.0 });
        }
        // relabeling other coordinates leaves labels alone
        for x in &ds.x {
            let mut flipped = x.clone();
            for v in flipped.iter_mut().take(4) {
                *v = std::f64::consts::PI - *v;
            }
            let y0 = embed_basis(x).unwrap().expect_z(4);
            assert_eq!(embed_basis(&flipped).unwrap().expect_z(4), y0);
        }
        let states: Vec<_> = ds.x.iter().map(|x| embed_basis(x).unwrap()).collect();
        let k = fidelity_gram(&states).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let expect = if ds.x[i] == ds.x[j] { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(k.get(i, j), expect, epsilon = 1e-12);
            }
        }
        assert_eq!(ds, gen_appendix_g_dataset(5, 40, 2).unwrap());
    }

    #[test]
    fn dlog_small_prime() {
        let t = DlogTask::new(7, 3, 2).unwrap();
        let logs: Vec<(u64, u64)> = [3, 2, 6, 4, 5, 1].iter().map(|&x| (x, t.log(x))).collect();
        assert_eq!(logs, vec![(3, 1), (2, 2), (6, 3), (4, 4), (5, 5), (1, 6)]);
        let pos: Vec<u64> = t.elements().filter(|&x| t.label(x) > 0.0).collect();
        assert_eq!(pos, vec![2, 4, 6]);
        assert!(matches!(DlogTask::new(7, 2, 0), Err(Error::InvalidGenerator { g: 2, p: 7 })));
        assert!(DlogTask::new(9, 2, 0).is_err());
    }

    #[test]
    fn dlog_p59() {
        assert_eq!(DlogTask::order(59, 2), 58);
        for s in [0, 10, 40, 57] {
            let t = DlogTask::new(59, 2, s).unwrap();
            assert_eq!(t.elements().filter(|&x| t.label(x) > 0.0).count(), 29);
            let mut logs: Vec<u64> = t.elements().map(|x| t.log(x)).collect();
            logs.sort_unstable();
            assert_eq!(logs, (1..59).collect::<Vec<_>>());
        }
        let d = gen_dlog_dataset(59, 2, 5, 50, 1).unwrap();
        assert_eq!(d.dataset.len(), 50);
        assert!(d.elements.iter().all(|&x| (1..59).contains(&x)));
        assert!(d.z.iter().all(|z| (0.0..1.0).contains(z)));
        assert_eq!(d, gen_dlog_dataset(59, 2, 5, 50, 1).unwrap());
    }
}
