//! Gram matrices for the quantum, projected, shadow, classical and
//! discrete-log kernels, plus trace normalization and file formats.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{psd_project, sym_eig, SymMatrix};
use crate::shadows::{qinf_estimate, ShadowSet};
use crate::statevec::{inner_product, rdm, EmbeddingSpec, StateVector, C64};

pub const CLASSICAL_GAMMA_SCALES: [f64; 9] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
pub const PROJECTED_GAMMA_SCALES: [f64; 8] = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 20.0];
pub const DEFAULT_BLOCK: usize = 32;
/// Registers up to this size may use k-RDM linear kernels.
pub const MAX_KRDM_QUBITS: usize = 12;
pub const MAX_KRDM_ORDER: usize = 3;

const MAGIC: &[u8; 8] = b"KSGRAM01";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelId {
    Fidelity,
    ProjectedGaussian,
    ProjectedLinear,
    Shadow,
    Linear,
    Rbf,
    DlogQuadratic,
    Delta,
    Precomputed,
}

impl KernelId {
    const ALL: [KernelId; 9] = [
        KernelId::Fidelity,
        KernelId::ProjectedGaussian,
        KernelId::ProjectedLinear,
        KernelId::Shadow,
        KernelId::Linear,
        KernelId::Rbf,
        KernelId::DlogQuadratic,
        KernelId::Delta,
        KernelId::Precomputed,
    ];

    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn from_code(c: u32) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelId::Fidelity => "fidelity",
            KernelId::ProjectedGaussian => "projected_gaussian",
            KernelId::ProjectedLinear => "projected_linear",
            KernelId::Shadow => "shadow",
            KernelId::Linear => "linear",
            KernelId::Rbf => "rbf",
            KernelId::DlogQuadratic => "dlog_quadratic",
            KernelId::Delta => "delta",
            KernelId::Precomputed => "precomputed",
        }
    }

    /// True for kernels evaluated on embedded quantum states.
    pub fn is_quantum(self) -> bool {
        matches!(
            self,
            KernelId::Fidelity | KernelId::ProjectedGaussian | KernelId::ProjectedLinear | KernelId::Shadow
        )
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown kernel '{s}'")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_hash: Option<String>,
    pub seeds: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub base: SymMatrix,
    pub kernel: KernelId,
    pub params: BTreeMap<String, f64>,
    pub normalized: bool,
    pub provenance: Provenance,
}

impl GramMatrix {
    pub fn new(base: SymMatrix, kernel: KernelId, params: BTreeMap<String, f64>) -> Self {
        Self {
            base,
            kernel,
            params,
            normalized: false,
            provenance: Provenance::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.base.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.base.get(i, j)
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// Factor applied by [`normalize_trace`]; cross-kernel rows evaluated
    /// against new points must be multiplied by it.
    pub fn trace_scale(&self) -> f64 {
        self.param("trace_scale").unwrap_or(1.0)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Label like `rbf(gamma=0.5)` for reports.
    pub fn label(&self) -> String {
        let ps: Vec<String> = self
            .params
            .iter()
            .filter(|(k, _)| k.as_str() != "trace_scale")
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if ps.is_empty() {
            self.kernel.to_string()
        } else {
            format!("{}({})", self.kernel, ps.join(","))
        }
    }

    /// Check the PSD, non-negative-diagonal and normalization invariants.
    pub fn validate(&self) -> Result<()> {
        let eig = sym_eig(&self.base)?;
        eig.check_psd()?;
        if let Some((i, d)) = self.base.diagonal().iter().enumerate().find(|(_, d)| **d < 0.0) {
            return Err(Error::InvalidKernel(format!("diagonal entry {i} is {d}")));
        }
        if self.normalized {
            self.check_normalized()?;
        }
        Ok(())
    }

    pub fn check_normalized(&self) -> Result<()> {
        let trace = self.base.trace();
        let n = self.n();
        if (trace - n as f64).abs() > 1e-8 * (n as f64).max(1.0) {
            return Err(Error::NotNormalized { trace, n });
        }
        Ok(())
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(32 + 8 * self.n() * self.n());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.n() as u64).to_le_bytes());
        buf.extend_from_slice(&self.kernel.code().to_le_bytes());
        buf.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for (k, v) in &self.params {
            buf.extend_from_slice(&(k.len() as u16).to_le_bytes());
            buf.extend_from_slice(k.as_bytes());
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.push(u8::from(self.normalized));
        for v in self.base.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        write_sidecar(path, &self.provenance)
    }

    /// Read a binary Gram file and, when present, its JSON sidecar.
    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let mut cur = Cursor { bytes: &bytes, pos: 0, path };
        if cur.take(8)? != MAGIC {
            return Err(Error::format(path, "bad magic"));
        }
        let n = u64::from_le_bytes(cur.array()?) as usize;
        let code = u32::from_le_bytes(cur.array()?);
        let kernel = KernelId::from_code(code)
            .ok_or_else(|| Error::format(path, format!("unknown kernel id {code}")))?;
        let count = u32::from_le_bytes(cur.array()?);
        let mut params = BTreeMap::new();
        for _ in 0..count {
            let len = u16::from_le_bytes(cur.array()?) as usize;
            let key = std::str::from_utf8(cur.take(len)?)
                .map_err(|_| Error::format(path, "parameter name is not UTF-8"))?
                .to_string();
            params.insert(key, f64::from_le_bytes(cur.array()?));
        }
        let normalized = match cur.take(1)?[0] {
            0 => false,
            1 => true,
            b => return Err(Error::format(path, format!("bad normalized flag {b}"))),
        };
        let expected = n
            .checked_mul(n)
            .and_then(|m| m.checked_mul(8))
            .ok_or_else(|| Error::format(path, "dimension overflow"))?;
        let body = cur.take(expected)?;
        if cur.pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes"));
        }
        let entries: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let base = SymMatrix::new(n, entries).map_err(|e| Error::format(path, e.to_string()))?;
        let provenance = read_sidecar(path)?.unwrap_or_default();
        Ok(Self {
            base,
            kernel,
            params,
            normalized,
            provenance,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// Read a headerless CSV matrix as a precomputed kernel.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| Error::format(path, format!("row {i}: {e}")))?);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::format(path, "matrix is not square"));
        }
        let base = SymMatrix::new(n, rows.concat()).map_err(|e| Error::format(path, e.to_string()))?;
        Ok(Self::new(base, KernelId::Precomputed, BTreeMap::new()))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.path, "file is truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().unwrap())
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_sidecar(path: &Path, prov: &Provenance) -> Result<()> {
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(prov).expect("provenance serializes");
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

fn read_sidecar(path: &Path) -> Result<Option<Provenance>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::format(&side, e.to_string()))
}

/// Assemble a symmetric matrix cell by cell; every cell with `j ≤ i` is
/// computed independently so the result does not depend on scheduling.
pub fn gram_from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Result<SymMatrix> {
    let lower: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| f(i, j)).collect())
        .collect();
    SymMatrix::from_fn(n, |i, j| if j <= i { lower[i][j] } else { lower[j][i] })
}

/// Rows of `k(test_i, train_j)`.
pub fn cross_from_fn(n_test: usize, n_train: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Vec<Vec<f64>> {
    (0..n_test)
        .into_par_iter()
        .map(|i| (0..n_train).map(|j| f(i, j)).collect())
        .collect()
}

fn check_registers(states: &[StateVector]) -> Result<()> {
    if let Some(first) = states.first() {
        if let Some(s) = states.iter().find(|s| s.n_qubits() != first.n_qubits()) {
            return Err(Error::Shape(format!(
                "states have {} and {} qubits",
                first.n_qubits(),
                s.n_qubits()
            )));
        }
    }
    Ok(())
}

fn nonempty(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("no data points".into()));
    }
    Ok(())
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    inner_product(a, b).map(|c| c.norm_sqr()).unwrap_or(f64::NAN)
}

/// `K_ij = |⟨x_i|x_j⟩|²`.
pub fn fidelity_gram(states: &[StateVector]) -> Result<GramMatrix> {
    nonempty(states.len())?;
    check_registers(states)?;
    let base = gram_from_fn(states.len(), |i, j| if i == j { 1.0 } else { fidelity(&states[i], &states[j]) })?;
    Ok(GramMatrix::new(base, KernelId::Fidelity, BTreeMap::new()))
}

/// Fidelity Gram computed from inputs without holding all states at once:
/// states are embedded in blocks of `block` rows and discarded.
pub fn fidelity_gram_streamed(spec: &EmbeddingSpec, xs: &[Vec<f64>], block: usize) -> Result<GramMatrix> {
    nonempty(xs.len())?;
    spec.validate()?;
    let n = xs.len();
    let block = block.max(1);
    let starts: Vec<usize> = (0..n).step_by(block).collect();
    let mut k = vec![0.0; n * n];
    for &bi in &starts {
        let rows = spec.embed_all(&xs[bi..(bi + block).min(n)])?;
        for &bj in starts.iter().filter(|&&b| b <= bi) {
            let cols = if bj == bi {
                rows.clone()
            } else {
                spec.embed_all(&xs[bj..(bj + block).min(n)])?
            };
            let cells: Vec<(usize, usize, f64)> = (0..rows.len())
                .into_par_iter()
                .flat_map_iter(|a| {
                    let cols = &cols;
                    let rows = &rows;
                    (0..cols.len()).map(move |b| (a, b, fidelity(&rows[a], &cols[b])))
                })
                .collect();
            for (a, b, v) in cells {
                let (i, j) = (bi + a, bj + b);
                k[i * n + j] = if i == j { 1.0 } else { v };
                k[j * n + i] = k[i * n + j];
            }
        }
    }
    Ok(GramMatrix::new(SymMatrix::new(n, k)?, KernelId::Fidelity, BTreeMap::new()))
}

pub fn fidelity_cross(train: &[StateVector], test: &[StateVector]) -> Result<Vec<Vec<f64>>> {
    check_registers(train)?;
    check_registers(test)?;
    if let (Some(a), Some(b)) = (train.first(), test.first()) {
        if a.n_qubits() != b.n_qubits() {
            return Err(Error::Shape("train and test registers differ".into()));
        }
    }
    Ok(cross_from_fn(test.len(), train.len(), |i, j| fidelity(&test[i], &train[j])))
}

/// Per-qubit Pauli expectations `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of one datum.
pub type PauliFeatures = Vec<[f64; 3]>;

fn check_features(features: &[PauliFeatures]) -> Result<()> {
    if let Some(first) = features.first() {
        if features.iter().any(|f| f.len() != first.len()) {
            return Err(Error::Shape("feature rows cover different qubit counts".into()));
        }
    }
    Ok(())
}

fn pauli_sq_dist(a: &PauliFeatures, b: &PauliFeatures) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>())
        .sum()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("γ must be finite and non-negative, got {gamma}")));
    }
    Ok(())
}

fn gamma_params(gamma: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([("gamma".to_string(), gamma)])
}

/// `K_ij = exp(−γ Σ_k Σ_P (Tr(Pρ_k(x_i)) − Tr(Pρ_k(x_j)))²)`.
pub fn projected_gaussian_1rdm_gram(features: &[PauliFeatures], gamma: f64) -> Result<GramMatrix> {
    nonempty(features.len())?;
    check_features(features)?;
    check_gamma(gamma)?;
    let base = gram_from_fn(features.len(), |i, j| {
        if i == j {
            1.0
        } else {
            (-gamma * pauli_sq_dist(&features[i], &features[j])).exp()
        }
    })?;
    Ok(GramMatrix::new(base, KernelId::ProjectedGaussian, gamma_params(gamma)))
}

pub fn projected_gaussian_cross(train: &[PauliFeatures], test: &[PauliFeatures], gamma: f64) -> Vec<Vec<f64>> {
    cross_from_fn(test.len(), train.len(), |i, j| {
        (-gamma * pauli_sq_dist(&test[i], &train[j])).exp()
    })
}

/// Pauli-form γ equivalent to a Frobenius-form `γ_F` on 1-RDMs:
/// `‖ρ − ρ'‖_F² = ‖Δr‖²/2`, so `γ = γ_F / 2`.
pub fn pauli_gamma_from_frobenius(gamma_frobenius: f64) -> f64 {
    gamma_frobenius / 2.0
}

/// `Σ_k Tr(ρ_k ρ'_k) = Σ_k (1 + r_k·r'_k)/2`.
fn linear_1rdm(a: &PauliFeatures, b: &PauliFeatures) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| 0.5 * (1.0 + p[0] * q[0] + p[1] * q[1] + p[2] * q[2]))
        .sum()
}

/// `Q_l^1` from Pauli features.
pub fn projected_linear_gram(features: &[PauliFeatures]) -> Result<GramMatrix> {
    nonempty(features.len())?;
    check_features(features)?;
    let base = gram_from_fn(features.len(), |i, j| linear_1rdm(&features[i], &features[j]))?;
    Ok(GramMatrix::new(
        base,
        KernelId::ProjectedLinear,
        BTreeMap::from([("order".to_string(), 1.0)]),
    ))
}

pub fn projected_linear_cross(train: &[PauliFeatures], test: &[PauliFeatures]) -> Vec<Vec<f64>> {
    cross_from_fn(test.len(), train.len(), |i, j| linear_1rdm(&test[i], &train[j]))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for q in start..n {
            cur.push(q);
            rec(q + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn trace_product(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    // both Hermitian: Tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij)
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x * y.conj()).re))
        .sum()
}

/// `Q_l^k = Σ_{|S| = k} Tr(ρ_S(x_i) ρ_S(x_j))` from states.
pub fn projected_linear_k_gram(states: &[StateVector], order: usize) -> Result<GramMatrix> {
    nonempty(states.len())?;
    check_registers(states)?;
    let n = states[0].n_qubits();
    if order == 0 || order > MAX_KRDM_ORDER || order > n {
        return Err(Error::InvalidInput(format!("RDM order {order} for {n} qubits")));
    }
    if n > MAX_KRDM_QUBITS {
        return Err(Error::CapacityExceeded {
            what: "qubits for k-RDM kernels",
            got: n,
            limit: MAX_KRDM_QUBITS,
        });
    }
    let sets = subsets(n, order);
    let rdms: Vec<Vec<Vec<Vec<C64>>>> = states
        .par_iter()
        .map(|s| sets.iter().map(|q| rdm(s, q)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let base = gram_from_fn(states.len(), |i, j| {
        rdms[i].iter().zip(&rdms[j]).map(|(a, b)| trace_product(a, b)).sum()
    })?;
    Ok(GramMatrix::new(
        base,
        KernelId::ProjectedLinear,
        BTreeMap::from([("order".to_string(), order as f64)]),
    ))
}

/// `K_ij = Q^∞_γ` estimates, projected onto the PSD cone.
pub fn shadow_gram(sets: &[ShadowSet], gamma: f64) -> Result<GramMatrix> {
    nonempty(sets.len())?;
    check_gamma(gamma)?;
    let n = sets.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| qinf_estimate(&sets[i], &sets[j], gamma))
        .collect::<Result<_>>()?;
    let mut k = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(vals) {
        k[i * n + j] = v;
        k[j * n + i] = v;
    }
    let base = psd_project(&SymMatrix::new(n, k)?)?;
    Ok(GramMatrix::new(base, KernelId::Shadow, gamma_params(gamma)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassicalKernel {
    Linear,
    Rbf { gamma: f64 },
}

impl ClassicalKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ClassicalKernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            ClassicalKernel::Rbf { gamma } => {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                (-gamma * d).exp()
            }
        }
    }

    pub fn id(&self) -> KernelId {
        match self {
            ClassicalKernel::Linear => KernelId::Linear,
            ClassicalKernel::Rbf { .. } => KernelId::Rbf,
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        match self {
            ClassicalKernel::Linear => BTreeMap::new(),
            ClassicalKernel::Rbf { gamma } => gamma_params(*gamma),
        }
    }
}

fn check_rows(x: &[Vec<f64>]) -> Result<()> {
    nonempty(x.len())?;
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::Shape("input rows have different lengths".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite input".into()));
    }
    Ok(())
}

pub fn classical_gram(x: &[Vec<f64>], kernel: ClassicalKernel) -> Result<GramMatrix> {
    check_rows(x)?;
    if let ClassicalKernel::Rbf { gamma } = kernel {
        check_gamma(gamma)?;
    }
    let base = gram_from_fn(x.len(), |i, j| kernel.eval(&x[i], &x[j]))?;
    Ok(GramMatrix::new(base, kernel.id(), kernel.params()))
}

pub fn classical_cross(train: &[Vec<f64>], test: &[Vec<f64>], kernel: ClassicalKernel) -> Vec<Vec<f64>> {
    cross_from_fn(test.len(), train.len(), |i, j| kernel.eval(&test[i], &train[j]))
}

/// `K_ij = (z_i z_j + 1)²`.
pub fn dlog_quadratic_gram(z: &[f64]) -> Result<GramMatrix> {
    nonempty(z.len())?;
    let base = gram_from_fn(z.len(), |i, j| (z[i] * z[j] + 1.0).powi(2))?;
    Ok(GramMatrix::new(base, KernelId::DlogQuadratic, BTreeMap::new()))
}

pub fn dlog_quadratic_cross(train: &[f64], test: &[f64]) -> Vec<Vec<f64>> {
    cross_from_fn(test.len(), train.len(), |i, j| (test[i] * train[j] + 1.0).powi(2))
}

/// One-hot kernel `K_ij = [x_i = x_j]`.
pub fn delta_gram<T: PartialEq + Sync>(x: &[T]) -> Result<GramMatrix> {
    nonempty(x.len())?;
    let base = gram_from_fn(x.len(), |i, j| f64::from(u8::from(x[i] == x[j])))?;
    Ok(GramMatrix::new(base, KernelId::Delta, BTreeMap::new()))
}

pub fn delta_cross<T: PartialEq + Sync>(train: &[T], test: &[T]) -> Vec<Vec<f64>> {
    cross_from_fn(test.len(), train.len(), |i, j| f64::from(u8::from(test[i] == train[j])))
}

/// Rescale to trace `N`; the factor is recorded as the `trace_scale` param.
pub fn normalize_trace(k: &GramMatrix) -> Result<GramMatrix> {
    let trace = k.base.trace();
    if !(trace > 0.0) {
        return Err(Error::InvalidKernel(format!("trace {trace} is not positive")));
    }
    let n = k.n() as f64;
    let mut out = k.clone();
    if !k.normalized || (trace - n).abs() > 1e-12 * n {
        let c = n / trace;
        out.base = k.base.scaled(c);
        out.params.insert("trace_scale".into(), k.trace_scale() * c);
    }
    out.normalized = true;
    Ok(out)
}

/// Population variance over every entry of `rows`.
pub fn pooled_variance(rows: &[Vec<f64>]) -> f64 {
    let count = rows.iter().map(Vec::len).sum::<usize>();
    if count == 0 {
        return 0.0;
    }
    let mean = rows.iter().flatten().sum::<f64>() / count as f64;
    rows.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64
}

/// `scale / (dim · var)` for each scale.
pub fn gamma_grid(scales: &[f64], dim: usize, var: f64) -> Result<Vec<f64>> {
    if !(var > 0.0) || dim == 0 {
        return Err(Error::InvalidInput(format!(
            "cannot scale γ grid with dimension {dim} and variance {var}"
        )));
    }
    Ok(scales.iter().map(|s| s / (dim as f64 * var)).collect())
}

/// RBF γ grid for raw inputs.
pub fn classical_gamma_grid(x: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_rows(x)?;
    gamma_grid(&CLASSICAL_GAMMA_SCALES, x[0].len(), pooled_variance(x))
}

/// Flatten Pauli features into `3n` coordinates per datum.
pub fn flatten_features(features: &[PauliFeatures]) -> Vec<Vec<f64>> {
    features
        .iter()
        .map(|f| f.iter().flat_map(|p| p.iter().copied()).collect())
        .collect()
}

/// γ grid for the projected Gaussian kernel: `n` is the qubit count and the
/// variance is pooled over all Pauli expectations.
pub fn projected_gamma_grid(features: &[PauliFeatures], scales: &[f64]) -> Result<Vec<f64>> {
    nonempty(features.len())?;
    gamma_grid(scales, features[0].len(), pooled_variance(&flatten_features(features)))
}
