//! Classical shadows from random single-qubit Pauli measurements, the
//! RDM estimator built from them, and the all-orders kernel `Q^∞_γ`.
//!
//! A measured qubit is summarised by a code `2·basis + bit` in `0..6`, where
//! `bit = 1` means outcome −1. Two records agree on a qubit exactly when the
//! codes are equal, so the kernel term for a pair of records depends only on
//! the number of agreeing qubits `m`:
//! `exp((γ/n)·Σ_q (9·δ − 4)) = exp((γ/n)·(9m − 4n))`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use rand::seq::IndexedRandom as _;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::statevec::{StateVector, C64};

/// Largest register for the exact enumerations (`6^n` configurations).
pub const MAX_EXACT_QUBITS: usize = 4;
pub const MAX_SHADOW_RDM_QUBITS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Basis> {
        Basis::ALL.get(c as usize).copied()
    }

    /// Unitary mapping the +1 eigenvector of this Pauli to |0⟩.
    fn rotation(self) -> [[C64; 2]; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        match self {
            Basis::X => [[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]],
            // H·S†
            Basis::Y => [[C64::new(h, 0.0), C64::new(0.0, -h)], [C64::new(h, 0.0), C64::new(0.0, h)]],
            Basis::Z => [[C64::new(1.0, 0.0), z], [z, C64::new(1.0, 0.0)]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowRecord {
    pub bases: Vec<Basis>,
    /// ±1 per qubit.
    pub outcomes: Vec<i8>,
}

impl ShadowRecord {
    fn packed(&self) -> u64 {
        self.bases
            .iter()
            .zip(&self.outcomes)
            .enumerate()
            .map(|(q, (b, s))| (code(*b, *s) as u64) << (3 * q))
            .sum()
    }
}

fn code(b: Basis, s: i8) -> u8 {
    2 * b.code() + u8::from(s < 0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSet {
    n: usize,
    records: Vec<ShadowRecord>,
    source_seed: u64,
}

impl ShadowSet {
    pub fn new(n: usize, records: Vec<ShadowRecord>, source_seed: u64) -> Result<Self> {
        if n == 0 || n > crate::statevec::MAX_QUBITS {
            return Err(Error::InvalidInput(format!("shadow register of {n} qubits")));
        }
        if records.is_empty() {
            return Err(Error::InvalidInput("shadow set has no records".into()));
        }
        for (r, rec) in records.iter().enumerate() {
            if rec.bases.len() != n || rec.outcomes.len() != n {
                return Err(Error::Shape(format!("record {r} does not cover {n} qubits")));
            }
            if rec.outcomes.iter().any(|s| *s != 1 && *s != -1) {
                return Err(Error::InvalidInput(format!("record {r} has an outcome other than ±1")));
            }
        }
        Ok(Self { n, records, source_seed })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn records(&self) -> &[ShadowRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn source_seed(&self) -> u64 {
        self.source_seed
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!("# seed={}\nrecord", self.source_seed);
        for q in 0..self.n {
            write!(out, ",b_{q}").unwrap();
        }
        for q in 0..self.n {
            write!(out, ",s_{q}").unwrap();
        }
        out.push('\n');
        for (r, rec) in self.records.iter().enumerate() {
            write!(out, "{r}").unwrap();
            for b in &rec.bases {
                write!(out, ",{}", b.code()).unwrap();
            }
            for s in &rec.outcomes {
                write!(out, ",{s}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let bad = |m: String| Error::format(path, m);
        let (first, body) = text.split_once('\n').ok_or_else(|| bad("empty file".into()))?;
        let seed = first
            .strip_prefix("# seed=")
            .and_then(|s| s.trim().parse::<u64>().ok())
            .ok_or_else(|| bad("missing '# seed=' line".into()))?;
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.len() < 3 || header.len() % 2 == 0 || &header[0] != "record" {
            return Err(bad("header must be record,b_0..,s_0..".into()));
        }
        let n = (header.len() - 1) / 2;
        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| bad(e.to_string()))?;
            let field = |i: usize| -> Result<i64> {
                row.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| bad(format!("row {line}: bad field {i}")))
            };
            let mut bases = Vec::with_capacity(n);
            let mut outcomes = Vec::with_capacity(n);
            for q in 0..n {
                let b = u8::try_from(field(1 + q)?)
                    .ok()
                    .and_then(Basis::from_code)
                    .ok_or_else(|| bad(format!("row {line}: basis code out of range")))?;
                bases.push(b);
                let s = field(1 + n + q)?;
                if s != 1 && s != -1 {
                    return Err(bad(format!("row {line}: outcome {s}")));
                }
                outcomes.push(s as i8);
            }
            records.push(ShadowRecord { bases, outcomes });
        }
        Self::new(n, records, seed).map_err(|e| bad(e.to_string()))
    }
}

fn rotated(state: &StateVector, bases: &[Basis]) -> StateVector {
    let mut s = state.clone();
    for (q, b) in bases.iter().enumerate() {
        if *b != Basis::Z {
            s.apply_1q(q, b.rotation());
        }
    }
    s
}

fn outcomes_of(index: usize, n: usize) -> Vec<i8> {
    (0..n).map(|q| if index >> q & 1 == 0 { 1 } else { -1 }).collect()
}

/// Draw `n_s` records: uniform random bases, Born-rule outcomes.
pub fn collect(state: &StateVector, n_s: usize, rng: &mut Rng, source_seed: u64) -> Result<ShadowSet> {
    if n_s < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 shadow records, got {n_s}")));
    }
    let n = state.n_qubits();
    let mut records = Vec::with_capacity(n_s);
    for _ in 0..n_s {
        let bases: Vec<Basis> = (0..n).map(|_| *Basis::ALL.choose(rng).unwrap()).collect();
        let probs = rotated(state, &bases);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = probs.amps().len() - 1;
        for (i, a) in probs.amps().iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                pick = i;
                break;
            }
        }
        records.push(ShadowRecord {
            bases,
            outcomes: outcomes_of(pick, n),
        });
    }
    ShadowSet::new(n, records, source_seed)
}

/// Every (bases, outcomes) pair with its probability `3^{-n}·Born`.
pub fn measurement_distribution(state: &StateVector) -> Result<Vec<(f64, ShadowRecord)>> {
    let n = state.n_qubits();
    if n > MAX_EXACT_QUBITS {
        return Err(Error::CapacityExceeded {
            what: "qubits for exact shadow enumeration",
            got: n,
            limit: MAX_EXACT_QUBITS,
        });
    }
    let basis_weight = 3f64.powi(n as i32).recip();
    let mut out = Vec::new();
    for cfg in 0..3usize.pow(n as u32) {
        let bases: Vec<Basis> = (0..n)
            .map(|q| Basis::ALL[cfg / 3usize.pow(q as u32) % 3])
            .collect();
        let rot = rotated(state, &bases);
        for (i, a) in rot.amps().iter().enumerate() {
            out.push((
                basis_weight * a.norm_sqr(),
                ShadowRecord {
                    bases: bases.clone(),
                    outcomes: outcomes_of(i, n),
                },
            ));
        }
    }
    Ok(out)
}

/// Weighted mean of `⊗_r (3|s,b⟩⟨s,b| − I)` over `records`; `qubits[0]` is
/// the least significant bit of the row index.
pub fn shadow_rdm_weighted<'a>(
    records: impl IntoIterator<Item = (f64, &'a ShadowRecord)>,
    n: usize,
    qubits: &[usize],
) -> Result<Vec<Vec<C64>>> {
    let k = qubits.len();
    if k > MAX_SHADOW_RDM_QUBITS {
        return Err(Error::CapacityExceeded {
            what: "shadow rdm qubits",
            got: k,
            limit: MAX_SHADOW_RDM_QUBITS,
        });
    }
    if let Some(q) = qubits.iter().find(|&&q| q >= n) {
        return Err(Error::InvalidInput(format!("qubit {q} out of range for {n} qubits")));
    }
    let dim = 1 << k;
    let mut rho = vec![vec![C64::new(0.0, 0.0); dim]; dim];
    for (w, rec) in records {
        let mut snap = vec![vec![C64::new(1.0, 0.0)]];
        for &q in qubits.iter().rev() {
            let f = snapshot(rec.bases[q], rec.outcomes[q]);
            snap = kron(&snap, &f);
        }
        for i in 0..dim {
            for j in 0..dim {
                rho[i][j] += snap[i][j] * w;
            }
        }
    }
    Ok(rho)
}

/// `(I + 3sP)/2`.
fn snapshot(b: Basis, s: i8) -> Vec<Vec<C64>> {
    let t = 1.5 * f64::from(s);
    let r = |re: f64, im: f64| C64::new(re, im);
    match b {
        Basis::X => vec![vec![r(0.5, 0.0), r(t, 0.0)], vec![r(t, 0.0), r(0.5, 0.0)]],
        Basis::Y => vec![vec![r(0.5, 0.0), r(0.0, -t)], vec![r(0.0, t), r(0.5, 0.0)]],
        Basis::Z => vec![vec![r(0.5 + t, 0.0), r(0.0, 0.0)], vec![r(0.0, 0.0), r(0.5 - t, 0.0)]],
    }
}

fn kron(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let (da, db) = (a.len(), b.len());
    let mut out = vec![vec![C64::new(0.0, 0.0); da * db]; da * db];
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[i * db + k][j * db + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Empirical RDM estimate from a shadow set.
pub fn shadow_rdm(shadows: &ShadowSet, qubits: &[usize]) -> Result<Vec<Vec<C64>>> {
    let w = 1.0 / shadows.len() as f64;
    shadow_rdm_weighted(shadows.records.iter().map(|r| (w, r)), shadows.n, qubits)
}

/// `exp((γ/n)(9m − 4n))` for `m = 0..=n` agreeing qubits.
fn term_table(n: usize, gamma: f64) -> Vec<f64> {
    let scale = gamma / n as f64;
    (0..=n)
        .map(|m| (scale * (9.0 * m as f64 - 4.0 * n as f64)).exp())
        .collect()
}

fn matches(a: u64, b: u64, n: usize) -> usize {
    let x = a ^ b;
    let low = 0x1249_2492_4924_9249u64 & ((1u64 << (3 * n)) - 1);
    let differ = (x | x >> 1 | x >> 2) & low;
    n - differ.count_ones() as usize
}

/// Pair counts by number of agreeing qubits over ordered pairs `(r1, r2)`
/// with `r1 ≠ r2` (positions), `r1` from `a` and `r2` from `b`.
fn match_counts(a: &[u64], b: &[u64], n: usize) -> Vec<u64> {
    let histogram = |codes: &[u64]| {
        let mut h = BTreeMap::new();
        for c in codes {
            *h.entry(*c).or_insert(0u64) += 1;
        }
        h
    };
    let (ha, hb) = (histogram(a), histogram(b));
    let mut counts = vec![0u64; n + 1];
    for (ca, na) in &ha {
        for (cb, nb) in &hb {
            counts[matches(*ca, *cb, n)] += na * nb;
        }
    }
    for (ca, cb) in a.iter().zip(b) {
        counts[matches(*ca, *cb, n)] -= 1;
    }
    counts
}

fn estimate_from_codes(a: &[u64], b: &[u64], n: usize, gamma: f64) -> f64 {
    let counts = match_counts(a, b, n);
    let table = term_table(n, gamma);
    let total: f64 = counts.iter().zip(&table).map(|(c, t)| *c as f64 * t).sum();
    let pairs = a.len() * b.len() - a.len().min(b.len());
    total / pairs as f64
}

fn check_pair(a: &ShadowSet, b: &ShadowSet) -> Result<()> {
    if a.n != b.n {
        return Err(Error::Shape(format!(
            "shadow sets cover {} and {} qubits",
            a.n, b.n
        )));
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput("U-statistic needs at least 2 records per set".into()));
    }
    Ok(())
}

/// U-statistic estimate of `Q^∞_γ` between the states behind `a` and `b`.
pub fn qinf_estimate(a: &ShadowSet, b: &ShadowSet, gamma: f64) -> Result<f64> {
    check_pair(a, b)?;
    let ca: Vec<u64> = a.records.iter().map(ShadowRecord::packed).collect();
    let cb: Vec<u64> = b.records.iter().map(ShadowRecord::packed).collect();
    Ok(estimate_from_codes(&ca, &cb, a.n, gamma))
}

/// Bootstrap standard error of [`qinf_estimate`], resampling both sets
/// independently with replacement.
pub fn qinf_bootstrap_se(
    a: &ShadowSet,
    b: &ShadowSet,
    gamma: f64,
    resamples: usize,
    rng: &mut Rng,
) -> Result<f64> {
    check_pair(a, b)?;
    if resamples < 2 {
        return Err(Error::InvalidInput("bootstrap needs at least 2 resamples".into()));
    }
    let ca: Vec<u64> = a.records.iter().map(ShadowRecord::packed).collect();
    let cb: Vec<u64> = b.records.iter().map(ShadowRecord::packed).collect();
    let mut draws = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let ra: Vec<u64> = (0..ca.len()).map(|_| ca[rng.random_range(0..ca.len())]).collect();
        let rb: Vec<u64> = (0..cb.len()).map(|_| cb[rng.random_range(0..cb.len())]).collect();
        draws.push(estimate_from_codes(&ra, &rb, a.n, gamma));
    }
    let mean = draws.iter().sum::<f64>() / resamples as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

fn code_distribution(state: &StateVector) -> Result<Vec<(u64, f64)>> {
    Ok(measurement_distribution(state)?
        .into_iter()
        .filter(|(p, _)| *p > 0.0)
        .map(|(p, r)| (r.packed(), p))
        .collect())
}

/// Exact `Q^∞_γ` by enumerating both measurement distributions.
pub fn qinf_exact(a: &StateVector, b: &StateVector, gamma: f64) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Shape(format!(
            "states have {} and {} qubits",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    let n = a.n_qubits();
    let (da, db) = (code_distribution(a)?, code_distribution(b)?);
    let table = term_table(n, gamma);
    let mut total = 0.0;
    for (ca, pa) in &da {
        for (cb, pb) in &db {
            total += pa * pb * table[matches(*ca, *cb, n)];
        }
    }
    Ok(total)
}

/// Exact moments `E[(Σ_q (9δ_q − 4))^k]` for `k = 0..=order`.
pub fn q_moments_exact(a: &StateVector, b: &StateVector, order: usize) -> Result<Vec<f64>> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Shape("register mismatch".into()));
    }
    let n = a.n_qubits();
    let (da, db) = (code_distribution(a)?, code_distribution(b)?);
    let mut moments = vec![0.0; order + 1];
    for (ca, pa) in &da {
        for (cb, pb) in &db {
            let x = 9.0 * matches(*ca, *cb, n) as f64 - 4.0 * n as f64;
            let mut pow = 1.0;
            for m in moments.iter_mut() {
                *m += pa * pb * pow;
                pow *= x;
            }
        }
    }
    Ok(moments)
}
