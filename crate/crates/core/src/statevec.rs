//! Statevector simulation of the embedding circuits and the QNN label map.
//!
//! Qubit `q` is bit `q` of the basis index (little-endian). A basis string
//! maps to Z-eigenvalues `z_q = +1` for bit 0 and `-1` for bit 1.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

pub type C64 = Complex<f64>;

pub const MAX_QUBITS: usize = 20;
/// Largest subsystem for which [`rdm`] materializes a density matrix.
pub const MAX_RDM_QUBITS: usize = 5;

const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wrap amplitudes; the length must be a power of two and the norm 1.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude vector length {len} is not 2^n with n >= 1"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_capacity(n)?;
        let state = Self { n, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("state has norm {norm}")));
        }
        Ok(state)
    }

    /// Tensor product of single-qubit states, `factors[0]` on qubit 0.
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        let n = factors.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty product state".into()));
        }
        check_capacity(n)?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for (q, f) in factors.iter().enumerate() {
            let mut next = vec![C64::new(0.0, 0.0); amps.len() * 2];
            let (lo, hi) = next.split_at_mut(1 << q);
            for (i, a) in amps.iter().enumerate() {
                lo[i] = a * f[0];
                hi[i] = a * f[1];
            }
            amps = next;
        }
        Ok(Self { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_1q(&mut self, q: usize, u: [[C64; 2]; 2]) {
        assert!(q < self.n, "qubit {q} out of range");
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a = self.amps[i];
                let b = self.amps[i | bit];
                self.amps[i] = u[0][0] * a + u[0][1] * b;
                self.amps[i | bit] = u[1][0] * a + u[1][1] * b;
            }
        }
    }

    /// Hadamard on every qubit (unnormalized butterflies, one final scale).
    pub fn hadamard_all(&mut self) {
        let len = self.amps.len();
        let mut h = 1;
        while h < len {
            for block in (0..len).step_by(2 * h) {
                for i in block..block + h {
                    let a = self.amps[i];
                    let b = self.amps[i + h];
                    self.amps[i] = a + b;
                    self.amps[i + h] = a - b;
                }
            }
            h *= 2;
        }
        let scale = (len as f64).sqrt().recip();
        for a in &mut self.amps {
            *a *= scale;
        }
    }

    /// Multiply amplitude `i` by `exp(i·phase(i))`.
    pub fn apply_phase(&mut self, phase: impl Fn(usize) -> f64) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= C64::from_polar(1.0, phase(i));
        }
    }

    fn apply_heisenberg(&mut self, q: usize, gate: &HeisenbergGate) {
        let b0 = 1 << q;
        let b1 = 1 << (q + 1);
        for i in 0..self.amps.len() {
            if i & (b0 | b1) == 0 {
                let a = self.amps[i | b0];
                let b = self.amps[i | b1];
                self.amps[i | b0] = gate.c * a + gate.s * b;
                self.amps[i | b1] = gate.s * a + gate.c * b;
                self.amps[i] *= gate.d;
                self.amps[i | b0 | b1] *= gate.d;
            }
        }
    }

    /// `⟨Z_q⟩`.
    pub fn expect_z(&self, q: usize) -> f64 {
        let bit = 1 << q;
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }
}

fn check_capacity(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("register must have at least one qubit".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::CapacityExceeded {
            what: "qubits",
            got: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

/// `exp(−iθ(XX+YY+ZZ))` on a neighbouring pair.
///
/// `XX+YY+ZZ = 2·SWAP − I`, so the gate is `e^{iθ}(cos 2θ·I − i sin 2θ·SWAP)`:
/// phase `e^{−iθ}` on |00⟩ and |11⟩, a rotation on span{|01⟩, |10⟩}.
#[derive(Clone, Copy, Debug)]
struct HeisenbergGate {
    d: C64,
    c: C64,
    s: C64,
}

impl HeisenbergGate {
    fn new(theta: f64) -> Self {
        let g = C64::from_polar(1.0, theta);
        let (sin2, cos2) = (2.0 * theta).sin_cos();
        Self {
            d: C64::from_polar(1.0, -theta),
            c: g * cos2,
            s: g * C64::new(0.0, -sin2),
        }
    }
}

/// Apply `steps` Trotter steps of the open Heisenberg chain with per-bond
/// couplings; bond `j` couples qubits `j` and `j+1` and bonds are applied in
/// increasing order within each step.
fn trotter_chain(state: &mut StateVector, couplings: &[f64], time: f64, steps: usize) {
    let dt = time / steps as f64;
    let gates: Vec<HeisenbergGate> = couplings.iter().map(|&j| HeisenbergGate::new(dt * j)).collect();
    for _ in 0..steps {
        for (bond, gate) in gates.iter().enumerate() {
            state.apply_heisenberg(bond, gate);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    E1,
    E2,
    E3,
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Embedding::E1 => "e1",
            Embedding::E2 => "e2",
            Embedding::E3 => "e3",
        })
    }
}

impl FromStr for Embedding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(Embedding::E1),
            "e2" => Ok(Embedding::E2),
            "e3" => Ok(Embedding::E3),
            other => Err(Error::InvalidInput(format!("unknown embedding '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub scheme: Embedding,
    pub n: usize,
    pub e3_trotter_steps: usize,
    pub e3_time: f64,
    pub e3_haar_seed: u64,
}

impl EmbeddingSpec {
    /// Defaults: 20 Trotter steps, evolution time n/3.
    pub fn new(scheme: Embedding, n: usize, seed: u64) -> Self {
        Self {
            scheme,
            n,
            e3_trotter_steps: 20,
            e3_time: n as f64 / 3.0,
            e3_haar_seed: seed,
        }
    }

    pub fn register_size(&self) -> usize {
        match self.scheme {
            Embedding::E1 | Embedding::E2 => self.n,
            Embedding::E3 => self.n + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_capacity(self.register_size())?;
        if self.n == 0 {
            return Err(Error::InvalidInput("input dimension must be positive".into()));
        }
        if self.scheme == Embedding::E3 && self.e3_trotter_steps == 0 {
            return Err(Error::InvalidInput("Trotter steps must be positive".into()));
        }
        if !self.e3_time.is_finite() {
            return Err(Error::InvalidInput("evolution time must be finite".into()));
        }
        Ok(())
    }

    pub fn embed(&self, x: &[f64]) -> Result<StateVector> {
        if x.len() != self.n {
            return Err(Error::Shape(format!(
                "input has {} coordinates, embedding expects {}",
                x.len(),
                self.n
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite input coordinate".into()));
        }
        match self.scheme {
            Embedding::E1 => embed_e1(x),
            Embedding::E2 => embed_e2(x),
            Embedding::E3 => embed_e3(x, self),
        }
    }

    /// Embed every row; order of the output follows `rows`.
    pub fn embed_all(&self, rows: &[Vec<f64>]) -> Result<Vec<StateVector>> {
        self.validate()?;
        rows.par_iter().map(|x| self.embed(x)).collect()
    }
}

/// `⊗_j exp(−i X_j x_j)|0ⁿ⟩`.
pub fn embed_e1(x: &[f64]) -> Result<StateVector> {
    let factors: Vec<[C64; 2]> = x
        .iter()
        .map(|&v| [C64::new(v.cos(), 0.0), C64::new(0.0, -v.sin())])
        .collect();
    StateVector::product(&factors)
}

/// Computational-basis encoding `⊗_j exp(i X_j x_j / 2)|0ⁿ⟩`; `x_j = π`
/// flips qubit `j` (up to phase `i`).
pub fn embed_basis(x: &[f64]) -> Result<StateVector> {
    let half: Vec<f64> = x.iter().map(|v| -0.5 * v).collect();
    embed_e1(&half)
}

/// `U_Z H U_Z H|0ⁿ⟩` with `U_Z = exp(i(Σ_j x_j z_j + Σ_{j,j'} x_j x_j' z_j z_j'))`.
pub fn embed_e2(x: &[f64]) -> Result<StateVector> {
    let mut state = StateVector::zero(x.len())?;
    // the double sum including j = j' is the square of the single sum
    let phase = |i: usize| {
        let s: f64 = x
            .iter()
            .enumerate()
            .map(|(j, v)| if i >> j & 1 == 0 { *v } else { -*v })
            .sum();
        s + s * s
    };
    state.hadamard_all();
    state.apply_phase(phase);
    state.hadamard_all();
    state.apply_phase(phase);
    Ok(state)
}

/// Trotterized Heisenberg evolution with couplings `x` on `n+1` qubits,
/// starting from the Haar product state fixed by `spec.e3_haar_seed`.
pub fn embed_e3(x: &[f64], spec: &EmbeddingSpec) -> Result<StateVector> {
    let register = x.len() + 1;
    check_capacity(register)?;
    let mut state = e3_initial_state(register, spec.e3_haar_seed)?;
    trotter_chain(&mut state, x, spec.e3_time, spec.e3_trotter_steps.max(1));
    Ok(state)
}

/// The fixed product of Haar-random qubits used as the E3 input state.
pub fn e3_initial_state(register: usize, seed: u64) -> Result<StateVector> {
    let mut rng = rng::stream(seed, "e3-haar", 0);
    let factors: Vec<[C64; 2]> = (0..register).map(|_| haar_pair(&mut rng)).collect();
    StateVector::product(&factors)
}

fn haar_pair(rng: &mut Rng) -> [C64; 2] {
    let mut draw = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let a = draw();
    let b = draw();
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    [a / norm, b / norm]
}

/// Haar-random single-qubit state (normalized complex Gaussian pair).
pub fn haar_qubit(rng: &mut Rng) -> StateVector {
    let [a, b] = haar_pair(rng);
    StateVector { n: 1, amps: vec![a, b] }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnnSpec {
    /// One coupling per chain bond; bond `j` joins qubits `j` and `j+1`.
    pub couplings: Vec<f64>,
    pub trotter_steps: usize,
    pub time: f64,
    pub coupling_seed: u64,
}

impl QnnSpec {
    /// Standard normal couplings for a `register`-qubit chain, `T = t = 10`.
    pub fn random(register: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "qnn-couplings", 0);
        let couplings = (0..register.saturating_sub(1))
            .map(|_| rng.sample(StandardNormal))
            .collect();
        Self {
            couplings,
            trotter_steps: 10,
            time: 10.0,
            coupling_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trotter_steps == 0 {
            return Err(Error::InvalidInput("QNN needs at least one Trotter step".into()));
        }
        if self.couplings.iter().any(|j| !j.is_finite()) || !self.time.is_finite() {
            return Err(Error::InvalidInput("non-finite QNN parameter".into()));
        }
        Ok(())
    }
}

/// `Tr(Z_0 U ρ U†)` for the QNN evolution `U`.
pub fn qnn_expectation(state: &StateVector, qnn: &QnnSpec) -> Result<f64> {
    qnn.validate()?;
    if qnn.couplings.len() + 1 != state.n_qubits() {
        return Err(Error::Shape(format!(
            "QNN has {} bonds, register has {} qubits",
            qnn.couplings.len(),
            state.n_qubits()
        )));
    }
    let mut evolved = state.clone();
    trotter_chain(&mut evolved, &qnn.couplings, qnn.time, qnn.trotter_steps);
    Ok(evolved.expect_z(0))
}

/// `⟨a|b⟩`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.n != b.n {
        return Err(Error::Shape(format!(
            "registers differ: {} vs {} qubits",
            a.n, b.n
        )));
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// Reduced density matrix on `qubits`; `qubits[0]` is the least significant
/// bit of the row index.
pub fn rdm(state: &StateVector, qubits: &[usize]) -> Result<Vec<Vec<C64>>> {
    let k = qubits.len();
    if k > MAX_RDM_QUBITS {
        return Err(Error::CapacityExceeded {
            what: "rdm qubits",
            got: k,
            limit: MAX_RDM_QUBITS,
        });
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= state.n {
            return Err(Error::InvalidInput(format!(
                "qubit {q} out of range for {} qubits",
                state.n
            )));
        }
        if qubits[..i].contains(&q) {
            return Err(Error::InvalidInput(format!("qubit {q} listed twice")));
        }
    }
    let dim = 1 << k;
    let mask: usize = qubits.iter().map(|q| 1 << q).sum();
    let deposit = |r: usize| -> usize {
        qubits
            .iter()
            .enumerate()
            .map(|(b, q)| ((r >> b) & 1) << q)
            .sum()
    };
    let offsets: Vec<usize> = (0..dim).map(deposit).collect();
    let mut rho = vec![vec![C64::new(0.0, 0.0); dim]; dim];
    for rest in 0..state.amps.len() {
        if rest & mask != 0 {
            continue;
        }
        for (r, &or) in offsets.iter().enumerate() {
            let a = state.amps[rest | or];
            for (c, &oc) in offsets.iter().enumerate() {
                rho[r][c] += a * state.amps[rest | oc].conj();
            }
        }
    }
    Ok(rho)
}

/// `(⟨X_k⟩, ⟨Y_k⟩, ⟨Z_k⟩)` for every qubit `k`.
pub fn pauli_expectations_1rdm(state: &StateVector) -> Vec<[f64; 3]> {
    (0..state.n)
        .map(|q| {
            let bit = 1 << q;
            let mut c = C64::new(0.0, 0.0);
            let mut z = 0.0;
            for i in 0..state.amps.len() {
                if i & bit == 0 {
                    let a0 = state.amps[i];
                    let a1 = state.amps[i | bit];
                    c += a0 * a1.conj();
                    z += a0.norm_sqr() - a1.norm_sqr();
                }
            }
            [2.0 * c.re, -2.0 * c.im, z]
        })
        .collect()
}
