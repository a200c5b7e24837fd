//! Labels that saturate the geometric inequality between a reference kernel
//! `K_Q` and a classical learner `K_C`.
//!
//! With `M(λ) = √K_Q √K_C (K_C+λI)⁻² √K_C √K_Q` and `v` its top unit
//! eigenvector, `y = √K_Q v` has `s_Q = 1` and `s_C^λ = ‖M(λ)‖ = g_gen²`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{spectrum, PairSweep};
use crate::kernels::GramMatrix;
use crate::linalg::{sym_eig, DEFAULT_RCOND};
use crate::rng::Rng;

pub const DEFAULT_S_TRA_CAP: f64 = 0.002;
pub const DEFAULT_NOISE_P: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinarizeMode {
    Median,
    SignNoise,
}

impl fmt::Display for BinarizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinarizeMode::Median => "median",
            BinarizeMode::SignNoise => "sign_noise",
        })
    }
}

impl FromStr for BinarizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(BinarizeMode::Median),
            "sign_noise" | "sign-noise" => Ok(BinarizeMode::SignNoise),
            other => Err(Error::InvalidInput(format!("unknown binarize mode '{other}'"))),
        }
    }
}

/// Real-valued engineered targets and how they were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Engineered {
    pub y_real: Vec<f64>,
    /// Unit eigenvector with `y_real = √K_Q v`.
    pub v: Vec<f64>,
    pub lambda_used: f64,
    pub g_gen_achieved: f64,
    /// `λ²‖√K_Q (K_C+λI)⁻² √K_Q‖`, the training-error bound at `s_Q = 1`.
    pub s_tra: f64,
    /// False when no grid λ met the cap; the λ with the smallest bound is
    /// reported instead.
    pub cap_satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineeredLabels {
    #[serde(flatten)]
    pub engineered: Engineered,
    pub y_class: Vec<f64>,
    pub mode: BinarizeMode,
    pub noise_p: f64,
    pub noise_seed: u64,
}

/// Top eigenvector of `M`, largest-magnitude component positive.
fn top_eigenvector(m: &crate::linalg::SymMatrix) -> Result<(f64, Vec<f64>)> {
    let eig = sym_eig(m)?;
    Ok((eig.lambda_max(), eig.column(0)))
}

/// Engineer real labels against one classical kernel.
pub fn engineer_labels(k_c: &GramMatrix, k_q: &GramMatrix, lambda_grid: &[f64], s_tra_cap: f64) -> Result<Engineered> {
    if k_c.n() != k_q.n() {
        return Err(Error::Shape(format!("Gram matrices have {} and {} points", k_c.n(), k_q.n())));
    }
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("λ grid is empty".into()));
    }
    if let Some(l) = lambda_grid.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("invalid λ {l}")));
    }
    // truncated at the same cut-off as the pseudo-inverse in s_Q, so y stays
    // inside the range of K_Q and s_Q = ‖v‖² = 1
    let root = spectrum(k_q)?.sqrt_truncated(DEFAULT_RCOND);
    let sweep = PairSweep::with_source_root(&root, k_c)?;

    let mut evals = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let m = sweep.gen_matrix(lambda);
        let (top, v) = top_eigenvector(&m)?;
        evals.push((lambda, top.max(0.0).sqrt(), sweep.tra_norm(lambda), v));
    }
    let admissible = evals
        .iter()
        .filter(|e| e.2 <= s_tra_cap)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let (pick, cap_satisfied) = match admissible {
        Some(e) => (e, true),
        None => (
            evals
                .iter()
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .expect("non-empty grid"),
            false,
        ),
    };
    let (lambda, g, s_tra, v) = pick;
    Ok(Engineered {
        y_real: root.mul_vec(v),
        v: v.clone(),
        lambda_used: *lambda,
        g_gen_achieved: *g,
        s_tra: *s_tra,
        cap_satisfied,
    })
}

/// Engineer against each suite member and keep the one with the smallest
/// achieved `g_gen` (the strongest adversary). Returns its index.
pub fn engineer_against_suite(
    k_q: &GramMatrix,
    suite: &[GramMatrix],
    lambda_grid: &[f64],
    s_tra_cap: f64,
) -> Result<(usize, Engineered)> {
    if suite.is_empty() {
        return Err(Error::InvalidInput("classical kernel suite is empty".into()));
    }
    let mut best: Option<(usize, Engineered)> = None;
    for (i, k_c) in suite.iter().enumerate() {
        let e = engineer_labels(k_c, k_q, lambda_grid, s_tra_cap)?;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                (e.cap_satisfied && !b.cap_satisfied)
                    || (e.cap_satisfied == b.cap_satisfied && e.g_gen_achieved < b.g_gen_achieved)
            }
        };
        if better {
            best = Some((i, e));
        }
    }
    Ok(best.expect("suite is non-empty"))
}

fn median(y: &[f64]) -> f64 {
    let mut s = y.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// ±1 labels: above the median, or the sign kept with probability
/// `1 − noise_p` and otherwise replaced by a fair coin.
pub fn binarize(y_real: &[f64], mode: BinarizeMode, noise_p: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    if y_real.is_empty() {
        return Err(Error::InvalidInput("no values to binarize".into()));
    }
    if !(0.0..=1.0).contains(&noise_p) {
        return Err(Error::InvalidInput(format!("noise probability {noise_p} outside [0, 1]")));
    }
    let sign = |v: f64, t: f64| if v > t { 1.0 } else { -1.0 };
    Ok(match mode {
        BinarizeMode::Median => {
            let m = median(y_real);
            y_real.iter().map(|&v| sign(v, m)).collect()
        }
        BinarizeMode::SignNoise => y_real
            .iter()
            .map(|&v| {
                if rng.random::<f64>() < noise_p {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    sign(v, 0.0)
                }
            })
            .collect(),
    })
}

/// Engineer, then binarize with a stream derived from `noise_seed`.
pub fn engineer_dataset_labels(
    k_c: &GramMatrix,
    k_q: &GramMatrix,
    lambda_grid: &[f64],
    s_tra_cap: f64,
    mode: BinarizeMode,
    noise_p: f64,
    noise_seed: u64,
) -> Result<EngineeredLabels> {
    let engineered = engineer_labels(k_c, k_q, lambda_grid, s_tra_cap)?;
    let mut rng = crate::rng::stream(noise_seed, "binarize", 0);
    let y_class = binarize(&engineered.y_real, mode, noise_p, &mut rng)?;
    Ok(EngineeredLabels {
        engineered,
        y_class,
        mode,
        noise_p,
        noise_seed,
    })
}
