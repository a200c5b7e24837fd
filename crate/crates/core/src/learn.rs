//! Dual-form kernel ridge regression, a dual kernel perceptron, metrics and
//! cross-validated grid search over precomputed Gram matrices.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelId};
use crate::linalg::reg_solve;

/// Regularization grid in `C` form; ridge uses `λ = 1/C`.
pub const C_GRID: [f64; 18] = [
    0.006, 0.015, 0.03, 0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0,
];
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_TRAIN: usize = 600;
pub const DEFAULT_TEST: usize = 200;

pub fn lambda_grid_from_c(c: &[f64]) -> Vec<f64> {
    c.iter().map(|c| 1.0 / c).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ridge,
    Perceptron,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub method: Method,
    /// Dual coefficients; predictions are `Σ_i k(x_i, x)·α_i`.
    pub alpha: Vec<f64>,
    pub lambda: f64,
    pub kernel: KernelId,
    pub params: BTreeMap<String, f64>,
    /// Scale applied to the training Gram matrix; raw cross-kernel values
    /// are multiplied by it before use.
    pub trace_scale: f64,
    pub used_pinv: bool,
    /// Perceptron epochs run (0 for ridge).
    pub epochs: usize,
    pub converged: bool,
}

impl TrainedModel {
    pub fn n_train(&self) -> usize {
        self.alpha.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

fn check_targets(k: &GramMatrix, y: &[f64]) -> Result<()> {
    if y.len() != k.n() {
        return Err(Error::Shape(format!("{} targets for {} training points", y.len(), k.n())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite target".into()));
    }
    Ok(())
}

/// `α = (K+λI)⁻¹y`, pseudo-inverse at λ = 0 when `K` is singular.
pub fn fit(k: &GramMatrix, y: &[f64], lambda: f64) -> Result<TrainedModel> {
    check_targets(k, y)?;
    let sol = reg_solve(&k.base, lambda, y)?;
    Ok(TrainedModel {
        method: Method::Ridge,
        alpha: sol.x,
        lambda,
        kernel: k.kernel,
        params: k.params.clone(),
        trace_scale: k.trace_scale(),
        used_pinv: sol.used_pinv,
        epochs: 0,
        converged: true,
    })
}

/// Dual kernel perceptron on ±1 labels: sweep the training set in order and
/// add `y_i` to `α_i` on every non-positive margin, until an epoch passes
/// without mistakes or `max_epochs` is reached.
pub fn fit_perceptron(k: &GramMatrix, y: &[f64], max_epochs: usize) -> Result<TrainedModel> {
    check_targets(k, y)?;
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::InvalidInput("perceptron labels must be ±1".into()));
    }
    let n = k.n();
    let mut alpha = vec![0.0; n];
    // running scores f(x_i) = Σ_j K_ij α_j, updated per mistake in O(N)
    let mut score = vec![0.0; n];
    let mut epochs = 0;
    let mut converged = false;
    while epochs < max_epochs {
        epochs += 1;
        let mut mistakes = 0;
        for i in 0..n {
            if y[i] * score[i] <= 0.0 {
                mistakes += 1;
                alpha[i] += y[i];
                for (j, s) in score.iter_mut().enumerate() {
                    *s += y[i] * k.get(j, i);
                }
            }
        }
        if mistakes == 0 {
            converged = true;
            break;
        }
    }
    Ok(TrainedModel {
        method: Method::Perceptron,
        alpha,
        lambda: 0.0,
        kernel: k.kernel,
        params: k.params.clone(),
        trace_scale: k.trace_scale(),
        used_pinv: false,
        epochs,
        converged,
    })
}

/// Unclamped `Σ_i k(x_i, x)·α_i` for each row of raw cross-kernel values.
pub fn predict_raw(model: &TrainedModel, cross: &[Vec<f64>]) -> Result<Vec<f64>> {
    cross
        .iter()
        .map(|row| {
            if row.len() != model.n_train() {
                return Err(Error::Shape(format!(
                    "cross-kernel row has {} entries, model has {} training points",
                    row.len(),
                    model.n_train()
                )));
            }
            Ok(model.trace_scale * row.iter().zip(&model.alpha).map(|(k, a)| k * a).sum::<f64>())
        })
        .collect()
}

/// Predictions clamped to `[−1, 1]`.
pub fn predict(model: &TrainedModel, cross: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(predict_raw(model, cross)?.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}

/// Training-set predictions (cross kernel = the training Gram itself).
pub fn predict_train_raw(model: &TrainedModel, k: &GramMatrix) -> Result<Vec<f64>> {
    if k.n() != model.n_train() {
        return Err(Error::Shape("Gram matrix does not match the model".into()));
    }
    Ok(k.base.mul_vec(&model.alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "metric", content = "value")]
pub enum Metric {
    Mae(f64),
    Accuracy(f64),
}

impl Metric {
    pub fn value(&self) -> f64 {
        match self {
            Metric::Mae(v) | Metric::Accuracy(v) => *v,
        }
    }

    /// Smaller is better.
    pub fn loss(&self) -> f64 {
        match self {
            Metric::Mae(v) => *v,
            Metric::Accuracy(v) => 1.0 - v,
        }
    }
}

/// Mean absolute error, or sign-readout accuracy where a prediction of
/// exactly zero counts as half correct (an uninformed tie).
pub fn evaluate(predictions: &[f64], targets: &[f64], task: Task) -> Result<Metric> {
    if predictions.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput("nothing to evaluate".into()));
    }
    let n = predictions.len() as f64;
    Ok(match task {
        Task::Regression => Metric::Mae(predictions.iter().zip(targets).map(|(p, t)| (p - t).abs()).sum::<f64>() / n),
        Task::Classification => {
            let credit: f64 = predictions
                .iter()
                .zip(targets)
                .map(|(p, t)| {
                    if *p == 0.0 {
                        0.5
                    } else if p.signum() == t.signum() {
                        1.0
                    } else {
                        0.0
                    }
                })
                .sum();
            Metric::Accuracy(credit / n)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub gram_index: usize,
    pub label: String,
    pub lambda: f64,
    /// Mean held-out loss (MAE, or 1 − accuracy).
    pub cv_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridCell,
    pub cells: Vec<GridCell>,
    pub folds: usize,
    pub seed: u64,
}

/// Seeded shuffle split into `folds` contiguous blocks.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut crate::rng::stream(seed, "cv-folds", 0));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

fn cv_loss(k: &GramMatrix, y: &[f64], lambda: f64, folds: &[Vec<usize>], task: Task) -> Result<f64> {
    let mut total = 0.0;
    for held in folds {
        let train: Vec<usize> = folds.iter().filter(|f| !std::ptr::eq(*f, held)).flatten().copied().collect();
        let sub = GramMatrix {
            base: k.base.submatrix(&train),
            ..k.clone()
        };
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = fit(&sub, &ytr, lambda)?;
        // the sub-Gram already carries the scale, so evaluate unscaled rows
        let cross: Vec<Vec<f64>> = held.iter().map(|&i| train.iter().map(|&j| k.get(i, j)).collect()).collect();
        let raw = predict_raw(&TrainedModel { trace_scale: 1.0, ..model }, &cross)?;
        let pred: Vec<f64> = raw.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let yte: Vec<f64> = held.iter().map(|&i| y[i]).collect();
        total += evaluate(&pred, &yte, task)?.loss();
    }
    Ok(total / folds.len() as f64)
}

/// Exhaustive cross-validated search over `(Gram, λ)` pairs. All grid points
/// share one fold assignment; ties go to the larger λ, then the earlier Gram.
pub fn grid_search(
    grams: &[GramMatrix],
    y: &[f64],
    lambdas: &[f64],
    folds: usize,
    seed: u64,
    task: Task,
) -> Result<GridResult> {
    if grams.is_empty() || lambdas.is_empty() {
        return Err(Error::InvalidInput("empty hyperparameter grid".into()));
    }
    let n = y.len();
    if folds < 2 || n < folds {
        return Err(Error::InsufficientData {
            requested: folds.max(2),
            available: n,
        });
    }
    for k in grams {
        check_targets(k, y)?;
    }
    let assignment = fold_assignment(n, folds, seed);
    let points: Vec<(usize, f64)> = (0..grams.len())
        .flat_map(|g| lambdas.iter().map(move |&l| (g, l)))
        .collect();
    let cells: Vec<GridCell> = points
        .par_iter()
        .map(|&(g, lambda)| {
            Ok(GridCell {
                gram_index: g,
                label: grams[g].label(),
                lambda,
                cv_loss: cv_loss(&grams[g], y, lambda, &assignment, task)?,
            })
        })
        .collect::<Result<_>>()?;
    let best = cells
        .iter()
        .min_by(|a, b| {
            a.cv_loss
                .total_cmp(&b.cv_loss)
                .then(b.lambda.total_cmp(&a.lambda))
                .then(a.gram_index.cmp(&b.gram_index))
        })
        .expect("non-empty grid")
        .clone();
    Ok(GridResult {
        best,
        cells,
        folds,
        seed,
    })
}
