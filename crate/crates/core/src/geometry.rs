//! Model complexity, effective dimension, geometric difference and the
//! screening verdict built from them.
//!
//! Every quantity is a spectral function of trace-normalized Gram matrices.
//! Orientation: the source kernel is the quantum (reference) one, the
//! learner kernel the classical one.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GramMatrix, KernelId};
use crate::linalg::{psd_sqrt, spectral_norm, sym_eig, EigDecomp, SymMatrix, DEFAULT_RCOND};

pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [1e-5, 1e-4, 1e-3, 1e-2, 0.025, 0.05, 0.1];
pub const DEFAULT_G_TRA_CAP: f64 = 0.045;
pub const DEFAULT_G_THRESHOLD: f64 = 1.5;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("λ must be finite and non-negative, got {lambda}")));
    }
    Ok(())
}

fn check_labels(k: &GramMatrix, y: &[f64]) -> Result<()> {
    if y.len() != k.n() {
        return Err(Error::Shape(format!("{} labels for a {}-point Gram matrix", y.len(), k.n())));
    }
    Ok(())
}

/// Decompose a normalized PSD Gram matrix.
pub fn spectrum(k: &GramMatrix) -> Result<EigDecomp> {
    k.check_normalized()?;
    let eig = sym_eig(&k.base)?;
    eig.check_psd()?;
    Ok(eig)
}

/// `s = yᵀK⁺y` at λ = 0, else `yᵀ√K(K+λI)⁻²√K y`.
pub fn model_complexity(k: &GramMatrix, y: &[f64], lambda: f64) -> Result<f64> {
    check_labels(k, y)?;
    check_lambda(lambda)?;
    Ok(complexity_from_spectrum(&spectrum(k)?, y, lambda))
}

pub fn complexity_from_spectrum(eig: &EigDecomp, y: &[f64], lambda: f64) -> f64 {
    let coords = eig.project(y);
    let cut = eig.cutoff(DEFAULT_RCOND);
    coords
        .iter()
        .zip(&eig.values)
        .map(|(c, &t)| {
            if lambda == 0.0 {
                if t > cut {
                    c * c / t
                } else {
                    0.0
                }
            } else {
                let t = t.max(0.0);
                t * c * c / (t + lambda).powi(2)
            }
        })
        .sum()
}

/// `λ²·yᵀ(K+λI)⁻²y`, the squared training residual of the ridge fit. At
/// λ = 0 it is the weight of `y` outside the range of `K` (zero for
/// invertible `K`).
pub fn train_error_scalar(k: &GramMatrix, y: &[f64], lambda: f64) -> Result<f64> {
    check_labels(k, y)?;
    check_lambda(lambda)?;
    Ok(train_error_from_spectrum(&spectrum(k)?, y, lambda))
}

pub fn train_error_from_spectrum(eig: &EigDecomp, y: &[f64], lambda: f64) -> f64 {
    let coords = eig.project(y);
    let cut = eig.cutoff(DEFAULT_RCOND);
    coords
        .iter()
        .zip(&eig.values)
        .map(|(c, &t)| {
            if lambda == 0.0 {
                if t > cut {
                    0.0
                } else {
                    c * c
                }
            } else {
                (lambda * c / (t.max(0.0) + lambda)).powi(2)
            }
        })
        .sum()
}

/// `d = Σ_{k=1}^{N} (Σ_{l≥k} t_l)/(N−k+1)` with eigenvalues descending.
/// Eigenvalues at or below `DEFAULT_RCOND · t_1` count as zero.
pub fn effective_dimension(k: &GramMatrix) -> Result<f64> {
    Ok(dimension_from_spectrum(&spectrum(k)?))
}

pub fn dimension_from_spectrum(eig: &EigDecomp) -> f64 {
    let n = eig.dim();
    let cut = eig.cutoff(DEFAULT_RCOND);
    let mut tail = 0.0;
    let mut d = 0.0;
    for k in (0..n).rev() {
        if eig.values[k] > cut {
            tail += eig.values[k];
        }
        d += tail / (n - k) as f64;
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub g_gen: f64,
    pub g_tra: f64,
}

/// Precomputed pieces for evaluating `(g_gen, g_tra)` of one kernel pair at
/// many λ: with `K_lrn = V diag(t) Vᵀ` and `B = √K_src·V`, every quantity is
/// the spectral norm of `B diag(w) Bᵀ` for some weights `w(t, λ)`.
pub struct PairSweep {
    b: DMatrix<f64>,
    values: Vec<f64>,
    cutoff: f64,
}

impl PairSweep {
    pub fn new(src: &GramMatrix, lrn: &GramMatrix) -> Result<Self> {
        if src.n() != lrn.n() {
            return Err(Error::Shape(format!(
                "Gram matrices have {} and {} points",
                src.n(),
                lrn.n()
            )));
        }
        src.check_normalized()?;
        let root = psd_sqrt(&src.base)?;
        Self::with_source_root(&root, lrn)
    }

    /// Use a caller-supplied `√K_src` (for example a truncated root).
    pub fn with_source_root(root: &SymMatrix, lrn: &GramMatrix) -> Result<Self> {
        if root.dim() != lrn.n() {
            return Err(Error::Shape("source root and learner differ in size".into()));
        }
        let eig = spectrum(lrn)?;
        Ok(Self {
            b: root.as_dmatrix() * &eig.vectors,
            cutoff: eig.cutoff(DEFAULT_RCOND),
            values: eig.values,
        })
    }

    /// `B diag(w) Bᵀ`.
    pub fn weighted(&self, w: &[f64]) -> SymMatrix {
        let mut c = self.b.clone();
        for (k, wk) in w.iter().enumerate() {
            c.column_mut(k).scale_mut(wk.max(0.0).sqrt());
        }
        SymMatrix::from_dmatrix(&c * c.transpose()).expect("finite product")
    }

    /// Weights of `√K_src √K_lrn (K_lrn+λI)⁻² √K_lrn √K_src`; at λ = 0 the
    /// pseudo-inverse weights `1/t` above the cut-off.
    pub fn gen_weights(&self, lambda: f64) -> Vec<f64> {
        self.values
            .iter()
            .map(|&t| {
                if lambda == 0.0 {
                    if t > self.cutoff {
                        1.0 / t
                    } else {
                        0.0
                    }
                } else {
                    let t = t.max(0.0);
                    t / (t + lambda).powi(2)
                }
            })
            .collect()
    }

    pub fn gen_matrix(&self, lambda: f64) -> SymMatrix {
        self.weighted(&self.gen_weights(lambda))
    }

    /// `λ²·‖√K_src (K_lrn+λI)⁻² √K_src‖`, the squared training term.
    pub fn tra_norm(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let w: Vec<f64> = self.values.iter().map(|&t| (t.max(0.0) + lambda).powi(-2)).collect();
        lambda * lambda * spectral_norm(&self.weighted(&w))
    }

    pub fn at(&self, lambda: f64) -> PairGeometry {
        PairGeometry {
            g_gen: spectral_norm(&self.gen_matrix(lambda)).sqrt(),
            g_tra: self.tra_norm(lambda).sqrt(),
        }
    }
}

/// `(g_gen, g_tra)` of learner `lrn` relative to source `src` at `λ`.
pub fn geometric_difference(src: &GramMatrix, lrn: &GramMatrix, lambda: f64) -> Result<PairGeometry> {
    check_lambda(lambda)?;
    Ok(PairSweep::new(src, lrn)?.at(lambda))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ClassicalCompetitive,
    PotentialAdvantage,
    LabelDependent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ClassicalCompetitive => "classical-competitive",
            Verdict::PotentialAdvantage => "potential-advantage",
            Verdict::LabelDependent => "label-dependent",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenConfig {
    pub lambda_grid: Vec<f64>,
    pub g_tra_cap: f64,
    /// Largest `g` still labelled classical-competitive.
    pub threshold: f64,
    /// `Tr(O²)` of the target observable, when known.
    pub observable_frobenius: Option<f64>,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            g_tra_cap: DEFAULT_G_TRA_CAP,
            threshold: DEFAULT_G_THRESHOLD,
            observable_frobenius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerEntry {
    /// Label of the quantum kernel this entry is measured against.
    pub source: String,
    pub kernel: KernelId,
    pub label: String,
    pub params: BTreeMap<String, f64>,
    /// Largest grid λ with `g_tra ≤ cap`; for inadmissible learners, the λ
    /// with the smallest `g_tra`.
    pub lambda: f64,
    pub g_gen: f64,
    pub g_tra: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumSummary {
    pub label: String,
    pub kernel: KernelId,
    pub params: BTreeMap<String, f64>,
    pub d_eff: f64,
    /// Minimum `g_gen` over admissible learners.
    pub min_g: Option<f64>,
    pub best_learner: Option<String>,
    /// `min(d_eff, Tr O²)` when the observable norm is supplied.
    pub dimension_bound: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    #[serde(rename = "N")]
    pub n_points: usize,
    /// Effective dimension of the first quantum kernel.
    pub d_eff: f64,
    pub quantum: Vec<QuantumSummary>,
    pub learners: Vec<LearnerEntry>,
    /// `s` keyed by `label@λ`; present when labels are supplied.
    pub s_values: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub config: ScreenConfig,
}

fn s_key(label: &str, lambda: f64) -> String {
    format!("{label}@{lambda}")
}

/// Pick the learner's λ: the largest grid value with `g_tra ≤ cap`.
fn choose_lambda(sweep: &PairSweep, grid: &[f64], cap: f64) -> (f64, PairGeometry, bool) {
    let evals: Vec<(f64, PairGeometry)> = grid.iter().map(|&l| (l, sweep.at(l))).collect();
    let best_admissible = evals
        .iter()
        .filter(|(_, g)| g.g_tra <= cap)
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match best_admissible {
        Some(&(l, g)) => (l, g, true),
        None => {
            let &(l, g) = evals
                .iter()
                .min_by(|a, b| a.1.g_tra.total_cmp(&b.1.g_tra).then(b.0.total_cmp(&a.0)))
                .expect("non-empty grid");
            (l, g, false)
        }
    }
}

/// Screen quantum kernels against a classical suite.
pub fn screen(
    quantum: &[GramMatrix],
    classical: &[GramMatrix],
    config: &ScreenConfig,
    y: Option<&[f64]>,
) -> Result<GeometryReport> {
    if quantum.is_empty() {
        return Err(Error::InvalidInput("no quantum kernels to screen".into()));
    }
    if classical.is_empty() {
        return Err(Error::InvalidInput("classical kernel suite is empty".into()));
    }
    if config.lambda_grid.is_empty() {
        return Err(Error::InvalidInput("λ grid is empty".into()));
    }
    for &l in &config.lambda_grid {
        check_lambda(l)?;
    }
    let n = quantum[0].n();
    if let Some(k) = quantum.iter().chain(classical).find(|k| k.n() != n) {
        return Err(Error::Shape(format!("{} has {} points, expected {n}", k.label(), k.n())));
    }
    if let Some(y) = y {
        check_labels(&quantum[0], y)?;
    }

    let q_spectra: Vec<EigDecomp> = quantum.par_iter().map(spectrum).collect::<Result<_>>()?;
    let c_spectra: Vec<EigDecomp> = classical.par_iter().map(spectrum).collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..quantum.len())
        .flat_map(|q| (0..classical.len()).map(move |c| (q, c)))
        .collect();
    let chosen: Vec<(f64, PairGeometry, bool)> = cells
        .par_iter()
        .map(|&(q, c)| {
            let sweep = PairSweep::new(&quantum[q], &classical[c])?;
            Ok(choose_lambda(&sweep, &config.lambda_grid, config.g_tra_cap))
        })
        .collect::<Result<_>>()?;

    let mut learners = Vec::with_capacity(cells.len());
    let mut s_values = BTreeMap::new();
    for (&(q, c), &(lambda, g, admissible)) in cells.iter().zip(&chosen) {
        let k = &classical[c];
        learners.push(LearnerEntry {
            source: quantum[q].label(),
            kernel: k.kernel,
            label: k.label(),
            params: k.params.clone(),
            lambda,
            g_gen: g.g_gen,
            g_tra: g.g_tra,
            admissible,
        });
        if let Some(y) = y {
            s_values.insert(s_key(&k.label(), lambda), complexity_from_spectrum(&c_spectra[c], y, lambda));
        }
    }

    let mut summaries = Vec::with_capacity(quantum.len());
    for (q, k) in quantum.iter().enumerate() {
        let d_eff = dimension_from_spectrum(&q_spectra[q]);
        let label = k.label();
        let best = learners
            .iter()
            .filter(|l| l.source == label && l.admissible)
            .min_by(|a, b| a.g_gen.total_cmp(&b.g_gen));
        let s_q = y.map(|y| complexity_from_spectrum(&q_spectra[q], y, 0.0));
        if let Some(s) = s_q {
            s_values.insert(s_key(&label, 0.0), s);
        }
        let dimension_bound = config.observable_frobenius.map(|f| d_eff.min(f));
        let verdict = match best {
            Some(b) if b.g_gen <= config.threshold => Verdict::ClassicalCompetitive,
            _ => {
                if let (Some(y), Some(s_q)) = (y, s_q) {
                    // label test against the strongest admissible learner,
                    // or every learner when none fits the training data
                    let s_c = learners
                        .iter()
                        .filter(|l| l.source == label && (best.is_none() || l.admissible))
                        .map(|l| {
                            let c = classical.iter().position(|k| k.label() == l.label).unwrap();
                            complexity_from_spectrum(&c_spectra[c], y, l.lambda)
                        })
                        .fold(f64::INFINITY, f64::min);
                    if s_c > s_q {
                        Verdict::PotentialAdvantage
                    } else {
                        Verdict::ClassicalCompetitive
                    }
                } else if let Some(bound) = dimension_bound {
                    if bound < n as f64 {
                        Verdict::PotentialAdvantage
                    } else {
                        Verdict::LabelDependent
                    }
                } else {
                    Verdict::PotentialAdvantage
                }
            }
        };
        summaries.push(QuantumSummary {
            label,
            kernel: k.kernel,
            params: k.params.clone(),
            d_eff,
            min_g: best.map(|b| b.g_gen),
            best_learner: best.map(|b| b.label.clone()),
            dimension_bound,
            verdict,
        });
    }

    let verdict = if summaries.iter().any(|s| s.verdict == Verdict::PotentialAdvantage) {
        Verdict::PotentialAdvantage
    } else if summaries.iter().any(|s| s.verdict == Verdict::LabelDependent) {
        Verdict::LabelDependent
    } else {
        Verdict::ClassicalCompetitive
    };

    Ok(GeometryReport {
        n_points: n,
        d_eff: summaries[0].d_eff,
        quantum: summaries,
        learners,
        s_values,
        verdict,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{classical_gram, normalize_trace, ClassicalKernel};
    use crate::linalg::psd_pinv;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use rand::Rng as _;

    fn gram(base: SymMatrix) -> GramMatrix {
        normalize_trace(&GramMatrix::new(base, KernelId::Precomputed, BTreeMap::new())).unwrap()
    }

    pub(crate) fn random_psd(n: usize, rank: usize, seed: u64) -> GramMatrix {
        let mut r = rng_from_seed(seed);
        let x = DMatrix::from_fn(rank, n, |_, _| r.random_range(-1.0..1.0));
        gram(SymMatrix::from_dmatrix(x.transpose() * x).unwrap())
    }

    fn random_y(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng_from_seed(seed);
        (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    fn norm2(y: &[f64]) -> f64 {
        y.iter().map(|v| v * v).sum()
    }

    #[test]
    fn complexity_identity_examples() {
        let k = gram(SymMatrix::identity(5));
        let y = random_y(5, 1);
        assert_abs_diff_eq!(model_complexity(&k, &y, 0.0).unwrap(), norm2(&y), epsilon = 1e-12);
        let l = 0.3;
        assert_abs_diff_eq!(
            model_complexity(&k, &y, l).unwrap(),
            norm2(&y) / (1.0 + l).powi(2),
            epsilon = 1e-12
        );
        let unnormalized = GramMatrix::new(SymMatrix::identity(5).scaled(2.0), KernelId::Precomputed, BTreeMap::new());
        assert!(matches!(model_complexity(&unnormalized, &y, 0.0), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn complexity_matches_pinv_quadratic_form() {
        let k = random_psd(12, 12, 3);
        let y = random_y(12, 4);
        let p = psd_pinv(&k.base, DEFAULT_RCOND).unwrap();
        let want: f64 = y.iter().zip(p.mul_vec(&y)).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(model_complexity(&k, &y, 0.0).unwrap(), want, epsilon = 1e-8 * want);
    }

    #[test]
    fn train_error_examples() {
        let k = gram(SymMatrix::identity(4));
        let y = random_y(4, 2);
        assert_eq!(train_error_scalar(&k, &y, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(train_error_scalar(&k, &y, 1.0).unwrap(), norm2(&y) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_examples() {
        assert_abs_diff_eq!(effective_dimension(&gram(SymMatrix::identity(7))).unwrap(), 7.0, epsilon = 1e-12);

        let u: Vec<f64> = (0..6).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let rank_one = SymMatrix::from_fn(6, |i, j| u[i] * u[j]).unwrap();
        assert_abs_diff_eq!(effective_dimension(&gram(rank_one)).unwrap(), 1.0, epsilon = 1e-12);

        let k = gram(SymMatrix::from_diag(&[2.0, 2.0, 0.0, 0.0]).unwrap());
        assert_abs_diff_eq!(effective_dimension(&k).unwrap(), 5.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn geometric_difference_examples() {
        let k = random_psd(8, 8, 5);
        let g = geometric_difference(&k, &k, 0.0).unwrap();
        assert_abs_diff_eq!(g.g_gen, 1.0, epsilon = 1e-6);
        assert_eq!(g.g_tra, 0.0);

        let a = 0.4;
        let src = gram(SymMatrix::from_diag(&[a, 2.0 - a]).unwrap());
        let lrn = gram(SymMatrix::identity(2));
        let g = geometric_difference(&src, &lrn, 0.0).unwrap();
        assert_abs_diff_eq!(g.g_gen, (2.0f64 - a).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn regularized_difference_matches_dense_formula() {
        let src = random_psd(6, 6, 7);
        let lrn = random_psd(6, 4, 8);
        let l = 0.05;
        let rs = psd_sqrt(&src.base).unwrap();
        let rl = psd_sqrt(&lrn.base).unwrap();
        let inv = (lrn.base.as_dmatrix() + DMatrix::identity(6, 6) * l).try_inverse().unwrap();
        let inv2 = &inv * &inv;
        let m = rs.as_dmatrix() * rl.as_dmatrix() * &inv2 * rl.as_dmatrix() * rs.as_dmatrix();
        let t = rs.as_dmatrix() * &inv2 * rs.as_dmatrix();
        let g = geometric_difference(&src, &lrn, l).unwrap();
        assert_abs_diff_eq!(g.g_gen, spectral_norm(&SymMatrix::from_dmatrix(m).unwrap()).sqrt(), epsilon = 1e-8);
        assert_abs_diff_eq!(g.g_tra, l * spectral_norm(&SymMatrix::from_dmatrix(t).unwrap()).sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn screen_with_self_in_suite() {
        let k = random_psd(10, 10, 9);
        let other = random_psd(10, 10, 10);
        let config = ScreenConfig {
            lambda_grid: vec![0.0],
            ..ScreenConfig::default()
        };
        let report = screen(std::slice::from_ref(&k), &[other, k.clone()], &config, None).unwrap();
        assert_abs_diff_eq!(report.quantum[0].min_g.unwrap(), 1.0, epsilon = 1e-6);
        assert_eq!(report.verdict, Verdict::ClassicalCompetitive);
    }

    #[test]
    fn screen_identity_against_low_rank_rbf() {
        let n = 3;
        let q = gram(SymMatrix::identity(n));
        let x = vec![vec![0.0], vec![0.05], vec![0.1]];
        let c = normalize_trace(&classical_gram(&x, ClassicalKernel::Rbf { gamma: 1.0 }).unwrap()).unwrap();
        let config = ScreenConfig {
            lambda_grid: vec![0.0],
            ..ScreenConfig::default()
        };
        let report = screen(std::slice::from_ref(&q), std::slice::from_ref(&c), &config, None).unwrap();
        assert_eq!(report.verdict, Verdict::PotentialAdvantage);
        // at λ = 0 with K_src = I, g² is the largest eigenvalue of K_C⁺
        let eig = sym_eig(&c.base).unwrap();
        let g = report.quantum[0].min_g.unwrap();
        assert_abs_diff_eq!(g * g, 1.0 / eig.lambda_min(), epsilon = 1e-6 * g * g);
        assert!(g > 10.0);
    }

    #[test]
    fn screen_rejects_empty_suite() {
        let k = random_psd(4, 4, 1);
        assert!(matches!(screen(&[k], &[], &ScreenConfig::default(), None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn screen_picks_largest_admissible_lambda() {
        let q = random_psd(15, 15, 11);
        let c = random_psd(15, 15, 12);
        let config = ScreenConfig::default();
        let report = screen(std::slice::from_ref(&q), std::slice::from_ref(&c), &config, Some(&random_y(15, 1))).unwrap();
        let entry = &report.learners[0];
        let sweep = PairSweep::new(&q, &c).unwrap();
        for &l in &config.lambda_grid {
            let g = sweep.at(l);
            if l > entry.lambda {
                assert!(g.g_tra > config.g_tra_cap);
            }
        }
        if entry.admissible {
            assert!(entry.g_tra <= config.g_tra_cap);
        }
        assert!(report.s_values.contains_key(&format!("{}@0", q.label())));
    }

    #[test]
    fn label_refinement_uses_observable_norm() {
        let q = gram(SymMatrix::identity(4));
        let x = vec![vec![0.0], vec![0.01], vec![0.02], vec![0.03]];
        let c = normalize_trace(&classical_gram(&x, ClassicalKernel::Rbf { gamma: 1.0 }).unwrap()).unwrap();
        let mut config = ScreenConfig {
            lambda_grid: vec![0.0],
            observable_frobenius: Some(2.0),
            ..ScreenConfig::default()
        };
        let r = screen(std::slice::from_ref(&q), std::slice::from_ref(&c), &config, None).unwrap();
        assert_eq!(r.verdict, Verdict::PotentialAdvantage);
        config.observable_frobenius = Some(1e6);
        let r = screen(&[q], &[c], &config, None).unwrap();
        assert_eq!(r.verdict, Verdict::LabelDependent);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(50))]

            #[test]
            fn complexity_inequality(n in 2usize..=40, seed in any::<u64>()) {
                let src = random_psd(n, n, seed);
                let lrn = random_psd(n, n, seed ^ 0xabc);
                let y = random_y(n, seed ^ 7);
                let g = geometric_difference(&src, &lrn, 0.0).unwrap().g_gen;
                let s_src = model_complexity(&src, &y, 0.0).unwrap();
                let s_lrn = model_complexity(&lrn, &y, 0.0).unwrap();
                prop_assert!(s_lrn <= g * g * s_src * (1.0 + 1e-9) + 1e-8);
            }

            #[test]
            fn dimension_bounds(n in 1usize..=40, rank in 1usize..=40, seed in any::<u64>()) {
                let k = random_psd(n, rank, seed);
                let d = effective_dimension(&k).unwrap();
                prop_assert!(d >= 1.0 - 1e-9 && d <= n as f64 + 1e-9);
            }

            #[test]
            fn dimension_permutation_invariant(n in 2usize..=20, seed in any::<u64>(), shift in 1usize..20) {
                let k = random_psd(n, n.min(5), seed);
                let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
                prop_assume!({ let mut p = perm.clone(); p.sort(); p.dedup(); p.len() == n });
                let kp = gram(k.base.submatrix(&perm));
                prop_assert!((effective_dimension(&k).unwrap() - effective_dimension(&kp).unwrap()).abs() <= 1e-9);
            }

            #[test]
            fn g_gen_non_increasing_in_lambda(n in 2usize..=25, seed in any::<u64>()) {
                let src = random_psd(n, n, seed);
                let lrn = random_psd(n, (n / 2).max(1), seed ^ 5);
                let sweep = PairSweep::new(&src, &lrn).unwrap();
                let gs: Vec<f64> = DEFAULT_LAMBDA_GRID.iter().map(|&l| sweep.at(l).g_gen).collect();
                for w in gs.windows(2) {
                    prop_assert!(w[1] <= w[0] * (1.0 + 1e-10));
                }
            }
        }
    }
}
