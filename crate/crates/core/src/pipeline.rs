//! Building blocks shared by the CLI and the end-to-end tests: synthetic
//! inputs, the default classical suite and the default quantum Grams.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::{
    classical_gamma_grid, classical_gram, fidelity_gram, normalize_trace, projected_gamma_grid,
    projected_gaussian_1rdm_gram, ClassicalKernel, GramMatrix, PauliFeatures,
};
use crate::rng::stream;
use crate::statevec::{pauli_expectations_1rdm, StateVector};

/// γ scale of the projected kernel used for screening and engineering.
pub const PROJECTED_GAMMA_SCALE: f64 = 1.0;

/// Standard normal inputs, each column then centered and scaled to unit
/// population variance. Row `i` draws from its own stream.
pub fn synthetic_inputs(count: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count < 2 || dim == 0 {
        return Err(Error::InvalidInput(format!("cannot draw {count}×{dim} inputs")));
    }
    let mut x: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            let mut rng = stream(seed, "inputs", i as u64);
            (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
        })
        .collect();
    for j in 0..dim {
        let mean = x.iter().map(|r| r[j]).sum::<f64>() / count as f64;
        let sd = (x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / count as f64).sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateDimension(j));
        }
        for r in &mut x {
            r[j] = (r[j] - mean) / sd;
        }
    }
    Ok(x)
}

/// Linear kernel plus RBF over the variance-scaled γ grid, trace-normalized.
pub fn classical_suite(x: &[Vec<f64>], gammas: Option<&[f64]>) -> Result<Vec<GramMatrix>> {
    let grid = match gammas {
        Some(g) => g.to_vec(),
        None => classical_gamma_grid(x)?,
    };
    std::iter::once(ClassicalKernel::Linear)
        .chain(grid.into_iter().map(|gamma| ClassicalKernel::Rbf { gamma }))
        .map(|k| normalize_trace(&classical_gram(x, k)?))
        .collect()
}

pub fn pauli_features(states: &[StateVector]) -> Vec<PauliFeatures> {
    use rayon::prelude::*;
    states.par_iter().map(pauli_expectations_1rdm).collect()
}

/// Default projected Gaussian γ: `scale / (n · Var)` over the Pauli features.
pub fn projected_gamma(features: &[PauliFeatures]) -> Result<f64> {
    Ok(projected_gamma_grid(features, &[PROJECTED_GAMMA_SCALE])?[0])
}

pub fn projected_gram(features: &[PauliFeatures], gamma: Option<f64>) -> Result<GramMatrix> {
    let gamma = match gamma {
        Some(g) => g,
        None => projected_gamma(features)?,
    };
    normalize_trace(&projected_gaussian_1rdm_gram(features, gamma)?)
}

pub fn fidelity_normalized(states: &[StateVector]) -> Result<GramMatrix> {
    normalize_trace(&fidelity_gram(states)?)
}
