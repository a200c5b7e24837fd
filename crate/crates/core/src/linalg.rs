//! Dense symmetric linear algebra.
//!
//! Everything downstream (dimension, geometric difference, model complexity,
//! ridge fits) reduces to functions of a symmetric eigendecomposition, so the
//! central type here is [`EigDecomp`] with [`EigDecomp::compose`] building
//! `V diag(f(t)) Vᵀ` for an arbitrary spectral function `f`.
//!
//! The eigensolver is nalgebra's implicit symmetric QR (Householder
//! tridiagonalisation followed by Wilkinson-shifted QR sweeps). It is a
//! direct method with no randomness, so results are bit-reproducible for a
//! given input on one platform.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative cut-off below which eigenvalues count as zero in
/// pseudo-inverses.
pub const DEFAULT_RCOND: f64 = 1e-10;

/// Symmetric real matrix. Row-major and column-major layouts coincide, so
/// [`SymMatrix::as_slice`] is both.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Build from row-major entries, symmetrising as `(A + Aᵀ)/2`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::Shape(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        // row-major input read as column-major gives Aᵀ; symmetrising makes
        // the distinction irrelevant
        Self::from_dmatrix(DMatrix::from_vec(dim, dim, entries))
    }

    /// Build from a square nalgebra matrix, symmetrising.
    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if let Some(bad) = m.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {bad}")));
        }
        Ok(Self {
            m: symmetrize(m),
        })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_dmatrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        Self::from_dmatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_slice(&self) -> &[f64] {
        self.m.as_slice()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.m.diagonal().iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.m.column(i).iter().copied().collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { m: &self.m * c }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim(), "vector length mismatch");
        (&self.m * DVector::from_column_slice(v)).iter().copied().collect()
    }

    /// `self · a · self`, which is symmetric whenever both factors are.
    pub fn sandwich(&self, a: &SymMatrix) -> SymMatrix {
        SymMatrix {
            m: symmetrize(&self.m * &a.m * &self.m),
        }
    }

    /// Principal submatrix on the given indices.
    pub fn submatrix(&self, rows: &[usize]) -> SymMatrix {
        let k = rows.len();
        SymMatrix {
            m: DMatrix::from_fn(k, k, |i, j| self.m[(rows[i], rows[j])]),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = m;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Eigendecomposition `A = V diag(values) Vᵀ` with values in descending order.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, column `k` paired with `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// PSD tolerance `1e-10 · max(1, λ_max) · dim`.
    pub fn clamp_tolerance(&self) -> f64 {
        1e-10 * self.lambda_max().max(1.0) * self.dim() as f64
    }

    pub fn check_psd(&self) -> Result<()> {
        let tol = self.clamp_tolerance();
        let min = self.lambda_min();
        if min < -tol {
            return Err(Error::NotPsd {
                eigenvalue: min,
                tolerance: tol,
            });
        }
        Ok(())
    }

    /// Absolute threshold below which eigenvalues are treated as zero.
    pub fn cutoff(&self, rcond: f64) -> f64 {
        rcond * self.lambda_max().max(0.0)
    }

    /// Number of eigenvalues above `rcond · λ_max`.
    pub fn rank(&self, rcond: f64) -> usize {
        let cut = self.cutoff(rcond);
        self.values.iter().filter(|&&t| t > cut).count()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }

    /// Coordinates of `y` in the eigenbasis, `Vᵀ y`.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim(), "vector length mismatch");
        (self.vectors.transpose() * DVector::from_column_slice(y))
            .iter()
            .copied()
            .collect()
    }

    /// `V diag(f(t)) Vᵀ`.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let weights: Vec<f64> = self.values.iter().map(|&t| f(t)).collect();
        self.compose_weights(&weights)
    }

    pub fn compose_weights(&self, weights: &[f64]) -> SymMatrix {
        let mut scaled = self.vectors.clone();
        for (k, w) in weights.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*w);
        }
        SymMatrix {
            m: symmetrize(scaled * self.vectors.transpose()),
        }
    }

    /// Square root with eigenvalues at or below `rcond · λ_max` set to zero,
    /// i.e. the root of the same truncated operator that [`psd_pinv`] inverts.
    pub fn sqrt_truncated(&self, rcond: f64) -> SymMatrix {
        let cut = self.cutoff(rcond);
        self.compose(|t| if t > cut { t.sqrt() } else { 0.0 })
    }
}

/// Symmetric eigendecomposition, eigenvalues descending. Each eigenvector is
/// signed so that its largest-magnitude component is positive.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomp> {
    let n = a.dim();
    let eig = nalgebra::SymmetricEigen::try_new(a.m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::InvalidMatrix("eigensolver failed to converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the solver's order for exact ties
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let mut lead = 0;
        for r in 1..n {
            if col[r].abs() > col[lead].abs() {
                lead = r;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        vectors.column_mut(k).copy_from(&(col * sign));
    }
    Ok(EigDecomp { values, vectors })
}

/// Square root of a PSD matrix; eigenvalues inside the clamp tolerance are
/// set to zero.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    eig.check_psd()?;
    Ok(eig.compose(|t| t.max(0.0).sqrt()))
}

/// Moore–Penrose pseudo-inverse of a PSD matrix, dropping eigenvalues at or
/// below `rcond · λ_max`.
pub fn psd_pinv(a: &SymMatrix, rcond: f64) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    eig.check_psd()?;
    let cut = eig.cutoff(rcond);
    Ok(eig.compose(|t| if t > cut { 1.0 / t } else { 0.0 }))
}

/// Projection onto the PSD cone: negative eigenvalues clamped to zero.
pub fn psd_project(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    if eig.lambda_min() >= 0.0 {
        return Ok(a.clone());
    }
    Ok(eig.compose(|t| t.max(0.0)))
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(a: &SymMatrix) -> f64 {
    match sym_eig(a) {
        Ok(eig) => eig.lambda_max().abs().max(eig.lambda_min().abs()),
        // SymMatrix is finite by construction; non-convergence is the only
        // failure and the Frobenius norm is a valid (if loose) fallback
        Err(_) => a.m.norm(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegSolution {
    pub x: Vec<f64>,
    /// The system was singular at λ = 0 and was solved with the pseudo-inverse.
    pub used_pinv: bool,
}

/// Solve `(A + λI) x = b`.
///
/// For λ > 0 a Cholesky factorisation is used. At λ = 0 the system is solved
/// spectrally; if `A` has eigenvalues at or below `DEFAULT_RCOND · λ_max` the
/// minimum-norm pseudo-inverse solution is returned and `used_pinv` is set.
pub fn reg_solve(a: &SymMatrix, lambda: f64, b: &[f64]) -> Result<RegSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "regularisation must be finite and non-negative, got {lambda}"
        )));
    }
    if b.len() != a.dim() {
        return Err(Error::Shape(format!(
            "right-hand side has length {}, matrix is {}x{}",
            b.len(),
            a.dim(),
            a.dim()
        )));
    }
    let rhs = DVector::from_column_slice(b);
    if lambda > 0.0 {
        let shifted = &a.m + DMatrix::identity(a.dim(), a.dim()) * lambda;
        if let Some(chol) = shifted.cholesky() {
            return Ok(RegSolution {
                x: chol.solve(&rhs).iter().copied().collect(),
                used_pinv: false,
            });
        }
    }
    let eig = sym_eig(a)?;
    eig.check_psd()?;
    let cut = if lambda > 0.0 {
        0.0
    } else {
        eig.cutoff(DEFAULT_RCOND)
    };
    let coords = eig.project(b);
    let mut used_pinv = false;
    let scaled: Vec<f64> = coords
        .iter()
        .zip(&eig.values)
        .map(|(&c, &t)| {
            let d = t.max(0.0) + lambda;
            if d > cut {
                c / d
            } else {
                used_pinv = true;
                0.0
            }
        })
        .collect();
    let x = &eig.vectors * DVector::from_vec(scaled);
    Ok(RegSolution {
        x: x.iter().copied().collect(),
        used_pinv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetrizes_on_construction() {
        let a = SymMatrix::new(2, vec![1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_non_finite() {
        let err = SymMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidMatrix(_)));
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let eig = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);

        let eig = sym_eig(&SymMatrix::from_diag(&[5.0, 2.0, -1.0]).unwrap()).unwrap();
        for (got, want) in eig.values.iter().zip([5.0, 2.0, -1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        // axis eigenvectors
        for k in 0..3 {
            assert_abs_diff_eq!(eig.vectors[(k, k)], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sqrt_examples() {
        let b = psd_sqrt(&SymMatrix::from_diag(&[4.0, 1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(b.get(0, 0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.get(1, 1), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.get(0, 1), 0.0, epsilon = 1e-14);

        let b = psd_sqrt(&SymMatrix::identity(4)).unwrap();
        assert_eq!(b, SymMatrix::identity(4));
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let err = psd_sqrt(&SymMatrix::from_diag(&[1.0, -0.5]).unwrap()).unwrap_err();
        match err {
            Error::NotPsd { eigenvalue, .. } => assert_eq!(eigenvalue, -0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sqrt_clamps_tiny_negative() {
        let b = psd_sqrt(&SymMatrix::from_diag(&[1.0, -1e-13]).unwrap()).unwrap();
        assert_eq!(b.get(1, 1), 0.0);
    }

    #[test]
    fn pinv_examples() {
        let p = psd_pinv(&SymMatrix::from_diag(&[2.0, 0.0]).unwrap(), DEFAULT_RCOND).unwrap();
        assert_abs_diff_eq!(p.get(0, 0), 0.5, epsilon = 1e-15);
        assert_eq!(p.get(1, 1), 0.0);
        let p = psd_pinv(&SymMatrix::identity(3), DEFAULT_RCOND).unwrap();
        assert_eq!(p, SymMatrix::identity(3));
    }

    #[test]
    fn spectral_norm_examples() {
        assert_abs_diff_eq!(
            spectral_norm(&SymMatrix::from_diag(&[3.0, -4.0]).unwrap()),
            4.0,
            epsilon = 1e-14
        );
        assert_eq!(spectral_norm(&SymMatrix::identity(5)), 1.0);
    }

    #[test]
    fn reg_solve_examples() {
        let s = reg_solve(&SymMatrix::identity(2), 1.0, &[2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.x[1], 2.0, epsilon = 1e-15);
        assert!(!s.used_pinv);

        let zero = SymMatrix::new(2, vec![0.0; 4]).unwrap();
        let s = reg_solve(&zero, 1.0, &[3.0, -1.0]).unwrap();
        assert_eq!(s.x, vec![3.0, -1.0]);
    }

    #[test]
    fn reg_solve_singular_flags_pinv() {
        let a = SymMatrix::from_diag(&[2.0, 0.0]).unwrap();
        let s = reg_solve(&a, 0.0, &[4.0, 1.0]).unwrap();
        assert!(s.used_pinv);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-15);
        assert_eq!(s.x[1], 0.0);
    }

    #[test]
    fn reg_solve_rejects_negative_lambda() {
        assert!(reg_solve(&SymMatrix::identity(2), -1.0, &[1.0, 1.0]).is_err());
    }

    fn random_sym(dim: usize, seed: u64) -> SymMatrix {
        use rand::Rng as _;
        let mut rng = crate::rng::rng_from_seed(seed);
        SymMatrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_gram(rows: usize, dim: usize, seed: u64) -> SymMatrix {
        use rand::Rng as _;
        let mut rng = crate::rng::rng_from_seed(seed);
        let x = DMatrix::from_fn(rows, dim, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::from_dmatrix(x.transpose() * x).unwrap()
    }

    // roots of det(tI - A) by the trigonometric cubic formula
    fn cubic_eigenvalues(a: &SymMatrix) -> [f64; 3] {
        let g = |i, j| a.get(i, j);
        let c2 = -(g(0, 0) + g(1, 1) + g(2, 2));
        let c1 = g(0, 0) * g(1, 1) + g(0, 0) * g(2, 2) + g(1, 1) * g(2, 2)
            - g(0, 1).powi(2)
            - g(0, 2).powi(2)
            - g(1, 2).powi(2);
        let c0 = -(g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2).powi(2))
            - g(0, 1) * (g(0, 1) * g(2, 2) - g(1, 2) * g(0, 2))
            + g(0, 2) * (g(0, 1) * g(1, 2) - g(1, 1) * g(0, 2)));
        let p = c1 - c2 * c2 / 3.0;
        let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - c2 / 3.0;
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    #[test]
    fn eig_matches_characteristic_polynomial() {
        for seed in 0..20 {
            let a = random_sym(3, seed);
            let eig = sym_eig(&a).unwrap();
            for (got, want) in eig.values.iter().zip(cubic_eigenvalues(&a)) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn sqrt_multiplies_back() {
        let g = random_gram(4, 4, 3);
        let b = psd_sqrt(&g).unwrap();
        let bb = b.as_dmatrix() * b.as_dmatrix();
        assert!((bb - g.as_dmatrix()).amax() <= 1e-7);
    }

    #[test]
    fn pinv_of_full_rank_multiplies_back() {
        let a = random_gram(8, 5, 4);
        let p = psd_pinv(&a, DEFAULT_RCOND).unwrap();
        let prod = p.as_dmatrix() * a.as_dmatrix();
        assert!((prod - DMatrix::identity(5, 5)).amax() <= 1e-7);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        for seed in 0..5 {
            let a = random_sym(6, 100 + seed);
            // power iteration on A² converges to the dominant |eigenvalue|²
            let a2 = a.as_dmatrix() * a.as_dmatrix();
            let mut v = DVector::from_element(6, 1.0);
            for _ in 0..5000 {
                v = &a2 * &v;
                v /= v.norm();
            }
            let rayleigh = (v.transpose() * &a2 * &v)[(0, 0)].sqrt();
            let norm = spectral_norm(&a);
            assert!((norm - rayleigh).abs() <= 1e-8 * norm);
        }
    }

    #[test]
    fn reg_solve_residual() {
        let a = random_gram(3, 10, 5);
        let b: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let s = reg_solve(&a, 0.1, &b).unwrap();
        let lhs = a.mul_vec(&s.x);
        let res: f64 = lhs
            .iter()
            .zip(&s.x)
            .zip(&b)
            .map(|((l, x), b)| (l + 0.1 * x - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-8 * bn);
    }

    #[test]
    fn eigendecomposition_invariants() {
        let a = random_sym(30, 9);
        let eig = sym_eig(&a).unwrap();
        let v = &eig.vectors;
        assert!((v.transpose() * v - DMatrix::identity(30, 30)).amax() <= 1e-10);
        let rec = eig.compose(|t| t);
        let scale = eig.lambda_max().max(1.0);
        assert!((rec.as_dmatrix() - a.as_dmatrix()).amax() <= 1e-8 * scale);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn bit_deterministic() {
        let a = random_sym(12, 2);
        let e1 = sym_eig(&a).unwrap();
        let e2 = sym_eig(&a).unwrap();
        assert_eq!(e1.values, e2.values);
        assert_eq!(e1.vectors, e2.vectors);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn sqrt_squares_to_input(dim in 1usize..=50, rows in 1usize..=60, seed in any::<u64>()) {
                let g = random_gram(rows, dim, seed);
                let b = psd_sqrt(&g).unwrap();
                let bb = b.as_dmatrix() * b.as_dmatrix();
                let scale = sym_eig(&g).unwrap().lambda_max().max(1.0);
                prop_assert!((bb - g.as_dmatrix()).amax() <= 1e-7 * scale);
            }

            #[test]
            fn spectral_norm_dominates_quadratic_forms(dim in 1usize..=8, seed in any::<u64>()) {
                use rand::Rng as _;
                let a = random_sym(dim, seed);
                let norm = spectral_norm(&a);
                let mut rng = crate::rng::rng_from_seed(seed ^ 1);
                let mut best = 0.0f64;
                for _ in 0..1000 {
                    let v: DVector<f64> = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
                    let v = &v / v.norm();
                    best = best.max((v.transpose() * a.as_dmatrix() * &v)[(0, 0)].abs());
                }
                prop_assert!(norm + 1e-8 >= best);
            }

            #[test]
            fn eigenvalues_permutation_invariant(dim in 1usize..=10, seed in any::<u64>(), shift in 0usize..10) {
                let a = random_sym(dim, seed);
                let perm: Vec<usize> = (0..dim).map(|i| (i + shift) % dim).collect();
                let b = a.submatrix(&perm);
                let ea = sym_eig(&a).unwrap();
                let eb = sym_eig(&b).unwrap();
                for (x, y) in ea.values.iter().zip(&eb.values) {
                    prop_assert!((x - y).abs() <= 1e-10);
                }
            }
        }
    }
}
