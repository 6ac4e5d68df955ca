//! Dense complex linear algebra used by every other module.
//!
//! Matrices are small (trusted dimension up to 16, moment matrices up to a few
//! hundred rows), so everything is dense and row-major. The Hermitian
//! eigensolver is delegated to `nalgebra`; everything else is implemented here.

mod matrix;
pub mod random;

pub use matrix::{inner_product, vector_norm, ComplexMatrix, ONE, ZERO};

use nalgebra::SymmetricEigen;
pub use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative cutoff below which eigenvalues count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;
/// Relative negativity tolerated (and clipped) before a matrix is declared not PSD.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        self.eigenvectors.column(i)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in fl.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|l| l)
    }

    /// Indices of eigenvalues above `rank_tol · λ_max`.
    pub fn support(&self, rank_tol: f64) -> Vec<usize> {
        let top = self.max_eigenvalue();
        if top <= 0.0 {
            return Vec::new();
        }
        (0..self.dim()).filter(|&i| self.eigenvalues[i] > rank_tol * top).collect()
    }
}

/// Hermitian eigendecomposition. Eigenvectors carry a fixed phase: the first
/// component with modulus above 1e-8 is real and positive.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    let h = checked_hermitian(m)?;
    let n = h.rows();
    if n == 0 {
        return Ok(HermitianEig { eigenvalues: Vec::new(), eigenvectors: ComplexMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::try_new(h.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalBreakdown("eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let pivot = v.iter().find(|z| z.norm() > 1e-8).copied().unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for i in 0..n {
            eigenvectors[(i, col)] = v[i] * phase;
        }
    }
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Eigenvalues only (ascending); cheaper than [`hermitian_eig`] for large inputs.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = checked_hermitian(m)?;
    let mut values: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn checked_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let defect = m.hermiticity_defect();
    if defect > 1e-10 * (1.0 + m.frobenius_norm()) {
        return Err(Error::NonHermitian { defect });
    }
    Ok(m.hermitian_part())
}

/// Square root and pseudo-inverse square root of a PSD matrix.
#[derive(Clone, Debug)]
pub struct PsdRoots {
    pub sqrt: ComplexMatrix,
    pub pinv_sqrt: ComplexMatrix,
    pub rank: usize,
}

/// `M^{1/2}` and `M^{-1/2}` on the support of `M`; eigenvalues at or below
/// `rank_tol · λ_max` are treated as zero.
pub fn psd_sqrt_pinv(m: &ComplexMatrix, rank_tol: f64) -> Result<PsdRoots> {
    let eig = psd_eig(m)?;
    let support = eig.support(rank_tol);
    let cutoff = rank_tol * eig.max_eigenvalue();
    let keep = |l: f64| l > cutoff && l > 0.0;
    Ok(PsdRoots {
        sqrt: eig.apply(|l| if keep(l) { l.sqrt() } else { 0.0 }),
        pinv_sqrt: eig.apply(|l| if keep(l) { 1.0 / l.sqrt() } else { 0.0 }),
        rank: support.len(),
    })
}

/// Eigendecomposition of a matrix required to be PSD up to the relative
/// negativity band, with that band clipped to zero.
pub fn psd_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    let mut eig = hermitian_eig(m)?;
    let scale = eig.max_eigenvalue().max(0.0);
    let min = eig.min_eigenvalue();
    if min < -NEGATIVE_EIGEN_TOL * scale || (scale == 0.0 && min < 0.0) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    for l in &mut eig.eigenvalues {
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    Ok(eig)
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
pub fn project_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(m)?.apply(|l| l.max(0.0)))
}

/// Amount by which a Hermitian matrix fails to be PSD: `max(0, −λ_min)`,
/// plus its hermiticity defect.
pub fn psd_violation(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if !m.is_square() {
        return Err(Error::DimensionMismatch("PSD check of non-square matrix".into()));
    }
    let values = hermitian_eigenvalues(&m.hermitian_part())?;
    let neg = values.first().map_or(0.0, |&l| (-l).max(0.0));
    Ok(neg.max(m.hermiticity_defect()))
}

/// Kronecker product `A ⊗ B` with entries `(i·p + j, k·q + l) = A_ik B_jl`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite);
    }
    let (p, q) = (b.rows(), b.cols());
    Ok(ComplexMatrix::from_fn(a.rows() * p, a.cols() * q, |r, c| a[(r / p, c / q)] * b[(r % p, c % q)]))
}

/// Trace over the first tensor factor of a `(dA·dB)×(dA·dB)` matrix.
pub fn partial_trace_first(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    let d = dim_a * dim_b;
    if m.rows() != d || m.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}x{} matrix over factors {dim_a}x{dim_b}",
            m.rows(),
            m.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(dim_b, dim_b);
    for i in 0..dim_a {
        for j in 0..dim_b {
            for l in 0..dim_b {
                out[(j, l)] += m[(i * dim_b + j, i * dim_b + l)];
            }
        }
    }
    Ok(out)
}

/// Trace over the second tensor factor.
pub fn partial_trace_second(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    let d = dim_a * dim_b;
    if m.rows() != d || m.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}x{} matrix over factors {dim_a}x{dim_b}",
            m.rows(),
            m.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(dim_a, dim_a);
    for i in 0..dim_a {
        for k in 0..dim_a {
            for j in 0..dim_b {
                out[(i, k)] += m[(i * dim_b + j, k * dim_b + j)];
            }
        }
    }
    Ok(out)
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if !m.is_square() {
        return Err(Error::DimensionMismatch("operator norm of non-square matrix".into()));
    }
    if m.rows() == 0 {
        return Ok(0.0);
    }
    if m.hermiticity_defect() <= 1e-14 * (1.0 + m.frobenius_norm()) {
        let values = hermitian_eigenvalues(&m.hermitian_part())?;
        return Ok(values.iter().map(|l| l.abs()).fold(0.0, f64::max));
    }
    let gram = (&m.adjoint() * m).hermitian_part();
    let top = hermitian_eigenvalues(&gram)?.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// `sign(H)`: +1 on the nonnegative eigenspace, −1 on the negative one.
pub fn hermitian_sign(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(h)?.apply(|l| if l >= 0.0 { 1.0 } else { -1.0 }))
}

/// Matrix unit `E_ij` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(i, j)] = ONE;
    e
}
