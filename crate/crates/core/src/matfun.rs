//! Spectral-calculus utilities shared by the analytic modules.
//!
//! Everything here works on small dense matrices (a handful of modes), so the
//! eigendecompositions come straight from `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Relative tolerance for the Hermiticity / symmetry check on construction.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
/// Eigenvalues (and scalar arguments) in `[-CLIP_TOLERANCE, 0)` are treated as zero.
pub const CLIP_TOLERANCE: f64 = 1e-12;
/// Relative gap allowed between the two copies of each symplectic eigenvalue.
pub const PAIRING_TOLERANCE: f64 = 1e-8;

/// Logarithm base in which every entropic quantity is reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Base 2.
    #[default]
    Bits,
    /// Base e.
    Nats,
}

impl LogBase {
    /// Converts a value measured in nats into this base.
    #[inline]
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Bits => nats / std::f64::consts::LN_2,
            LogBase::Nats => nats,
        }
    }

    /// `log(x)` in this base.
    #[inline]
    pub fn log(self, x: f64) -> f64 {
        self.from_nats(x.ln())
    }

    /// `log(e)` in this base: `log2(e)` for bits, 1 for nats.
    #[inline]
    pub fn log_e(self) -> f64 {
        self.from_nats(1.0)
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bits" | "2" => Ok(LogBase::Bits),
            "nats" | "e" => Ok(LogBase::Nats),
            other => Err(Error::InvalidRange(format!("unknown log base '{other}'"))),
        }
    }
}

#[inline]
fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn entry_scale<T: Copy>(m: &DMatrix<T>, abs: impl Fn(T) -> f64) -> f64 {
    m.iter().map(|&x| abs(x)).fold(1.0_f64, f64::max)
}

/// Maximum elementwise distance `max |A - A^H|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Maximum elementwise distance `max |A - A^T|`.
pub fn symmetry_defect(m: &RMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Checks squareness, finiteness and Hermiticity, then returns `(A + A^H) / 2`.
pub fn hermitian_part_checked(m: CMatrix, tolerance: f64) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let defect = hermiticity_defect(&m);
    if defect > tolerance * entry_scale(&m, |z| z.norm()) {
        return Err(Error::NotHermitian(defect));
    }
    Ok((&m + m.adjoint()).scale(0.5))
}

/// Real counterpart of [`hermitian_part_checked`].
pub fn symmetric_part_checked(m: RMatrix, tolerance: f64) -> Result<RMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let defect = symmetry_defect(&m);
    if defect > tolerance * entry_scale(&m, f64::abs) {
        return Err(Error::NotSymmetric(defect));
    }
    Ok((&m + m.transpose()).scale(0.5))
}

/// Clips a spectrum: values in `[-tol, 0)` become 0, anything lower is an error.
///
/// The tolerance is [`CLIP_TOLERANCE`] scaled by the largest eigenvalue magnitude
/// (never below the absolute value).
pub fn clip_spectrum(values: &[f64]) -> Result<Vec<f64>> {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = CLIP_TOLERANCE * scale;
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 {
                Ok(v)
            } else if v >= -tol {
                Ok(0.0)
            } else {
                Err(Error::NegativeEigenvalue(v))
            }
        })
        .collect()
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `U diag(values) U^H`.
    pub fn recompose(&self, values: &[f64]) -> CMatrix {
        let scaled = {
            let mut u = self.vectors.clone();
            for (j, &v) in values.iter().enumerate() {
                u.column_mut(j).scale_mut(v);
            }
            u
        };
        let out = scaled * self.vectors.adjoint();
        (&out + out.adjoint()).scale(0.5)
    }
}

/// Eigendecomposition of a (pre-validated) Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    HermitianEigen { values, vectors }
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &RMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// A Hermitian `s x s` matrix, symmetrized on construction.
///
/// Houses correlation matrices (Λ, N, Ñ), Hamiltonian coefficients (ε) and
/// derived quantities (L, B). General complex matrices such as the posterior
/// displacement gain `K` are plain [`CMatrix`] values.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        hermitian_part_checked(m, HERMITICITY_TOLERANCE).map(Self)
    }

    /// Like [`HermitianMatrix::new`] with a caller-chosen relative tolerance.
    pub fn with_tolerance(m: CMatrix, tolerance: f64) -> Result<Self> {
        hermitian_part_checked(m, tolerance).map(Self)
    }

    pub fn from_real(m: &RMatrix) -> Result<Self> {
        Self::new(m.map(c))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(CMatrix::from_diagonal(&DVector::from_iterator(
            diag.len(),
            diag.iter().map(|&x| c(x)),
        )))
    }

    pub fn scalar(x: f64) -> Self {
        Self::from_diagonal(&[x])
    }

    pub fn identity(s: usize) -> Self {
        Self(CMatrix::identity(s, s))
    }

    pub fn zeros(s: usize) -> Self {
        Self(CMatrix::zeros(s, s))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eigen(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Validates that the matrix is positive semidefinite up to the clip tolerance.
    pub fn ensure_psd(&self) -> Result<()> {
        clip_spectrum(&self.eigenvalues()).map(|_| ())
    }

    /// Spectral calculus `U f(D) U^H` on the clipped (nonnegative) spectrum.
    pub fn psd_function(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let eig = self.eigen();
        let clipped = clip_spectrum(&eig.values)?;
        let mapped: Vec<f64> = clipped.into_iter().map(f).collect();
        Ok(Self(eig.recompose(&mapped)))
    }

    /// Spectral calculus `U f(D) U^H` on the raw spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let eig = self.eigen();
        let mapped: Vec<f64> = eig.values.iter().map(|&v| f(v)).collect();
        Self(eig.recompose(&mapped))
    }

    pub fn ensure_dim(&self, s: usize) -> Result<()> {
        if self.dim() == s {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: s,
                got: self.dim(),
            })
        }
    }
}

/// `g(x) = (x+1) log(x+1) - x log x`, the entropy of a one-mode thermal state
/// with mean photon number `x`.
pub fn g_scalar(x: f64, base: LogBase) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite);
    }
    if x < -CLIP_TOLERANCE {
        return Err(Error::NegativeArgument(x));
    }
    Ok(base.from_nats(g_nats(x.max(0.0))))
}

/// `g` in nats for `x >= 0`, written as `ln(1+x) + x ln(1+1/x)` so it stays
/// accurate at both ends of the range.
pub(crate) fn g_nats(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 1e-300 {
        x * (1.0 - x.ln())
    } else {
        x.ln_1p() + x * (1.0 / x).ln_1p()
    }
}

/// Matrix lift `U g(D) U^H` of a PSD Hermitian matrix.
pub fn g_matrix(a: &HermitianMatrix, base: LogBase) -> Result<HermitianMatrix> {
    a.psd_function(|x| base.from_nats(g_nats(x)))
}

/// `Sp g(A)`, the trace of [`g_matrix`], computed from the spectrum directly.
pub fn g_trace(a: &HermitianMatrix, base: LogBase) -> Result<f64> {
    let spectrum = clip_spectrum(&a.eigenvalues())?;
    Ok(base.from_nats(spectrum.into_iter().map(g_nats).sum()))
}

/// Positive semidefinite square root.
pub fn psd_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    a.psd_function(f64::sqrt)
}

/// Spectral function of a real symmetric PSD matrix.
pub fn real_psd_function(a: &RMatrix, f: impl Fn(f64) -> f64) -> Result<RMatrix> {
    let eig = a.clone().symmetric_eigen();
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let clipped = clip_spectrum(&values)?;
    let mut scaled = eig.eigenvectors.clone();
    for (j, v) in clipped.into_iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(v));
    }
    let out = scaled * eig.eigenvectors.transpose();
    Ok((&out + out.transpose()).scale(0.5))
}

/// The block-diagonal symplectic form with `[[0, 1], [-1, 0]]` blocks over
/// interleaved coordinates `(x1, p1, ..., xs, ps)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymplecticForm {
    modes: usize,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    /// Form matching a `2s x 2s` matrix.
    pub fn for_dimension(dim: usize) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidRange(format!(
                "phase-space dimension {dim} is not a positive even number"
            )));
        }
        Ok(Self::new(dim / 2))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> RMatrix {
        let n = 2 * self.modes;
        let mut m = RMatrix::zeros(n, n);
        for j in 0..self.modes {
            m[(2 * j, 2 * j + 1)] = 1.0;
            m[(2 * j + 1, 2 * j)] = -1.0;
        }
        m
    }

    /// `Δ^{-1} = -Δ`.
    pub fn inverse(&self) -> RMatrix {
        -self.matrix()
    }
}

/// Symplectic eigenvalues `ν_1 >= ... >= ν_s` of a real symmetric positive
/// definite `2s x 2s` matrix: the moduli of the eigenvalues of `Δ^{-1} α`.
///
/// `-(Δ^{-1} α)^2` is similar to the symmetric PSD matrix `A^T A` with
/// `A = α^{1/2} Δ^{-1} α^{1/2}`; its eigenvalues come in equal pairs `ν_j^2`.
pub fn symplectic_spectrum(alpha: &RMatrix, form: SymplecticForm) -> Result<Vec<f64>> {
    let n = 2 * form.modes();
    if alpha.nrows() != n || alpha.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.nrows(),
        });
    }
    let alpha = symmetric_part_checked(alpha.clone(), HERMITICITY_TOLERANCE)?;
    let min_eig = symmetric_eigenvalues(&alpha)[0];
    if min_eig <= 0.0 {
        return Err(Error::NotPositiveDefinite(min_eig));
    }
    let root = real_psd_function(&alpha, f64::sqrt)?;
    let a = &root * form.inverse() * &root;
    let squared = a.transpose() * &a;
    let squared = (&squared + squared.transpose()).scale(0.5);
    let mut values = symmetric_eigenvalues(&squared);
    values.reverse();
    let mut nus = Vec::with_capacity(form.modes());
    for pair in values.chunks(2) {
        let (hi, lo) = (pair[0], pair[1]);
        let gap = (hi - lo).abs();
        if gap > PAIRING_TOLERANCE * hi.abs().max(1.0) {
            return Err(Error::PairingFailure(gap));
        }
        nus.push((0.5 * (hi + lo)).max(0.0).sqrt());
    }
    Ok(nus)
}
