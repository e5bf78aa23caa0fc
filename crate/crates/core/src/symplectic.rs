//! General (not necessarily gauge-symmetric) Gaussian measurements
//! `M(d²ˢz) = W(z) ρ_β W(z)* d²ˢz/(2π)ˢ` on centered Gaussian inputs `ρ_α`.
//!
//! Covariances are real symmetric `2s x 2s` matrices over interleaved
//! coordinates `(x1, p1, ..., xs, ps)`; the vacuum is `½ I`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauge::{GaugeMeasurement, GaugeState};
use crate::matfun::{
    clip_spectrum, g_nats, hermitian_eigenvalues, real_psd_function, symmetric_eigenvalues,
    symmetric_part_checked, symplectic_spectrum, CMatrix, LogBase, RMatrix, SymplecticForm,
    HERMITICITY_TOLERANCE,
};

/// Admissibility slack: `α + (i/2)Δ` may have eigenvalues down to this value.
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-9;
/// Pre-check tolerance for the symmetry of the computed posterior covariance.
pub const POSTERIOR_SYMMETRY_TOLERANCE: f64 = 1e-8;
/// Condition number of `α + β` above which it is treated as singular.
pub const SINGULAR_SUM_CONDITION: f64 = 1e12;
/// Clip tolerance for the spectrum of `I + (2βΔ⁻¹)⁻²`.
const FACTOR_CLIP: f64 = 1e-10;

/// Result of the admissibility test `α + (i/2)Δ >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Minimum eigenvalue of `α + (i/2)Δ`.
    pub margin: f64,
}

/// Checks whether a real symmetric matrix is an admissible quantum covariance.
pub fn validate_covariance(alpha: &RMatrix, form: SymplecticForm) -> Result<Admissibility> {
    let n = 2 * form.modes();
    if alpha.nrows() != n || alpha.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.nrows(),
        });
    }
    let alpha = symmetric_part_checked(alpha.clone(), HERMITICITY_TOLERANCE)?;
    let delta = form.matrix();
    let m = CMatrix::from_fn(n, n, |i, j| Complex64::new(alpha[(i, j)], 0.5 * delta[(i, j)]));
    let margin = hermitian_eigenvalues(&m)[0];
    Ok(Admissibility {
        admissible: margin >= -ADMISSIBILITY_TOLERANCE,
        margin,
    })
}

/// An admissible covariance matrix of a centered Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct RealCovariance {
    alpha: RMatrix,
    form: SymplecticForm,
}

impl RealCovariance {
    pub fn new(alpha: RMatrix) -> Result<Self> {
        let form = SymplecticForm::for_dimension(alpha.nrows())?;
        let check = validate_covariance(&alpha, form)?;
        if !check.admissible {
            return Err(Error::InvalidCovariance(check.margin));
        }
        let alpha = symmetric_part_checked(alpha, HERMITICITY_TOLERANCE)?;
        Ok(Self { alpha, form })
    }

    /// `½ I`, the vacuum on `s` modes.
    pub fn vacuum(s: usize) -> Self {
        Self {
            alpha: RMatrix::identity(2 * s, 2 * s).scale(0.5),
            form: SymplecticForm::new(s),
        }
    }

    pub fn modes(&self) -> usize {
        self.form.modes()
    }

    pub fn form(&self) -> SymplecticForm {
        self.form
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.alpha
    }

    pub fn symplectic_spectrum(&self) -> Result<Vec<f64>> {
        symplectic_spectrum(&self.alpha, self.form)
    }
}

/// Gaussian observable whose POVM is generated by the state `ρ_β`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralMeasurement {
    beta: RealCovariance,
}

impl GeneralMeasurement {
    pub fn new(beta: RealCovariance) -> Self {
        Self { beta }
    }

    pub fn beta(&self) -> &RealCovariance {
        &self.beta
    }

    pub fn modes(&self) -> usize {
        self.beta.modes()
    }
}

/// Von Neumann entropy `Σ_j g(ν_j - ½)` of the Gaussian state `ρ_α`.
pub fn gaussian_entropy(alpha: &RealCovariance, base: LogBase) -> Result<f64> {
    let nus = alpha.symplectic_spectrum()?;
    Ok(base.from_nats(nus.into_iter().map(|nu| g_nats((nu - 0.5).max(0.0))).sum()))
}

/// Posterior covariance
/// `α̃ = β - √(I+(2βΔ⁻¹)⁻²) β (α+β)⁻¹ β √(I+(2Δ⁻¹β)⁻²)`.
///
/// With `A = β^{1/2} Δ⁻¹ β^{1/2}` (antisymmetric) the two square-root factors
/// are `β^{1/2} F β^{-1/2}` and `β^{-1/2} F β^{1/2}`, where
/// `F = √(I + (2A)⁻²)` is symmetric PSD with eigenvalues `√(1 - 1/(2ν)²)`.
/// Substituting gives the manifestly symmetric form
/// `α̃ = β - β^{1/2} F β^{1/2} (α+β)⁻¹ β^{1/2} F β^{1/2}`.
pub fn posterior_covariance(alpha: &RealCovariance, beta: &RealCovariance) -> Result<RealCovariance> {
    if alpha.modes() != beta.modes() {
        return Err(Error::DimensionMismatch {
            expected: beta.modes(),
            got: alpha.modes(),
        });
    }
    let n = 2 * beta.modes();
    let sum = alpha.matrix() + beta.matrix();
    let sum_eigs = symmetric_eigenvalues(&sum);
    let condition = sum_eigs[n - 1] / sum_eigs[0];
    if !(sum_eigs[0] > 0.0) || condition > SINGULAR_SUM_CONDITION {
        return Err(Error::SingularSum(condition.abs()));
    }
    let sum_inv = sum
        .try_inverse()
        .ok_or(Error::SingularSum(f64::INFINITY))?;

    let factor = sqrt_factor(beta)?;
    let correction = &factor * sum_inv * factor.transpose();
    let tilde = beta.matrix() - correction;
    let tilde = symmetric_part_checked(tilde, POSTERIOR_SYMMETRY_TOLERANCE)?;
    RealCovariance::new(tilde)
}

/// `β^{1/2} F β^{1/2}`, the combination `√(I+(2βΔ⁻¹)⁻²) β` of the posterior formula.
fn sqrt_factor(beta: &RealCovariance) -> Result<RMatrix> {
    let root = real_psd_function(beta.matrix(), f64::sqrt)?;
    let f = inner_factor(beta, &root)?;
    Ok(&root * f * &root)
}

/// `F = √(I + (2A)⁻²)` with `A = β^{1/2} Δ⁻¹ β^{1/2}`.
fn inner_factor(beta: &RealCovariance, root: &RMatrix) -> Result<RMatrix> {
    let n = 2 * beta.modes();
    let a = root * beta.form().inverse() * root;
    let two_a_sq = (&a * &a).scale(4.0);
    let inv = two_a_sq
        .try_inverse()
        .ok_or_else(|| Error::InvalidCovariance(0.0))?;
    let t = RMatrix::identity(n, n) + inv;
    let t = (&t + t.transpose()).scale(0.5);
    let eig = t.symmetric_eigen();
    let values: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&v| if (-FACTOR_CLIP..0.0).contains(&v) { 0.0 } else { v })
        .collect();
    let values = clip_spectrum(&values)?;
    let mut scaled = eig.eigenvectors.clone();
    for (j, v) in values.into_iter().enumerate() {
        scaled.column_mut(j).scale_mut(v.sqrt());
    }
    let f = scaled * eig.eigenvectors.transpose();
    Ok((&f + f.transpose()).scale(0.5))
}

/// The left factor `√(I+(2βΔ⁻¹)⁻²) = β^{1/2} F β^{-1/2}` as an explicit matrix.
pub fn left_sqrt_factor(beta: &RealCovariance) -> Result<RMatrix> {
    let root = real_psd_function(beta.matrix(), f64::sqrt)?;
    let root_inv = real_psd_function(beta.matrix(), |x| 1.0 / x.sqrt())?;
    let f = inner_factor(beta, &root)?;
    Ok(&root * f * root_inv)
}

/// `H(ρ_α) - H(ρ_α̃)`, the maximal entropy reduction over states with covariance `α`.
pub fn entropy_reduction_general(
    alpha: &RealCovariance,
    meas: &GeneralMeasurement,
    base: LogBase,
) -> Result<f64> {
    let tilde = posterior_covariance(alpha, meas.beta())?;
    Ok(gaussian_entropy(alpha, base)? - gaussian_entropy(&tilde, base)?)
}

/// Real covariance `Λ + I/2` of a gauge-invariant Gaussian state: the `(j, k)`
/// block is `[[Re Λ_jk + ½δ_jk, -Im Λ_jk], [Im Λ_jk, Re Λ_jk + ½δ_jk]]`.
pub fn covariance_from_correlation(lambda: &CMatrix) -> Result<RealCovariance> {
    let s = lambda.nrows();
    let mut alpha = RMatrix::zeros(2 * s, 2 * s);
    for j in 0..s {
        for k in 0..s {
            let l = lambda[(j, k)];
            let diag = l.re + if j == k { 0.5 } else { 0.0 };
            alpha[(2 * j, 2 * k)] = diag;
            alpha[(2 * j + 1, 2 * k + 1)] = diag;
            alpha[(2 * j, 2 * k + 1)] = -l.im;
            alpha[(2 * j + 1, 2 * k)] = l.im;
        }
    }
    RealCovariance::new(alpha)
}

/// Maps a gauge-invariant pair `(Λ, N)` to `(α, β) = (Λ + I/2, N + I/2)`.
pub fn embed_gauge_invariant(
    state: &GaugeState,
    meas: &GaugeMeasurement,
) -> Result<(RealCovariance, GeneralMeasurement)> {
    state.lambda().ensure_dim(meas.modes())?;
    let alpha = covariance_from_correlation(state.lambda().as_matrix())?;
    let beta = covariance_from_correlation(meas.noise().as_matrix())?;
    Ok((alpha, GeneralMeasurement::new(beta)))
}

/// One-mode squeezed thermal covariance `diag(ν e^{2r}, ν e^{-2r})`.
pub fn squeezed_thermal(nu: f64, r: f64) -> Result<RealCovariance> {
    RealCovariance::new(RMatrix::from_diagonal(&DVector::from_vec(vec![
        nu * (2.0 * r).exp(),
        nu * (-2.0 * r).exp(),
    ])))
}
