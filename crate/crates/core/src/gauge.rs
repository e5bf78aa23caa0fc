//! Closed forms for the gauge-covariant Gaussian measurement
//! `M(d²ˢz) = D(z) ρ_N D(z)* d²ˢz/πˢ`.
//!
//! States are gauge-invariant Gaussian states `ρ_Λ` described by their complex
//! correlation matrix `Λ = Tr a ρ a†`; the measurement by its noise matrix `N`.
//! Densities over outcomes are taken against `d²ˢz/πˢ`.
//!
//! No formula here inverts `N` or `Λ`: the noise enters only through the
//! spectral functions `√(N(N+I))` and `√(N(N+I)⁻¹)`, both well defined at
//! `N = 0` (heterodyne).

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matfun::{g_trace, CMatrix, HermitianMatrix, LogBase};

/// Pre-check tolerance on the Hermiticity of the computed Ñ.
pub const NTILDE_HERMITICITY_TOLERANCE: f64 = 1e-9;
/// Margin below which the CP certificate fails.
pub const CP_TOLERANCE: f64 = 1e-9;

/// Gaussian measurement with noise correlation matrix `N >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeMeasurement {
    noise: HermitianMatrix,
}

impl GaugeMeasurement {
    pub fn new(noise: HermitianMatrix) -> Result<Self> {
        noise.ensure_psd()?;
        Ok(Self { noise })
    }

    /// Heterodyne measurement (`N = 0`) on `s` modes.
    pub fn heterodyne(s: usize) -> Self {
        Self {
            noise: HermitianMatrix::zeros(s),
        }
    }

    pub fn modes(&self) -> usize {
        self.noise.dim()
    }

    pub fn noise(&self) -> &HermitianMatrix {
        &self.noise
    }
}

/// Gauge-invariant Gaussian state with correlation matrix `Λ >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeState {
    lambda: HermitianMatrix,
}

impl GaugeState {
    pub fn new(lambda: HermitianMatrix) -> Result<Self> {
        lambda.ensure_psd()?;
        Ok(Self { lambda })
    }

    pub fn vacuum(s: usize) -> Self {
        Self {
            lambda: HermitianMatrix::zeros(s),
        }
    }

    pub fn modes(&self) -> usize {
        self.lambda.dim()
    }

    pub fn lambda(&self) -> &HermitianMatrix {
        &self.lambda
    }

    /// Mean energy `Sp εΛ` under the Hamiltonian `Σ ε_jk a_j† a_k`.
    pub fn energy(&self, epsilon: &HermitianMatrix) -> f64 {
        (epsilon.as_matrix() * self.lambda.as_matrix()).trace().re
    }
}

/// Parameters of the Gaussian posterior family `ρ̂(z) = D(Kz)* ρ_Ñ D(Kz)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugePosterior {
    pub k: CMatrix,
    pub ntilde: HermitianMatrix,
}

/// Parameters of the measurement-induced channel `Φ_M`, whose dual acts as
/// `D(w) -> exp(-w* B w) D(K* w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualChannelParams {
    pub k_adjoint: CMatrix,
    pub b: HermitianMatrix,
}

/// Outcome of the complete-positivity check `B >= ±½(I - KK*)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpCertificate {
    pub holds: bool,
    /// Minimum eigenvalue over both sign choices.
    pub margin: f64,
    /// Minimum eigenvalues of `B - ½(I - KK*)` and `B + ½(I - KK*)`.
    pub margins: [f64; 2],
}

fn check_dims(state: &GaugeState, meas: &GaugeMeasurement) -> Result<()> {
    state.lambda.ensure_dim(meas.modes())
}

fn identity(s: usize) -> CMatrix {
    CMatrix::identity(s, s)
}

fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidRange("matrix is singular".into()))
}

/// Covariance `Σ = Λ + N + I` of the output density
/// `p_Λ(z) = det(Σ)⁻¹ exp(-z* Σ⁻¹ z)`.
pub fn output_density_params(state: &GaugeState, meas: &GaugeMeasurement) -> Result<HermitianMatrix> {
    check_dims(state, meas)?;
    let s = meas.modes();
    HermitianMatrix::new(state.lambda.as_matrix() + meas.noise.as_matrix() + identity(s))
}

/// Evaluates the Gaussian output density `det(Σ)⁻¹ exp(-z* Σ⁻¹ z)` at `z`.
pub fn output_density(sigma: &HermitianMatrix, z: &[Complex64]) -> Result<f64> {
    let s = sigma.dim();
    if z.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: z.len(),
        });
    }
    let inv = inverse(sigma.as_matrix())?;
    let v = DVector::from_column_slice(z);
    let quad = (v.adjoint() * inv * &v)[(0, 0)].re;
    let det = sigma.as_matrix().determinant().re;
    Ok((-quad).exp() / det)
}

/// `√(N(N+I))` and `√(N(N+I)⁻¹)`.
fn noise_roots(noise: &HermitianMatrix) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let gain = noise.psd_function(|n| (n * (n + 1.0)).sqrt())?;
    let ratio = noise.psd_function(|n| (n / (n + 1.0)).sqrt())?;
    Ok((gain, ratio))
}

/// Posterior parameters
/// `K = √(N(N+I)) (Λ+N+I)⁻¹`,
/// `Ñ = √(N(N+I)⁻¹) Λ (Λ+N+I)⁻¹ √(N(N+I))`.
pub fn posterior_params(state: &GaugeState, meas: &GaugeMeasurement) -> Result<GaugePosterior> {
    let sigma = output_density_params(state, meas)?;
    let sigma_inv = inverse(sigma.as_matrix())?;
    let (gain, ratio) = noise_roots(&meas.noise)?;
    let k = gain.as_matrix() * &sigma_inv;
    let ntilde = ratio.as_matrix() * state.lambda.as_matrix() * &sigma_inv * gain.as_matrix();
    let ntilde = HermitianMatrix::with_tolerance(ntilde, NTILDE_HERMITICITY_TOLERANCE)?;
    Ok(GaugePosterior { k, ntilde })
}

/// Entropy reduction `Sp g(Λ) - Sp g(Ñ)` of the measurement on `ρ_Λ`, which is
/// also its maximum over all states with correlation matrix `Λ`.
pub fn entropy_reduction_gauge(
    state: &GaugeState,
    meas: &GaugeMeasurement,
    base: LogBase,
) -> Result<f64> {
    let post = posterior_params(state, meas)?;
    Ok(g_trace(&state.lambda, base)? - g_trace(&post.ntilde, base)?)
}

/// Parameters of `√ρ_N = c ρ_L`: returns `(L, c²)` with
/// `L = N + √(N(N+I))` and `c² = det(√N + √(N+I))²`.
pub fn sqrt_gaussian_params(meas: &GaugeMeasurement) -> Result<(HermitianMatrix, f64)> {
    let noise = &meas.noise;
    let l = noise.psd_function(|n| n + (n * (n + 1.0)).sqrt())?;
    let root_sum = noise.psd_function(|n| n.sqrt() + (n + 1.0).sqrt())?;
    let det = root_sum.as_matrix().determinant().re;
    Ok((l, det * det))
}

/// `K*` and `B = ¼[(I+K) R⁻¹ (I+K*) + (I-K) R (I-K*)]` with `R = 2L + I`.
pub fn dual_channel_params(state: &GaugeState, meas: &GaugeMeasurement) -> Result<DualChannelParams> {
    let post = posterior_params(state, meas)?;
    let (l, _) = sqrt_gaussian_params(meas)?;
    let s = meas.modes();
    let id = identity(s);
    let r = l.as_matrix().scale(2.0) + &id;
    let r_inv = inverse(&r)?;
    let k = &post.k;
    let k_adj = k.adjoint();
    let plus = (&id + k) * &r_inv * (&id + &k_adj);
    let minus = (&id - k) * &r * (&id - &k_adj);
    let b = HermitianMatrix::new((plus + minus).scale(0.25))?;
    Ok(DualChannelParams { k_adjoint: k_adj, b })
}

/// Checks `B ∓ ½(I - KK*) >= 0`.
pub fn cp_certificate(params: &DualChannelParams) -> CpCertificate {
    let s = params.b.dim();
    let k = params.k_adjoint.adjoint();
    let half = (identity(s) - &k * &params.k_adjoint).scale(0.5);
    let min_eig = |m: CMatrix| {
        HermitianMatrix::with_tolerance(m, 1e-8)
            .map(|h| h.min_eigenvalue())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let lower = min_eig(params.b.as_matrix() - &half);
    let upper = min_eig(params.b.as_matrix() + &half);
    let margin = lower.min(upper);
    CpCertificate {
        holds: margin >= -CP_TOLERANCE,
        margin,
        margins: [lower, upper],
    }
}

/// Moment map of gauge averaging: the phase-averaged state keeps the normal
/// moments `Λ` and loses the first moments and the anomalous moments.
pub fn gauge_average_correlation(
    first_moments: &[Complex64],
    lambda: &HermitianMatrix,
    anomalous: &CMatrix,
) -> Result<GaugeState> {
    let s = lambda.dim();
    if first_moments.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: first_moments.len(),
        });
    }
    if anomalous.nrows() != s || anomalous.ncols() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: anomalous.nrows(),
        });
    }
    GaugeState::new(lambda.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_pair(lambda: f64, noise: f64) -> (GaugeState, GaugeMeasurement) {
        (
            GaugeState::new(HermitianMatrix::scalar(lambda)).unwrap(),
            GaugeMeasurement::new(HermitianMatrix::scalar(noise)).unwrap(),
        )
    }

    fn g2(x: f64) -> f64 {
        ((x + 1.0) * (x + 1.0).log2()) - if x > 0.0 { x * x.log2() } else { 0.0 }
    }

    #[test]
    fn output_covariance_examples() {
        let (st, m) = scalar_pair(0.0, 0.0);
        assert_abs_diff_eq!(output_density_params(&st, &m).unwrap().trace(), 1.0);
        let (st, m) = scalar_pair(1.0, 1.0);
        let sigma = output_density_params(&st, &m).unwrap();
        assert_abs_diff_eq!(sigma.trace(), 3.0);
        assert_abs_diff_eq!(output_density(&sigma, &[Complex64::new(0.0, 0.0)]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        let st = GaugeState::new(HermitianMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        let m = GaugeMeasurement::new(HermitianMatrix::identity(2)).unwrap();
        let sigma = output_density_params(&st, &m).unwrap();
        assert_abs_diff_eq!(sigma.as_matrix()[(0, 0)].re, 3.0);
        assert_abs_diff_eq!(sigma.as_matrix()[(1, 1)].re, 4.0);
        assert_abs_diff_eq!(sigma.as_matrix()[(0, 1)].norm(), 0.0);
    }

    #[test]
    fn posterior_examples() {
        let (st, _) = scalar_pair(2.0, 0.0);
        let post = posterior_params(&st, &GaugeMeasurement::heterodyne(1)).unwrap();
        assert_eq!(post.k[(0, 0)].norm(), 0.0);
        assert_eq!(post.ntilde.trace(), 0.0);

        let (st, m) = scalar_pair(1.0, 1.0);
        let post = posterior_params(&st, &m).unwrap();
        assert_abs_diff_eq!(post.k[(0, 0)].re, 2.0_f64.sqrt() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(post.ntilde.trace(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn scalar_ntilde_matches_one_mode_form() {
        for &(e, n) in &[(0.3, 4.0), (1.0, 1.0), (7.0, 0.25), (12.0, 20.0)] {
            let (st, m) = scalar_pair(e, n);
            let post = posterior_params(&st, &m).unwrap();
            assert_abs_diff_eq!(post.ntilde.trace(), n * e / (n + e + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn entropy_reduction_examples() {
        let (st, _) = scalar_pair(1.0, 0.0);
        let er = entropy_reduction_gauge(&st, &GaugeMeasurement::heterodyne(1), LogBase::Bits).unwrap();
        assert_abs_diff_eq!(er, 2.0, epsilon = 1e-14);
        let (st, m) = scalar_pair(1.0, 1.0);
        let er = entropy_reduction_gauge(&st, &m, LogBase::Bits).unwrap();
        assert_abs_diff_eq!(er, 2.0 - g2(1.0 / 3.0), epsilon = 1e-12);
        assert_abs_diff_eq!(er, 0.91829583405449, epsilon = 1e-12);
        let (st, m) = scalar_pair(0.0, 5.0);
        assert_eq!(entropy_reduction_gauge(&st, &m, LogBase::Bits).unwrap(), 0.0);
    }

    #[test]
    fn sqrt_gaussian_examples() {
        let (l, c2) = sqrt_gaussian_params(&GaugeMeasurement::heterodyne(1)).unwrap();
        assert_eq!(l.trace(), 0.0);
        assert_abs_diff_eq!(c2, 1.0);
        let (_, m) = scalar_pair(0.0, 1.0);
        let (l, c2) = sqrt_gaussian_params(&m).unwrap();
        let r2 = 2.0_f64.sqrt();
        assert_abs_diff_eq!(l.trace(), 1.0 + r2, epsilon = 1e-14);
        assert_abs_diff_eq!(c2, (1.0 + r2).powi(2), epsilon = 1e-13);
        // c² = det(2L + I)
        assert_abs_diff_eq!(c2, 2.0 * l.trace() + 1.0, epsilon = 1e-13);
        let m = GaugeMeasurement::new(HermitianMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        let (l, _) = sqrt_gaussian_params(&m).unwrap();
        assert_abs_diff_eq!(l.as_matrix()[(0, 0)].re, 1.0 + r2, epsilon = 1e-14);
        assert_abs_diff_eq!(l.as_matrix()[(1, 1)].re, 3.0 + 2.0 * 3.0_f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn dual_channel_examples() {
        // N = 0: K = 0, R = I, B = ½ I
        let (st, _) = scalar_pair(1.0, 0.0);
        let p = dual_channel_params(&st, &GaugeMeasurement::heterodyne(1)).unwrap();
        assert_eq!(p.k_adjoint[(0, 0)].norm(), 0.0);
        assert_abs_diff_eq!(p.b.trace(), 0.5, epsilon = 1e-15);

        let (st, m) = scalar_pair(1.0, 1.0);
        let p = dual_channel_params(&st, &m).unwrap();
        assert_abs_diff_eq!(p.b.trace(), 0.5, epsilon = 1e-14);
        let cert = cp_certificate(&p);
        assert!(cert.holds);
        assert_abs_diff_eq!(cert.margins[0], 1.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cert.margins[1], 8.0 / 9.0, epsilon = 1e-14);

        let (st, m) = scalar_pair(0.0, 2.0);
        let p = dual_channel_params(&st, &m).unwrap();
        assert_abs_diff_eq!(p.k_adjoint[(0, 0)].re, 6.0_f64.sqrt() / 3.0, epsilon = 1e-15);
        assert!(cp_certificate(&p).holds);
    }

    #[test]
    fn cp_boundary_case() {
        let (st, _) = scalar_pair(0.0, 0.0);
        let p = dual_channel_params(&st, &GaugeMeasurement::heterodyne(1)).unwrap();
        let cert = cp_certificate(&p);
        assert!(cert.holds);
        assert_abs_diff_eq!(cert.margin, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gauge_average_moment_map() {
        let z0 = Complex64::new(0.6, -0.8);
        let st = gauge_average_correlation(
            &[z0],
            &HermitianMatrix::scalar(z0.norm_sqr()),
            &CMatrix::from_element(1, 1, z0 * z0),
        )
        .unwrap();
        assert_abs_diff_eq!(st.lambda().trace(), 1.0, epsilon = 1e-15);
        let st = gauge_average_correlation(
            &[Complex64::new(0.0, 0.0)],
            &HermitianMatrix::scalar(1.0),
            &CMatrix::from_element(1, 1, Complex64::new(0.5_f64.sqrt(), 0.0)),
        )
        .unwrap();
        assert_eq!(st.lambda().trace(), 1.0);
        assert!(gauge_average_correlation(&[], &HermitianMatrix::scalar(1.0), &CMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let st = GaugeState::vacuum(2);
        let m = GaugeMeasurement::heterodyne(1);
        assert!(matches!(
            entropy_reduction_gauge(&st, &m, LogBase::Bits),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn negative_correlation_rejected() {
        assert!(GaugeState::new(HermitianMatrix::scalar(-0.5)).is_err());
        assert!(GaugeMeasurement::new(HermitianMatrix::scalar(-0.5)).is_err());
    }
}
