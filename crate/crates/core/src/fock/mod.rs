//! Truncated Fock-space oracle.
//!
//! Dense simulation of one- and two-mode bosonic systems in the number basis,
//! used to evaluate the entropy-reduction integral by brute force and check
//! the closed forms of [`crate::gauge`] and [`crate::symplectic`] against it.
//! Two-mode operators use the product basis `|n1, n2>` at index `n1 * d + n2`.

mod displacement;
mod grid;
mod oracle;
pub mod random;

pub use displacement::{displacement, Displacement, DisplacementGenerator};
pub use grid::{
    GridScheme, OutcomeGrid, OutcomePoint, DEFAULT_MASS_TOLERANCE, MONTE_CARLO_MASS_TOLERANCE,
};
pub use oracle::{
    default_grid, er_numeric, er_numeric_truncation_checked, er_numeric_with, posterior_state,
    povm_density, ErEstimate, FockOracle, OracleSettings, Posterior, TruncationCheck,
};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matfun::{
    hermitian_eigen, hermitian_eigenvalues, hermitian_part_checked, CMatrix, HermitianMatrix,
    LogBase,
};

/// Allowed deviation of a density operator's trace from 1.
pub const DENSITY_TRACE_TOLERANCE: f64 = 1e-6;
/// Most negative eigenvalue tolerated in a density operator.
pub const DENSITY_EIGENVALUE_FLOOR: f64 = -1e-10;
/// Eigenvalues below this are dropped from `-Σ λ log λ`.
pub const ENTROPY_EIGENVALUE_CUTOFF: f64 = 1e-14;
/// Largest thermal tail mass beyond the cutoff accepted by [`thermal_state`].
pub const THERMAL_TAIL_TOLERANCE: f64 = 1e-8;

/// A dense operator on `s` modes, each truncated to `cutoff` levels.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    modes: usize,
    cutoff: usize,
    matrix: CMatrix,
}

impl FockOperator {
    pub fn new(modes: usize, cutoff: usize, matrix: CMatrix) -> Result<Self> {
        if !(1..=2).contains(&modes) {
            return Err(Error::InvalidRange(format!(
                "the Fock oracle supports 1 or 2 modes, got {modes}"
            )));
        }
        let dim = cutoff.pow(modes as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            modes,
            cutoff,
            matrix,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Hermitian, trace within [`DENSITY_TRACE_TOLERANCE`] of 1, eigenvalues
    /// above [`DENSITY_EIGENVALUE_FLOOR`].
    pub fn validate_density(&self) -> Result<()> {
        hermitian_part_checked(self.matrix.clone(), 1e-9)?;
        let tr = self.trace();
        if (tr - 1.0).abs() > DENSITY_TRACE_TOLERANCE {
            return Err(Error::InvalidRange(format!("density trace {tr} is not 1")));
        }
        let min = hermitian_eigenvalues(&self.matrix)[0];
        if min < DENSITY_EIGENVALUE_FLOOR {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(())
    }

    /// Von Neumann entropy, dropping eigenvalues below [`ENTROPY_EIGENVALUE_CUTOFF`].
    pub fn entropy(&self, base: LogBase) -> f64 {
        spectrum_entropy(&hermitian_eigenvalues(&self.matrix), base)
    }

    /// Mean total photon number `Tr ρ Σ_j a_j† a_j`.
    pub fn mean_number(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.matrix[(i, i)].re * total_number(i, self.modes, self.cutoff) as f64)
            .sum()
    }

    /// Trace distance `½ ||A - B||_1`.
    pub fn trace_distance(&self, other: &FockOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let diff = (&diff + diff.adjoint()).scale(0.5);
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Mixture `t A + (1 - t) B`.
    pub fn mix(&self, other: &FockOperator, t: f64) -> Result<FockOperator> {
        if self.dim() != other.dim() || self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        FockOperator::new(
            self.modes,
            self.cutoff,
            self.matrix.scale(t) + other.matrix.scale(1.0 - t),
        )
    }
}

/// `-Σ λ log λ` over eigenvalues above [`ENTROPY_EIGENVALUE_CUTOFF`].
pub fn spectrum_entropy(values: &[f64], base: LogBase) -> f64 {
    let nats: f64 = values
        .iter()
        .filter(|&&v| v > ENTROPY_EIGENVALUE_CUTOFF)
        .map(|&v| -v * v.ln())
        .sum();
    base.from_nats(nats)
}

fn total_number(index: usize, modes: usize, cutoff: usize) -> usize {
    match modes {
        1 => index,
        _ => index / cutoff + index % cutoff,
    }
}

/// Single-mode annihilation operator on `d` levels.
pub fn annihilation(d: usize) -> CMatrix {
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Annihilation operator of mode `j` on an `s`-mode product space.
pub fn mode_annihilation(modes: usize, cutoff: usize, j: usize) -> CMatrix {
    let a = annihilation(cutoff);
    match (modes, j) {
        (1, _) => a,
        (_, 0) => a.kronecker(&CMatrix::identity(cutoff, cutoff)),
        _ => CMatrix::identity(cutoff, cutoff).kronecker(&a),
    }
}

/// Number of levels needed so that a thermal state with mean `n` leaves a
/// tail mass below `tail` beyond the cutoff.
pub fn thermal_cutoff(n: f64, tail: f64) -> usize {
    if n <= 0.0 {
        return 1;
    }
    let ratio = n / (n + 1.0);
    ((tail.ln() / ratio.ln()).ceil() as usize).max(1)
}

/// Heuristic truncation for one-mode checks with parameters up to `max_param`:
/// `max(24, ceil(12 (x + 1)))`, raised if needed so the thermal tail stays below 1e-10.
pub fn recommended_cutoff(max_param: f64) -> usize {
    let heuristic = (12.0 * (max_param + 1.0)).ceil() as usize;
    heuristic.max(24).max(thermal_cutoff(max_param, 1e-10))
}

/// One-mode thermal state `p_n = N^n / (N+1)^(n+1)` on `d` levels.
pub fn thermal_state(n: f64, d: usize) -> Result<FockOperator> {
    thermal_state_with_tail(n, d, THERMAL_TAIL_TOLERANCE)
}

/// [`thermal_state`] with a caller-chosen tail tolerance. The state is not
/// renormalized: the missing tail shows up as trace deficit.
pub fn thermal_state_with_tail(n: f64, d: usize, tail_tolerance: f64) -> Result<FockOperator> {
    if d < 2 {
        return Err(Error::InvalidRange(format!("cutoff {d} must be at least 2")));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::InvalidRange(format!("mean photon number {n}")));
    }
    let ratio = n / (n + 1.0);
    let tail = ratio.powi(d as i32);
    if tail > tail_tolerance {
        return Err(Error::TruncationTooSmall(format!(
            "thermal tail mass {tail:.3e} beyond {d} levels exceeds {tail_tolerance:.1e}"
        )));
    }
    FockOperator::new(1, d, CMatrix::from_diagonal(&thermal_weights(n, d).map(|p| Complex64::new(p, 0.0))))
}

fn thermal_weights(n: f64, d: usize) -> DVector<f64> {
    let ratio = n / (n + 1.0);
    DVector::from_iterator(
        d,
        (0..d).map(|k| if k == 0 { 1.0 / (n + 1.0) } else { ratio.powi(k as i32) / (n + 1.0) }),
    )
}

/// Gauge-invariant Gaussian state `ρ_Λ` on one or two modes.
///
/// Built as `det(I+Λ)⁻¹ exp(-a† Θ a)` with `Θ = log(I + Λ⁻¹)`; zero
/// eigenvalues of `Λ` (vacuum directions) are represented by a large finite
/// `Θ` eigenvalue.
pub fn gauge_gaussian_state(lambda: &HermitianMatrix, d: usize, tail_tolerance: f64) -> Result<FockOperator> {
    let s = lambda.dim();
    lambda.ensure_psd()?;
    if s == 1 {
        return thermal_state_with_tail(lambda.trace().max(0.0), d, tail_tolerance);
    }
    if s != 2 {
        return Err(Error::InvalidRange(format!(
            "the Fock oracle supports 1 or 2 modes, got {s}"
        )));
    }
    let eig = lambda.eigen();
    let tail: f64 = eig
        .values
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            (l / (l + 1.0)).powi(d as i32)
        })
        .sum();
    if tail > tail_tolerance {
        return Err(Error::TruncationTooSmall(format!(
            "Gaussian tail mass {tail:.3e} beyond {d} levels per mode exceeds {tail_tolerance:.1e}"
        )));
    }
    const MAX_THETA: f64 = 700.0;
    let thetas: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| {
            if l <= 0.0 {
                MAX_THETA
            } else {
                (1.0 / l).ln_1p().min(MAX_THETA)
            }
        })
        .collect();
    let theta = eig.recompose(&thetas);
    let ops = [mode_annihilation(2, d, 0), mode_annihilation(2, d, 1)];
    let dim = d * d;
    let mut generator = CMatrix::zeros(dim, dim);
    for j in 0..2 {
        for k in 0..2 {
            let coeff = theta[(j, k)];
            if coeff.norm() > 0.0 {
                generator += (ops[j].adjoint() * &ops[k]).scale(1.0) * coeff;
            }
        }
    }
    let generator = (&generator + generator.adjoint()).scale(0.5);
    let g_eig = hermitian_eigen(&generator);
    let norm: f64 = eig.values.iter().map(|&l| 1.0 / (1.0 + l.max(0.0))).product();
    let weights: Vec<f64> = g_eig.values.iter().map(|&g| norm * (-g).exp()).collect();
    FockOperator::new(2, d, g_eig.recompose(&weights))
}

/// Normalized pure state `|ψ><ψ|`.
pub fn pure_state(modes: usize, cutoff: usize, psi: &DVector<Complex64>) -> Result<FockOperator> {
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::InvalidRange("zero state vector".into()));
    }
    let psi = psi.unscale(norm);
    FockOperator::new(modes, cutoff, &psi * psi.adjoint())
}

/// Coherent-state amplitudes `e^{-|z|²/2} z^n / √n!` on `d` levels (not renormalized).
pub fn coherent_amplitudes(z: Complex64, d: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(d);
    let mut amp = Complex64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    for n in 0..d {
        if n > 0 {
            amp = amp * z / (n as f64).sqrt();
        }
        v[n] = amp;
    }
    v
}

/// Coherent state `|z>` (one entry of `z` per mode), renormalized after truncation.
pub fn coherent_state(z: &[Complex64], d: usize) -> Result<FockOperator> {
    let psi = match z {
        [z0] => coherent_amplitudes(*z0, d),
        [z0, z1] => coherent_amplitudes(*z0, d).kronecker(&coherent_amplitudes(*z1, d)),
        _ => {
            return Err(Error::InvalidRange(format!(
                "the Fock oracle supports 1 or 2 modes, got {}",
                z.len()
            )))
        }
    };
    pure_state(z.len(), d, &psi)
}

/// First, normal and anomalous moments of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMoments {
    /// `m_j = Tr ρ a_j`.
    pub first: Vec<Complex64>,
    /// `Λ_jk = Tr a_j ρ a_k†`.
    pub normal: CMatrix,
    /// `A_jk = Tr ρ a_j a_k`.
    pub anomalous: CMatrix,
}

pub fn normal_moments(rho: &FockOperator) -> NormalMoments {
    let s = rho.modes();
    let ops: Vec<CMatrix> = (0..s).map(|j| mode_annihilation(s, rho.cutoff(), j)).collect();
    let m = rho.matrix();
    let first = ops.iter().map(|a| (m * a).trace()).collect();
    let normal = CMatrix::from_fn(s, s, |j, k| (m * ops[k].adjoint() * &ops[j]).trace());
    let anomalous = CMatrix::from_fn(s, s, |j, k| (m * &ops[j] * &ops[k]).trace());
    NormalMoments {
        first,
        normal,
        anomalous,
    }
}

/// Phase average `∫ U_φ* ρ U_φ dφ/2π`: keeps only matrix elements between
/// basis states with equal total photon number.
pub fn gauge_average(rho: &FockOperator) -> FockOperator {
    let (s, d) = (rho.modes(), rho.cutoff());
    let m = CMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        if total_number(i, s, d) == total_number(j, s, d) {
            rho.matrix()[(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    FockOperator {
        modes: s,
        cutoff: d,
        matrix: m,
    }
}
