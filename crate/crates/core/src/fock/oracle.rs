//! Brute-force posterior states and entropy reduction.
//!
//! For outcome `z` the posterior is `p⁻¹ √ρ_N D(z)† ρ D(z) √ρ_N` on the
//! noise space. Writing `ρ = F F†` and `C = F† D(z) √ρ_N`, the density is
//! `p = ||C||²_F` and the posterior spectrum is that of `C C† / p`, which is
//! at most `rank ρ` wide. Integration uses that reduced form.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::displacement::DisplacementGenerator;
use super::grid::OutcomeGrid;
use super::{
    gauge_gaussian_state, normal_moments, spectrum_entropy, thermal_cutoff, FockOperator,
};
use crate::error::{Error, Result};
use crate::exec::{self, compensated_sum, Execution};
use crate::matfun::{hermitian_eigen, hermitian_eigenvalues, CMatrix, HermitianMatrix, LogBase};

/// Outcomes with density below this are skipped.
pub const NEGLIGIBLE_DENSITY: f64 = 1e-14;
/// Largest accepted change of the estimate between `d` and `2d` levels.
pub const TRUNCATION_TOLERANCE: f64 = 1e-3;
/// Default Monte Carlo sample count for two-mode estimates.
pub const DEFAULT_MONTE_CARLO_SAMPLES: usize = 4000;
/// Inflation of the proposal covariance over the Gaussian output covariance.
pub const MONTE_CARLO_INFLATION: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    /// Thermal tail mass of the noise state discarded by the output cutoff (one mode).
    pub noise_tail: f64,
    /// Same for two modes, where the product space grows quadratically.
    pub noise_tail_two_mode: f64,
    pub execution: Execution,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            noise_tail: 1e-12,
            noise_tail_two_mode: 1e-8,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErEstimate {
    pub value: f64,
    /// `|fine - coarse|` for trapezoid grids, standard error for Monte Carlo.
    pub error_estimate: f64,
    pub captured_mass: f64,
    pub input_entropy: f64,
    pub negligible_points: usize,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct Posterior {
    pub state: FockOperator,
    pub density: f64,
}

#[derive(Clone, Debug)]
enum NoiseFactor {
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

/// Measurement-side data for one noise matrix: the truncated `√ρ_N` and a
/// displacement generator large enough for the requested outcome range.
#[derive(Clone, Debug)]
pub struct FockOracle {
    modes: usize,
    input_cutoff: usize,
    output_cutoff: usize,
    sqrt_noise: NoiseFactor,
    generator: Arc<DisplacementGenerator>,
    settings: OracleSettings,
}

impl FockOracle {
    /// `noise` is the `s×s` noise correlation matrix `N` (`s ∈ {1, 2}`),
    /// `z_max` the largest `|z_j|` that will be queried.
    pub fn new(noise: &HermitianMatrix, input_cutoff: usize, z_max: f64, settings: OracleSettings) -> Result<Self> {
        noise.ensure_psd()?;
        let modes = noise.dim();
        if !(1..=2).contains(&modes) {
            return Err(Error::InvalidRange(format!(
                "the Fock oracle supports 1 or 2 modes, got {modes}"
            )));
        }
        if input_cutoff < 2 {
            return Err(Error::InvalidRange(format!("cutoff {input_cutoff} must be at least 2")));
        }
        if !z_max.is_finite() {
            return Err(Error::NonFinite);
        }
        let (output_cutoff, sqrt_noise) = if modes == 1 {
            let n = noise.trace().max(0.0);
            let d = thermal_cutoff(n, settings.noise_tail);
            let ratio = n / (n + 1.0);
            let w = (0..d)
                .map(|k| (ratio.powi(k as i32) / (n + 1.0)).sqrt())
                .collect();
            (d, NoiseFactor::Diagonal(w))
        } else {
            let eig = noise.eigen();
            let top = eig.values[1].max(0.0);
            let d = thermal_cutoff(top, settings.noise_tail_two_mode / 2.0).max(2);
            let diag = noise.as_matrix()[(0, 1)].norm() == 0.0;
            let rho_n = gauge_gaussian_state(noise, d, settings.noise_tail_two_mode)?;
            if diag {
                let w = (0..d * d).map(|i| rho_n.matrix()[(i, i)].re.max(0.0).sqrt()).collect();
                (d, NoiseFactor::Diagonal(w))
            } else {
                let e = hermitian_eigen(rho_n.matrix());
                let roots: Vec<f64> = e.values.iter().map(|v| v.max(0.0).sqrt()).collect();
                (d, NoiseFactor::Dense(e.recompose(&roots)))
            }
        };
        let levels = input_cutoff.max(output_cutoff);
        Ok(Self {
            modes,
            input_cutoff,
            output_cutoff,
            sqrt_noise,
            generator: DisplacementGenerator::shared(levels, z_max),
            settings,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn input_cutoff(&self) -> usize {
        self.input_cutoff
    }

    /// Levels per mode kept for the noise state (and hence the posterior).
    pub fn output_cutoff(&self) -> usize {
        self.output_cutoff
    }

    pub fn settings(&self) -> &OracleSettings {
        &self.settings
    }

    /// `[<m| D(z) |n>]` for input levels `m` and output levels `n`.
    pub fn displacement_block(&self, z: &[Complex64], rows: usize, cols: usize) -> Result<CMatrix> {
        if z.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                got: z.len(),
            });
        }
        let limit = self.generator.work_dim();
        if rows > limit || cols > limit {
            return Err(Error::TruncationTooSmall(format!(
                "block {rows}x{cols} exceeds working dimension {limit}"
            )));
        }
        Ok(match z {
            [z0] => self.generator.block(*z0, rows, cols),
            [z0, z1] => self
                .generator
                .block(*z0, rows, cols)
                .kronecker(&self.generator.block(*z1, rows, cols)),
            _ => unreachable!(),
        })
    }

    /// `D(z) √ρ_N` restricted to input rows and output columns.
    fn displaced_root(&self, z: &[Complex64]) -> Result<CMatrix> {
        let mut b = self.displacement_block(z, self.input_cutoff, self.output_cutoff)?;
        match &self.sqrt_noise {
            NoiseFactor::Diagonal(w) => {
                for (j, &wj) in w.iter().enumerate() {
                    b.column_mut(j).scale_mut(wj);
                }
                Ok(b)
            }
            NoiseFactor::Dense(root) => Ok(b * root),
        }
    }

    fn check_state(&self, rho: &FockOperator) -> Result<()> {
        if rho.modes() != self.modes || rho.cutoff() != self.input_cutoff {
            return Err(Error::DimensionMismatch {
                expected: self.input_cutoff.pow(self.modes as u32),
                got: rho.dim(),
            });
        }
        Ok(())
    }

    /// POVM density `m(z) = D(z) ρ_N D(z)†` on the input space.
    pub fn povm_density(&self, z: &[Complex64]) -> Result<FockOperator> {
        let br = self.displaced_root(z)?;
        FockOperator::new(self.modes, self.input_cutoff, &br * br.adjoint())
    }

    /// Output density `p_ρ(z) = Tr ρ m(z)`.
    pub fn output_density(&self, rho: &FockOperator, z: &[Complex64]) -> Result<f64> {
        self.check_state(rho)?;
        let br = self.displaced_root(z)?;
        Ok((br.adjoint() * rho.matrix() * br).trace().re)
    }

    /// Normalized posterior state on the noise space, with its density.
    pub fn posterior_state(&self, rho: &FockOperator, z: &[Complex64]) -> Result<Posterior> {
        self.check_state(rho)?;
        let br = self.displaced_root(z)?;
        let unnormalized = br.adjoint() * rho.matrix() * br;
        let density = unnormalized.trace().re;
        if !(density > NEGLIGIBLE_DENSITY) {
            return Err(Error::NegligibleOutcome(density));
        }
        let m = unnormalized.unscale(density);
        let m = (&m + m.adjoint()).scale(0.5);
        Ok(Posterior {
            state: FockOperator::new(self.modes, self.output_cutoff, m)?,
            density,
        })
    }

    /// `H(ρ) - ∫ p(z) H(ρ̂(z)) d²ˢz/πˢ` on the given grid.
    pub fn er_numeric(&self, rho: &FockOperator, grid: &OutcomeGrid, base: LogBase) -> Result<ErEstimate> {
        self.check_state(rho)?;
        rho.validate_density()?;
        if grid.modes() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                got: grid.modes(),
            });
        }
        let eig = hermitian_eigen(rho.matrix());
        let input_entropy = spectrum_entropy(&eig.values, base);
        let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
        let kept: Vec<usize> = (0..eig.values.len())
            .filter(|&k| eig.values[k] > 1e-14 * top.max(1.0))
            .collect();
        let factor_adj = CMatrix::from_fn(kept.len(), rho.dim(), |r, i| {
            eig.vectors[(i, kept[r])].conj() * eig.values[kept[r]].sqrt()
        });

        let values = exec::map(self.settings.execution, grid.points(), |point| {
            let br = self.displaced_root(&point.z)?;
            let c = &factor_adj * br;
            let p = c.norm_squared();
            if !(p > NEGLIGIBLE_DENSITY) {
                return Ok(None);
            }
            let gram = if c.nrows() <= c.ncols() {
                &c * c.adjoint()
            } else {
                c.adjoint() * &c
            };
            let spectrum: Vec<f64> = hermitian_eigenvalues(&gram).iter().map(|v| v / p).collect();
            Ok(Some((p, p * spectrum_entropy(&spectrum, base))))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let negligible_points = values.iter().filter(|v| v.is_none()).count();
        let pairs = || grid.points().iter().zip(values.iter());
        let mass = compensated_sum(pairs().filter_map(|(pt, v)| v.map(|(p, _)| pt.weight * p)));
        if (1.0 - mass).abs() > grid.mass_tolerance() {
            return Err(Error::GridMassDeficit {
                mass,
                tolerance: grid.mass_tolerance(),
            });
        }
        let posterior = compensated_sum(pairs().filter_map(|(pt, v)| v.map(|(_, ph)| pt.weight * ph)));
        let value = input_entropy - posterior;
        let error_estimate = if grid.is_monte_carlo() {
            let m = grid.len() as f64;
            let ys: Vec<f64> = pairs()
                .map(|(pt, v)| v.map_or(0.0, |(_, ph)| m * pt.weight * ph))
                .collect();
            let mean = compensated_sum(ys.iter().copied()) / m;
            let var = compensated_sum(ys.iter().map(|y| (y - mean).powi(2))) / (m - 1.0);
            (var / m).sqrt()
        } else {
            let coarse = compensated_sum(pairs().filter_map(|(pt, v)| v.map(|(_, ph)| pt.coarse_weight * ph)));
            (coarse - posterior).abs()
        };
        Ok(ErEstimate {
            value,
            error_estimate,
            captured_mass: mass,
            input_entropy,
            negligible_points,
            points: grid.len(),
        })
    }
}

fn oracle_for(rho: &FockOperator, noise: &HermitianMatrix, z_max: f64, settings: OracleSettings) -> Result<FockOracle> {
    if noise.dim() != rho.modes() {
        return Err(Error::DimensionMismatch {
            expected: rho.modes(),
            got: noise.dim(),
        });
    }
    FockOracle::new(noise, rho.cutoff(), z_max, settings)
}

/// Default outcome grid for `ρ` measured with noise `N`: a trapezoid rule of
/// radius `5σ` around the first moment for one mode, with
/// `σ² = <a†a> - |<a>|² + N + 1`; seeded Monte Carlo from the inflated
/// Gaussian output covariance for two modes.
pub fn default_grid(rho: &FockOperator, noise: &HermitianMatrix, seed: u64) -> Result<OutcomeGrid> {
    noise.ensure_dim(rho.modes())?;
    let mom = normal_moments(rho);
    let s = rho.modes();
    let first = CMatrix::from_fn(s, 1, |j, _| mom.first[j]);
    let centered = &mom.normal - &first * first.adjoint();
    let cov = centered + noise.as_matrix() + CMatrix::identity(s, s);
    let cov = HermitianMatrix::with_tolerance((&cov + cov.adjoint()).scale(0.5), 1e-9)?;
    if s == 1 {
        OutcomeGrid::for_output(mom.first[0], cov.trace().max(1.0).sqrt())
    } else {
        let inflated = HermitianMatrix::new(cov.as_matrix().scale(MONTE_CARLO_INFLATION))?;
        OutcomeGrid::monte_carlo(&mom.first, &inflated, DEFAULT_MONTE_CARLO_SAMPLES, seed)
    }
}

/// POVM density `D(z) ρ_N D(z)†` on `d` levels per mode.
pub fn povm_density(noise: &HermitianMatrix, z: &[Complex64], d: usize) -> Result<FockOperator> {
    let z_max = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    FockOracle::new(noise, d, z_max, OracleSettings::default())?.povm_density(z)
}

/// Posterior state `ρ̂(z)` and density `p_ρ(z)`.
pub fn posterior_state(rho: &FockOperator, noise: &HermitianMatrix, z: &[Complex64]) -> Result<Posterior> {
    let z_max = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    oracle_for(rho, noise, z_max, OracleSettings::default())?.posterior_state(rho, z)
}

/// Numerical entropy reduction of `ρ` under the gauge-covariant measurement with noise `N`.
pub fn er_numeric(rho: &FockOperator, noise: &HermitianMatrix, grid: &OutcomeGrid, base: LogBase) -> Result<ErEstimate> {
    er_numeric_with(rho, noise, grid, base, OracleSettings::default())
}

pub fn er_numeric_with(
    rho: &FockOperator,
    noise: &HermitianMatrix,
    grid: &OutcomeGrid,
    base: LogBase,
    settings: OracleSettings,
) -> Result<ErEstimate> {
    oracle_for(rho, noise, grid.max_abs(), settings)?.er_numeric(rho, grid, base)
}

/// Estimates at `d` and `2d` levels and their difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub at_d: ErEstimate,
    pub at_2d: ErEstimate,
    pub difference: f64,
}

/// Runs [`er_numeric`] for `make(d)` and `make(2d)` on the grid of the
/// `d`-level state; fails with `TruncationTooSmall` if they differ by more
/// than [`TRUNCATION_TOLERANCE`].
pub fn er_numeric_truncation_checked(
    make: impl Fn(usize) -> Result<FockOperator>,
    noise: &HermitianMatrix,
    d: usize,
    base: LogBase,
) -> Result<TruncationCheck> {
    let small = make(d)?;
    let large = make(2 * d)?;
    let grid = default_grid(&small, noise, 0)?;
    let at_d = er_numeric(&small, noise, &grid, base)?;
    let at_2d = er_numeric(&large, noise, &grid, base)?;
    let difference = (at_d.value - at_2d.value).abs();
    if difference > TRUNCATION_TOLERANCE {
        return Err(Error::TruncationTooSmall(format!(
            "estimate moved by {difference:.3e} between {d} and {} levels",
            2 * d
        )));
    }
    Ok(TruncationCheck {
        at_d,
        at_2d,
        difference,
    })
}
