//! Quadrature rules for `∫ f(z) d²ˢz / πˢ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matfun::{CMatrix, HermitianMatrix};

/// Default tolerance on `|1 - Σ w p(z)|` for trapezoid grids.
pub const DEFAULT_MASS_TOLERANCE: f64 = 1e-3;
/// Default tolerance for Monte Carlo grids, where the mass itself is a noisy estimate.
pub const MONTE_CARLO_MASS_TOLERANCE: f64 = 5e-2;
/// Radius of a default trapezoid grid, in units of the output standard deviation.
pub const DEFAULT_RADIUS_SIGMAS: f64 = 5.0;
/// Default trapezoid points per axis (68 intervals, step `R/34`).
pub const DEFAULT_POINTS_PER_AXIS: usize = 69;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GridScheme {
    CartesianTrapezoid { points_per_axis: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomePoint {
    /// One complex outcome per mode.
    pub z: Vec<Complex64>,
    pub weight: f64,
    /// Weight in the coarse (every other point) rule, zero off the coarse lattice.
    pub coarse_weight: f64,
}

/// A weighted set of outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeGrid {
    modes: usize,
    points: Vec<OutcomePoint>,
    radius: f64,
    scheme: GridScheme,
    mass_tolerance: f64,
}

impl OutcomeGrid {
    /// One-mode trapezoid rule on the square `center + [-R, R]²`.
    ///
    /// `points_per_axis` must be odd so the coarse rule (even indices) spans
    /// the same square.
    pub fn trapezoid(center: Complex64, radius: f64, points_per_axis: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidRange(format!("grid radius {radius}")));
        }
        if points_per_axis < 5 || points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidRange(format!(
                "points per axis must be odd and at least 5, got {points_per_axis}"
            )));
        }
        let n = points_per_axis;
        let h = 2.0 * radius / (n - 1) as f64;
        let edge = |i: usize, last: usize| if i == 0 || i == last { 0.5 } else { 1.0 };
        let fine = h * h / std::f64::consts::PI;
        let coarse = 4.0 * fine;
        let mut points = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = center + Complex64::new(-radius + i as f64 * h, -radius + j as f64 * h);
                let coarse_weight = if i % 2 == 0 && j % 2 == 0 {
                    coarse * edge(i / 2, (n - 1) / 2) * edge(j / 2, (n - 1) / 2)
                } else {
                    0.0
                };
                points.push(OutcomePoint {
                    z: vec![z],
                    weight: fine * edge(i, n - 1) * edge(j, n - 1),
                    coarse_weight,
                });
            }
        }
        Ok(Self {
            modes: 1,
            points,
            radius,
            scheme: GridScheme::CartesianTrapezoid { points_per_axis: n },
            mass_tolerance: DEFAULT_MASS_TOLERANCE,
        })
    }

    /// Default one-mode grid for an output density centred at `center` with
    /// variance `sigma²`: `R = 5σ`, 69 points per axis.
    pub fn for_output(center: Complex64, sigma: f64) -> Result<Self> {
        Self::trapezoid(center, DEFAULT_RADIUS_SIGMAS * sigma, DEFAULT_POINTS_PER_AXIS)
    }

    /// Importance sampling from the complex Gaussian `CN(center, cov)` whose
    /// density w.r.t. `d²ˢz/πˢ` is `exp(-(z-c)† cov⁻¹ (z-c)) / det cov`.
    ///
    /// Each sample gets weight `1 / (M q(z))`; the coarse weights use the
    /// first half of the samples so the two halves give an error estimate.
    pub fn monte_carlo(center: &[Complex64], cov: &HermitianMatrix, samples: usize, seed: u64) -> Result<Self> {
        let s = center.len();
        cov.ensure_dim(s)?;
        if samples < 2 {
            return Err(Error::InvalidRange(format!("need at least 2 samples, got {samples}")));
        }
        let eig = cov.eigen();
        if eig.values[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite(eig.values[0]));
        }
        let det: f64 = eig.values.iter().product();
        let root = eig.recompose(&eig.values.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = samples / 2;
        let mut points = Vec::with_capacity(samples);
        let mut radius = 0.0_f64;
        for k in 0..samples {
            let xi = CMatrix::from_fn(s, 1, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            });
            let q = (-xi.norm_squared()).exp() / det;
            let shift = &root * &xi;
            let z: Vec<Complex64> = (0..s).map(|j| center[j] + shift[(j, 0)]).collect();
            radius = radius.max(shift.norm());
            let weight = 1.0 / (samples as f64 * q);
            points.push(OutcomePoint {
                z,
                weight,
                coarse_weight: if k < half { 1.0 / (half as f64 * q) } else { 0.0 },
            });
        }
        Ok(Self {
            modes: s,
            points,
            radius,
            scheme: GridScheme::MonteCarlo { samples, seed },
            mass_tolerance: MONTE_CARLO_MASS_TOLERANCE,
        })
    }

    pub fn with_mass_tolerance(mut self, tolerance: f64) -> Self {
        self.mass_tolerance = tolerance;
        self
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> &[OutcomePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn scheme(&self) -> &GridScheme {
        &self.scheme
    }

    pub fn mass_tolerance(&self) -> f64 {
        self.mass_tolerance
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.scheme, GridScheme::MonteCarlo { .. })
    }

    /// Largest `|z_j|` over all points and modes.
    pub fn max_abs(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.z.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn integrate(grid: &OutcomeGrid, f: impl Fn(&[Complex64]) -> f64) -> (f64, f64) {
        grid.points().iter().fold((0.0, 0.0), |(a, b), p| {
            let v = f(&p.z);
            (a + p.weight * v, b + p.coarse_weight * v)
        })
    }

    #[test]
    fn trapezoid_integrates_gaussian() {
        let var: f64 = 3.0;
        let c = Complex64::new(0.3, -0.2);
        let grid = OutcomeGrid::for_output(c, var.sqrt()).unwrap();
        assert_eq!(grid.len(), 69 * 69);
        let (fine, coarse) = integrate(&grid, |z| (-(z[0] - c).norm_sqr() / var).exp() / var);
        assert_abs_diff_eq!(fine, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(coarse, 1.0, epsilon = 1e-9);
        let total: f64 = grid.points().iter().map(|p| p.weight).sum();
        assert_abs_diff_eq!(total, 4.0 * grid.radius().powi(2) / std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let cov = HermitianMatrix::from_diagonal(&[2.0, 1.5]);
        let c = [Complex64::new(0.0, 0.0); 2];
        let a = OutcomeGrid::monte_carlo(&c, &cov, 500, 7).unwrap();
        let b = OutcomeGrid::monte_carlo(&c, &cov, 500, 7).unwrap();
        assert_eq!(a, b);
        let (mass, _) = integrate(&a, |z| {
            (-(z[0].norm_sqr() / 2.0 + z[1].norm_sqr() / 1.5)).exp() / 3.0
        });
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = Complex64::new(0.0, 0.0);
        assert!(OutcomeGrid::trapezoid(c, 1.0, 10).is_err());
        assert!(OutcomeGrid::trapezoid(c, -1.0, 11).is_err());
        let cov = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(OutcomeGrid::monte_carlo(&[c, c], &cov, 10, 0).is_err());
    }
}
