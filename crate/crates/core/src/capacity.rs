//! Energy-constrained capacities of the gauge-covariant measurement channel.
//!
//! One mode has closed forms. For several modes the capacity is the maximum
//! of `Sp g(Λ) - Sp g(Ñ(Λ))` over correlation matrices on the energy shell
//! `Sp εΛ = E`; the maximizer is known to be a gauge-invariant Gaussian
//! state, so only `Λ` is searched over.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fock::random::complex_normal;
use crate::gauge::{entropy_reduction_gauge, GaugeMeasurement, GaugeState};
use crate::matfun::{g_scalar, CMatrix, HermitianMatrix, LogBase};

/// Smallest unassisted capacity accepted as a gain denominator.
pub const GAIN_DENOMINATOR_FLOOR: f64 = 1e-300;
/// Smallest accepted eigenvalue of the energy matrix `ε`.
pub const EPSILON_FLOOR: f64 = 1e-12;

fn check_energy(e: f64) -> Result<()> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::InvalidRange(format!("energy {e} must be positive and finite")));
    }
    Ok(())
}

fn check_noise(n: f64) -> Result<()> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::InvalidRange(format!("noise {n} must be nonnegative and finite")));
    }
    Ok(())
}

/// `g(E) - g(NE/(N+E+1))`.
pub fn cea_one_mode(e: f64, n: f64, base: LogBase) -> Result<f64> {
    check_energy(e)?;
    check_noise(n)?;
    Ok(g_scalar(e, base)? - g_scalar(n * e / (n + e + 1.0), base)?)
}

/// `log(N+E+1) - log(N+1)`.
pub fn c_unassisted_one_mode(e: f64, n: f64, base: LogBase) -> Result<f64> {
    check_energy(e)?;
    check_noise(n)?;
    Ok(base.from_nats((e / (n + 1.0)).ln_1p()))
}

/// Gain of entanglement assistance `C_ea / C`.
pub fn gain(e: f64, n: f64, base: LogBase) -> Result<f64> {
    let c = c_unassisted_one_mode(e, n, base)?;
    if c < GAIN_DENOMINATOR_FLOOR {
        return Err(Error::DivisionDegenerate(c));
    }
    Ok(cea_one_mode(e, n, base)? / c)
}

/// Large-energy limit of `C_ea - C`: `log e - N log(1 + 1/N)`.
pub fn excess_limit(n: f64, base: LogBase) -> Result<f64> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidRange(format!("noise {n} must be positive and finite")));
    }
    Ok(base.from_nats(1.0 - n * (1.0 / n).ln_1p()))
}

/// Energy matrix `ε > 0` and budget `E > 0` of the constraint `Sp εΛ ≤ E`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyConstraint {
    epsilon: HermitianMatrix,
    budget: f64,
}

impl EnergyConstraint {
    pub fn new(epsilon: HermitianMatrix, budget: f64) -> Result<Self> {
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(Error::InfeasibleConstraint(budget));
        }
        let min = epsilon.min_eigenvalue();
        if min <= EPSILON_FLOOR {
            return Err(Error::NotPositiveDefinite(min));
        }
        Ok(Self { epsilon, budget })
    }

    /// `ε = I`.
    pub fn photon_number(s: usize, budget: f64) -> Result<Self> {
        Self::new(HermitianMatrix::identity(s), budget)
    }

    pub fn epsilon(&self) -> &HermitianMatrix {
        &self.epsilon
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn modes(&self) -> usize {
        self.epsilon.dim()
    }

    /// `Re Sp εΛ`.
    pub fn energy(&self, lambda: &CMatrix) -> f64 {
        (self.epsilon.as_matrix() * lambda).trace().re
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub multistarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            multistarts: 8,
            max_iterations: 10_000,
            gradient_tolerance: 1e-8,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

/// Complex matrix as separate real and imaginary row arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixData {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

/// Diagnostics of one optimizer start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub cea: f64,
    /// One-mode only.
    pub c_unassisted: Option<f64>,
    /// One-mode only.
    pub gain: Option<f64>,
    /// Maximizing correlation matrix `Λ*`.
    pub lambda: MatrixData,
    pub energy_used: f64,
    pub energy_budget: f64,
    pub base: LogBase,
    /// Whether the best start met the gradient tolerance.
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub starts: Vec<StartOutcome>,
}

/// Maps parameters `x` (real and imaginary parts of an `s×s` matrix `C`) to
/// `Λ = E C C† / Sp(ε C C†)`, which lies on the energy shell for any `C ≠ 0`.
struct ShellMap<'a> {
    meas: &'a GaugeMeasurement,
    constraint: &'a EnergyConstraint,
    base: LogBase,
}

impl ShellMap<'_> {
    fn s(&self) -> usize {
        self.constraint.modes()
    }

    fn lambda(&self, x: &DVector<f64>) -> Option<CMatrix> {
        let s = self.s();
        let c = CMatrix::from_fn(s, s, |j, k| Complex64::new(x[2 * (j * s + k)], x[2 * (j * s + k) + 1]));
        let cc = &c * c.adjoint();
        let energy = self.constraint.energy(&cc);
        if !(energy > 0.0) {
            return None;
        }
        let lambda = cc.scale(self.constraint.budget / energy);
        Some((&lambda + lambda.adjoint()).scale(0.5))
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.lambda(x)
            .and_then(|l| HermitianMatrix::new(l).ok())
            .and_then(|l| GaugeState::new(l).ok())
            .and_then(|st| entropy_reduction_gauge(&st, self.meas, self.base).ok())
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let h = 1e-6 * (1.0 + x.norm());
        let mut probe = x.clone();
        DVector::from_fn(x.len(), |i, _| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = self.value(&probe);
            probe[i] = orig - h;
            let down = self.value(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
    }

    /// Gradient ascent with Barzilai-Borwein steps and Armijo backtracking.
    fn ascend(&self, mut x: DVector<f64>, settings: &OptimizerSettings) -> (DVector<f64>, StartOutcome) {
        let mut f = self.value(&x);
        let mut g = self.gradient(&x);
        let mut step = 0.1 * (1.0 + x.norm()) / g.norm().max(1e-300);
        let mut iterations = 0;
        while iterations < settings.max_iterations {
            let gn = g.norm();
            if !(gn >= settings.gradient_tolerance) {
                break;
            }
            iterations += 1;
            let mut t = step;
            let mut accepted = None;
            for _ in 0..60 {
                let cand = &x + &g * t;
                let fc = self.value(&cand);
                if fc >= f + 1e-4 * t * gn * gn {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, fnext)) = accepted else {
                break;
            };
            let gnext = self.gradient(&next);
            let sv = &next - &x;
            let yv = &gnext - &g;
            let sy = sv.dot(&yv).abs();
            step = if sy > 0.0 {
                (sv.norm_squared() / sy).clamp(1e-10, 1e10)
            } else {
                t * 2.0
            };
            // rescale to unit norm; Λ is invariant under C -> cC
            let scale = next.norm();
            x = next / scale;
            g = gnext * scale;
            step /= scale * scale;
            f = fnext;
        }
        let gradient_norm = g.norm();
        (
            x,
            StartOutcome {
                value: f,
                iterations,
                gradient_norm,
                converged: gradient_norm < settings.gradient_tolerance,
            },
        )
    }
}

/// Maximizes the entropy reduction over `Λ >= 0` with `Sp εΛ = E`.
///
/// Multistart gradient ascent over a factorization `Λ ∝ C C†`; start 0 is
/// `C = I`, the others are seeded complex Gaussian matrices. Non-convergence
/// is reported through `converged`, not as an error.
pub fn cea_multimode(
    meas: &GaugeMeasurement,
    constraint: &EnergyConstraint,
    base: LogBase,
    settings: &OptimizerSettings,
) -> Result<CapacityReport> {
    let s = meas.modes();
    if constraint.modes() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: constraint.modes(),
        });
    }
    let budget = constraint.budget();
    if s == 1 {
        let eps = constraint.epsilon().trace();
        let lambda = budget / eps;
        let n = meas.noise().trace().max(0.0);
        let cea = cea_one_mode(lambda, n, base)?;
        let c = c_unassisted_one_mode(lambda, n, base)?;
        return Ok(CapacityReport {
            cea,
            c_unassisted: Some(c),
            gain: gain(lambda, n, base).ok(),
            lambda: MatrixData::from(&CMatrix::from_element(1, 1, Complex64::new(lambda, 0.0))),
            energy_used: eps * lambda,
            energy_budget: budget,
            base,
            converged: true,
            iterations: 0,
            gradient_norm: 0.0,
            starts: vec![],
        });
    }
    let map = ShellMap { meas, constraint, base };
    let starts = settings.multistarts.max(1);
    let runs = exec::map_range(settings.execution, starts, |k| {
        let x0 = if k == 0 {
            DVector::from_fn(2 * s * s, |i, _| {
                let flat = i / 2;
                if i % 2 == 0 && flat / s == flat % s {
                    1.0
                } else {
                    0.0
                }
            })
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed.wrapping_add(k as u64));
            DVector::from_fn(2 * s * s, |i, _| {
                let z = complex_normal(&mut rng);
                if i % 2 == 0 {
                    z.re
                } else {
                    z.im
                }
            })
        };
        map.ascend(x0, settings)
    });
    let (best_x, best) = runs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.value.total_cmp(&b.1 .1.value).then(b.0.cmp(&a.0)))
        .map(|(_, r)| r.clone())
        .expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::NonFinite);
    }
    let lambda = map.lambda(&best_x).ok_or(Error::NonFinite)?;
    Ok(CapacityReport {
        cea: best.value,
        c_unassisted: None,
        gain: None,
        energy_used: constraint.energy(&lambda),
        lambda: MatrixData::from(&lambda),
        energy_budget: budget,
        base,
        converged: best.converged,
        iterations: best.iterations,
        gradient_norm: best.gradient_norm,
        starts: runs.into_iter().map(|r| r.1).collect(),
    })
}

/// One row of a one-mode capacity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: f64,
    pub e: f64,
    pub cea: f64,
    pub c: f64,
    pub gain: f64,
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi >= lo) || count == 0 || !hi.is_finite() {
        return Err(Error::InvalidRange(format!("log grid [{lo}, {hi}] with {count} points")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|k| {
            if k == count - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Closed-form table over `N × E`, rows ordered by `N` then `E`.
pub fn sweep_one_mode(n_values: &[f64], e_grid: &[f64], base: LogBase, execution: Execution) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() || e_grid.is_empty() {
        return Err(Error::InvalidRange("sweep grids must be nonempty".into()));
    }
    let pairs: Vec<(f64, f64)> = n_values
        .iter()
        .flat_map(|&n| e_grid.iter().map(move |&e| (n, e)))
        .collect();
    exec::map(execution, &pairs, |&(n, e)| {
        Ok(SweepRow {
            n,
            e,
            cea: cea_one_mode(e, n, base)?,
            c: c_unassisted_one_mode(e, n, base)?,
            gain: gain(e, n, base)?,
        })
    })
    .into_iter()
    .collect()
}
