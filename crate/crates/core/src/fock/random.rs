//! Seeded random states for randomized checks.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{pure_state, FockOperator};
use crate::error::{Error, Result};
use crate::matfun::CMatrix;

/// Standard complex Gaussian `CN(0, 1)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One-mode mixed state `G G† / Tr G G†` with `G` a `d×d` Ginibre matrix whose
/// row `n` is damped by `decay^n`, keeping the photon number moderate.
pub fn random_mixed_state<R: Rng + ?Sized>(d: usize, decay: f64, rng: &mut R) -> Result<FockOperator> {
    let g = CMatrix::from_fn(d, d, |n, _| complex_normal(rng) * decay.powi(n as i32));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    FockOperator::new(1, d, rho.unscale(tr))
}

/// One-mode pure state with damped Gaussian amplitudes.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, decay: f64, rng: &mut R) -> Result<FockOperator> {
    let psi = DVector::from_fn(d, |n, _| complex_normal(rng) * decay.powi(n as i32));
    pure_state(1, d, &psi)
}

/// Random diagonal Fock mixture on `d` levels with mean photon number `mean`.
///
/// Exponential weights are drawn, then mixed with `|0>` (if the mean is too
/// large) or `|k>` for `k = min(3, d - 1)` (if too small) to hit the target.
pub fn random_fock_mixture<R: Rng + ?Sized>(d: usize, mean: f64, rng: &mut R) -> Result<FockOperator> {
    let k = 3.min(d - 1);
    if !(0.0..=k as f64).contains(&mean) {
        return Err(Error::InvalidRange(format!("mean {mean} outside [0, {k}]")));
    }
    let raw: Vec<f64> = (0..d).map(|n| rng.sample::<f64, _>(Exp1) * 0.5_f64.powi(n as i32)).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let m: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
    if m > mean {
        let t = mean / m;
        p.iter_mut().for_each(|x| *x *= t);
        p[0] += 1.0 - t;
    } else if m < mean {
        let t = (k as f64 - mean) / (k as f64 - m);
        p.iter_mut().for_each(|x| *x *= t);
        p[k] += 1.0 - t;
    }
    let diag = DVector::from_iterator(d, p.into_iter().map(|x| Complex64::new(x, 0.0)));
    FockOperator::new(1, d, CMatrix::from_diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            random_mixed_state(12, 0.7, &mut rng).unwrap().validate_density().unwrap();
            random_pure_state(12, 0.7, &mut rng).unwrap().validate_density().unwrap();
            let mix = random_fock_mixture(12, 1.0, &mut rng).unwrap();
            mix.validate_density().unwrap();
            assert!((mix.mean_number() - 1.0).abs() < 1e-12);
        }
    }
}
