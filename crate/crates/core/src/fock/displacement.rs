//! Displacement operators `D(z) = exp(z a† - z̄ a)`.
//!
//! The exponential is evaluated in a padded working space of dimension `w`
//! and only the low-level block is returned. With `R(φ) = exp(iφ a†a)` and
//! `z = i r e^{iφ}`, `D(z) = R(φ) exp(i r x) R(φ)†` where `x = a + a†` is real
//! tridiagonal, so one symmetric eigendecomposition of `x` serves every `z`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::FockOperator;
use crate::error::{Error, Result};
use crate::matfun::{CMatrix, RMatrix};

/// Largest accepted `|B†B - I|` entry on the retained subspace.
pub const RETAINED_UNITARITY_TOLERANCE: f64 = 1e-6;

/// Spectral data of the truncated position-like operator `a + a†`.
#[derive(Clone, Debug)]
pub struct DisplacementGenerator {
    work_dim: usize,
    values: Vec<f64>,
    vectors: RMatrix,
}

impl DisplacementGenerator {
    pub fn new(work_dim: usize) -> Self {
        let w = work_dim.max(1);
        let mut x = RMatrix::zeros(w, w);
        for n in 1..w {
            let v = (n as f64).sqrt();
            x[(n - 1, n)] = v;
            x[(n, n - 1)] = v;
        }
        let eig = x.symmetric_eigen();
        Self {
            work_dim: w,
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// Working dimension for blocks up to `levels` levels and `|z| ≤ z_max`.
    pub fn working_dim(levels: usize, z_max: f64) -> usize {
        let root = (levels as f64).sqrt() + z_max.max(0.0) + 7.0;
        ((root * root).ceil() as usize).max(levels + 16)
    }

    /// Fresh generator sized by [`Self::working_dim`].
    pub fn for_range(levels: usize, z_max: f64) -> Self {
        Self::new(Self::working_dim(levels, z_max))
    }

    /// Like [`Self::for_range`], but shares generators across callers. The
    /// dimension is rounded up to a multiple of 64 so nearby requests reuse
    /// the same decomposition.
    pub fn shared(levels: usize, z_max: f64) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DisplacementGenerator>>>> = OnceLock::new();
        let w = Self::working_dim(levels, z_max).div_ceil(64) * 64;
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(g) = cache.lock().expect("generator cache poisoned").get(&w) {
            return Arc::clone(g);
        }
        let g = Arc::new(Self::new(w));
        cache
            .lock()
            .expect("generator cache poisoned")
            .entry(w)
            .or_insert(g)
            .clone()
    }

    pub fn work_dim(&self) -> usize {
        self.work_dim
    }

    /// Block `[<m| D(z) |n>]` for `m < rows`, `n < cols`.
    pub fn block(&self, z: Complex64, rows: usize, cols: usize) -> CMatrix {
        assert!(
            rows <= self.work_dim && cols <= self.work_dim,
            "block {rows}x{cols} exceeds working dimension {}",
            self.work_dim
        );
        let r = z.norm();
        if r == 0.0 {
            return CMatrix::identity(rows, cols);
        }
        // e^{iφ} = -i z / r
        let phase = Complex64::new(z.im / r, -z.re / r);
        let w = self.work_dim;
        let vr = self.vectors.rows(0, rows);
        let vc = self.vectors.rows(0, cols);
        let mut scaled_cos = DMatrix::<f64>::zeros(rows, w);
        let mut scaled_sin = DMatrix::<f64>::zeros(rows, w);
        for k in 0..w {
            let (s, c) = (r * self.values[k]).sin_cos();
            for m in 0..rows {
                let v = vr[(m, k)];
                scaled_cos[(m, k)] = v * c;
                scaled_sin[(m, k)] = v * s;
            }
        }
        let re = &scaled_cos * vc.transpose();
        let im = &scaled_sin * vc.transpose();
        let max_level = rows.max(cols);
        let mut powers = Vec::with_capacity(2 * max_level);
        // powers[k] = e^{iφ (k - (cols - 1))}
        let mut p = phase.powi(-(cols as i32 - 1));
        for _ in 0..(rows + cols) {
            powers.push(p);
            p *= phase;
        }
        CMatrix::from_fn(rows, cols, |m, n| {
            powers[m + cols - 1 - n] * Complex64::new(re[(m, n)], im[(m, n)])
        })
    }
}

/// A truncated displacement with its accuracy diagnostics.
#[derive(Clone, Debug)]
pub struct Displacement {
    pub operator: FockOperator,
    /// `max |(B†B - I)_{mn}|` over the whole `d×d` block.
    pub unitarity_deviation: f64,
    /// Same, restricted to the retained subspace `m, n < d/4`.
    pub retained_deviation: f64,
    /// Set when `|z|² > d/4`.
    pub warning: bool,
}

/// One-mode displacement `D(z)` truncated to `d` levels.
pub fn displacement(z: Complex64, d: usize) -> Result<Displacement> {
    if d < 2 {
        return Err(Error::InvalidRange(format!("cutoff {d} must be at least 2")));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite);
    }
    let generator = DisplacementGenerator::for_range(d, z.norm());
    let block = generator.block(z, d, d);
    let gram = block.adjoint() * &block - CMatrix::identity(d, d);
    let half = (d / 4).max(1);
    let mut full = 0.0_f64;
    let mut retained = 0.0_f64;
    for m in 0..d {
        for n in 0..d {
            let v = gram[(m, n)].norm();
            full = full.max(v);
            if m < half && n < half {
                retained = retained.max(v);
            }
        }
    }
    if retained > RETAINED_UNITARITY_TOLERANCE {
        return Err(Error::TruncationTooSmall(format!(
            "displacement by |z| = {:.3} leaks {retained:.3e} beyond {d} levels",
            z.norm()
        )));
    }
    Ok(Displacement {
        operator: FockOperator::new(1, d, block)?,
        unitarity_deviation: full,
        retained_deviation: retained,
        warning: z.norm_sqr() > d as f64 / 4.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_amplitudes;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_is_identity() {
        let d = displacement(Complex64::new(0.0, 0.0), 10).unwrap();
        assert_eq!(d.operator.matrix(), &CMatrix::identity(10, 10));
        assert_eq!(d.unitarity_deviation, 0.0);
    }

    #[test]
    fn vacuum_goes_to_coherent_state() {
        let z = Complex64::new(1.0, 0.0);
        let d = displacement(z, 40).unwrap();
        let col = d.operator.matrix().column(0).into_owned();
        let mean: f64 = (0..40).map(|n| n as f64 * col[n].norm_sqr()).sum();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-8);

        let z = Complex64::new(-0.7, 1.3);
        let col = displacement(z, 40).unwrap().operator.matrix().column(0).into_owned();
        let expect = coherent_amplitudes(z, 40);
        assert!((col - expect).norm() < 1e-10);
    }

    #[test]
    fn weyl_relation() {
        let z = Complex64::new(1.0, 0.0);
        let w = Complex64::new(0.0, 1.0);
        let g = DisplacementGenerator::for_range(80, 2.0);
        let lhs = g.block(z, 12, 80) * g.block(w, 80, 12);
        let rhs = g.block(z + w, 12, 12) * Complex64::new(0.0, -1.0).exp();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn retained_leakage_is_reported() {
        let small = displacement(Complex64::new(1.0, 0.5), 40).unwrap();
        assert!(small.retained_deviation < 1e-12);
        assert!(!small.warning);
        let big = displacement(Complex64::new(4.0, 0.0), 40);
        assert!(matches!(big, Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn shared_generators_are_reused() {
        let a = DisplacementGenerator::shared(40, 3.0);
        let b = DisplacementGenerator::shared(40, 3.01);
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.work_dim() % 64, 0);
    }
}
