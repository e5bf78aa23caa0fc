//! Invariants of the closed forms.

use gaussmeter::capacity::{
    c_unassisted_one_mode, cea_multimode, cea_one_mode, gain, EnergyConstraint, OptimizerSettings,
};
use gaussmeter::gauge::{
    cp_certificate, dual_channel_params, entropy_reduction_gauge, posterior_params, GaugeMeasurement,
    GaugeState,
};
use gaussmeter::matfun::{g_trace, psd_sqrt, symplectic_spectrum, SymplecticForm};
use gaussmeter::symplectic::{embed_gauge_invariant, entropy_reduction_general};
use gaussmeter::verify::random_correlation;
use gaussmeter::{CMatrix, HermitianMatrix, LogBase, RMatrix};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const B: LogBase = LogBase::Bits;

fn pair(seed: u64, s: usize, ls: f64, ns: f64) -> (GaugeState, GaugeMeasurement) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = random_correlation(s, ls, &mut rng);
    let n = random_correlation(s, ns, &mut rng);
    (GaugeState::new(l).unwrap(), GaugeMeasurement::new(n).unwrap())
}

fn random_unitary(seed: u64, s: usize) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(s, s, |_, _| gaussmeter::fock::random::complex_normal(&mut rng));
    g.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_trace_is_unitarily_invariant(seed in any::<u64>(), s in 1usize..=3, scale in 0.01f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_correlation(s, scale, &mut rng);
        let u = random_unitary(seed ^ 0xabc, s);
        let rotated = HermitianMatrix::with_tolerance(&u * l.as_matrix() * u.adjoint(), 1e-9).unwrap();
        let a = g_trace(&l, B).unwrap();
        let b = g_trace(&rotated, B).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), s in 1usize..=3, scale in 0.01f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_correlation(s, scale, &mut rng);
        let r = psd_sqrt(&l).unwrap();
        let sq = r.as_matrix() * r.as_matrix();
        prop_assert!((sq - l.as_matrix()).norm() <= 1e-10 * (1.0 + l.as_matrix().norm()));
    }

    #[test]
    fn symplectic_spectrum_survives_congruence(seed in any::<u64>(), s in 1usize..=3, t in 0.0f64..0.5) {
        let (st, _) = pair(seed, s, 1.0, 1.0);
        let alpha = gaussmeter::symplectic::covariance_from_correlation(st.lambda().as_matrix()).unwrap();
        let form = SymplecticForm::new(s);
        // S = exp(Δ H) with H symmetric is symplectic
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let h = RMatrix::from_fn(2 * s, 2 * s, |_, _| gaussmeter::fock::random::complex_normal(&mut rng).re);
        let h = (&h + h.transpose()).scale(0.5 * t);
        let sym = (form.matrix() * h).exp();
        let omega = form.matrix();
        prop_assert!((sym.transpose() * &omega * &sym - &omega).norm() < 1e-9);
        let moved = &sym * alpha.matrix() * sym.transpose();
        let moved = (&moved + moved.transpose()).scale(0.5);
        let a = symplectic_spectrum(alpha.matrix(), form).unwrap();
        let b = symplectic_spectrum(&moved, form).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8 * (1.0 + x));
        }
    }

    #[test]
    fn posterior_noise_is_hermitian_psd_and_er_nonnegative(seed in any::<u64>(), s in 1usize..=3, ls in 0.01f64..4.0, ns in 0.01f64..4.0) {
        let (st, m) = pair(seed, s, ls, ns);
        let post = posterior_params(&st, &m).unwrap();
        prop_assert!(post.ntilde.min_eigenvalue() >= -1e-10, "ntilde {}", post.ntilde.min_eigenvalue());
        let er = entropy_reduction_gauge(&st, &m, B).unwrap();
        prop_assert!(er >= -1e-10, "er {er}");
    }

    #[test]
    fn gauge_and_symplectic_forms_agree(seed in any::<u64>(), s in 1usize..=3, ls in 0.01f64..4.0, ns in 0.01f64..4.0) {
        let (st, m) = pair(seed, s, ls, ns);
        let gauge = entropy_reduction_gauge(&st, &m, B).unwrap();
        let (alpha, meas) = embed_gauge_invariant(&st, &m).unwrap();
        let general = entropy_reduction_general(&alpha, &meas, B).unwrap();
        prop_assert!((gauge - general).abs() <= 1e-9);
    }

    #[test]
    fn cp_certificate_holds(seed in any::<u64>(), s in 1usize..=3, ls in 0.0f64..5.0, ns in 0.0f64..5.0) {
        let (st, m) = pair(seed, s, ls, ns);
        let cert = cp_certificate(&dual_channel_params(&st, &m).unwrap());
        prop_assert!(cert.margin >= -1e-9, "margin {}", cert.margin);
    }

    #[test]
    fn gain_sandwich_at_small_energy(exp in -8.0f64..-4.0, which in 0usize..3) {
        let n = [0.5, 1.0, 10.0][which];
        let e = 10f64.powf(exp);
        let ratio = gain(e, n, B).unwrap() / -e.ln();
        prop_assert!((ratio - 1.0).abs() <= 0.2, "{ratio}");
    }

    #[test]
    fn one_mode_optimizer_matches_closed_form(n in 0.0f64..10.0, e in 0.01f64..50.0) {
        let meas = GaugeMeasurement::new(HermitianMatrix::scalar(n)).unwrap();
        let c = EnergyConstraint::photon_number(1, e).unwrap();
        let r = cea_multimode(&meas, &c, B, &OptimizerSettings::default()).unwrap();
        prop_assert!((r.cea - cea_one_mode(e, n, B).unwrap()).abs() <= 1e-6);
        prop_assert!((r.energy_used - e).abs() <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn multimode_optimum_sits_on_shell(seed in any::<u64>(), e in 0.2f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = random_correlation(2, 1.0, &mut rng);
        let eps = HermitianMatrix::new(random_correlation(2, 1.0, &mut rng).as_matrix() + CMatrix::identity(2, 2).scale(0.5)).unwrap();
        let meas = GaugeMeasurement::new(noise).unwrap();
        let c = EnergyConstraint::new(eps.clone(), e).unwrap();
        let settings = OptimizerSettings { multistarts: 4, seed, ..OptimizerSettings::default() };
        let r = cea_multimode(&meas, &c, B, &settings).unwrap();
        prop_assert!((r.energy_used - e).abs() <= 1e-6);
        // dominates the spectral guess Λ ∝ ε⁻¹
        let inv = eps.as_matrix().clone().try_inverse().unwrap();
        let scale = e / (eps.as_matrix() * &inv).trace().re;
        let guess = HermitianMatrix::with_tolerance(inv.scale(scale), 1e-9).unwrap();
        let v = entropy_reduction_gauge(&GaugeState::new(guess).unwrap(), &meas, B).unwrap();
        prop_assert!(r.cea >= v - 1e-9);
        prop_assert!(r.cea >= 0.0);
    }
}

#[test]
fn assisted_dominates_unassisted_on_grid() {
    for i in 0..100 {
        let e = 10f64.powf(-4.0 + 8.0 * i as f64 / 99.0);
        for j in 0..100 {
            let n = if j == 0 { 0.0 } else { 10f64.powf(-3.0 + 6.0 * j as f64 / 99.0) };
            let cea = cea_one_mode(e, n, B).unwrap();
            let c = c_unassisted_one_mode(e, n, B).unwrap();
            assert!(cea >= c, "E={e} N={n}: {cea} < {c}");
        }
    }
}

#[test]
fn capacities_are_monotone() {
    let es: Vec<f64> = (0..60).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 59.0)).collect();
    let ns: Vec<f64> = (0..60).map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 59.0)).collect();
    for &n in &ns {
        for w in es.windows(2) {
            assert!(cea_one_mode(w[1], n, B).unwrap() > cea_one_mode(w[0], n, B).unwrap());
            assert!(c_unassisted_one_mode(w[1], n, B).unwrap() > c_unassisted_one_mode(w[0], n, B).unwrap());
        }
    }
    for &e in &es {
        for w in ns.windows(2) {
            assert!(cea_one_mode(e, w[1], B).unwrap() < cea_one_mode(e, w[0], B).unwrap());
            assert!(c_unassisted_one_mode(e, w[1], B).unwrap() < c_unassisted_one_mode(e, w[0], B).unwrap());
        }
    }
}

#[test]
fn weyl_phase_of_displacements() {
    use gaussmeter::fock::DisplacementGenerator;
    let g = DisplacementGenerator::for_range(90, 3.0);
    for (z, w) in [
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)),
        (Complex64::new(-0.3, 0.8), Complex64::new(1.1, 0.4)),
    ] {
        let lhs = g.block(z, 10, 90) * g.block(w, 90, 10);
        let phase = Complex64::new(0.0, -(z.conj() * w).im).exp();
        let rhs = g.block(z + w, 10, 10) * phase;
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
