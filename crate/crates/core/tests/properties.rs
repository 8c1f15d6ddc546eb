use std::f64::consts::PI;

use num_complex::Complex64;
use opa_core::decomposition::{bloch_messiah, DEFAULT_DEGENERACY_TOLERANCE};
use opa_core::homodyne::{direct_quadrature_noise, lo_decompose, quadrature_noise};
use opa_core::propagator::{FramePhase, GreenMeta};
use opa_core::*;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn field(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

fn bbo_grid(n: usize) -> (DispersionModel, FrequencyGrid) {
    let model = DispersionModel::bbo();
    let grid = FrequencyGrid::new(n, model.omega_signal(), 2.0).unwrap();
    (model, grid)
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// C = A·cosh ζ·Bᵀ and S = A·sinh ζ·B† with unitary A, B from QR of the given entries.
fn synthetic_pair(entries: &[Complex64], zetas: &[f64], grid: FrequencyGrid) -> GreenPair {
    let n = zetas.len();
    let a = CMatrix::from_fn(n, n, |i, j| entries[i * n + j]).qr().q();
    let b = CMatrix::from_fn(n, n, |i, j| entries[n * n + i * n + j]).qr().q();
    let diag = |f: fn(f64) -> f64| CMatrix::from_fn(n, n, |i, j| if i == j { c(f(zetas[i]), 0.0) } else { c(0.0, 0.0) });
    GreenPair {
        c: &a * diag(f64::cosh) * b.transpose(),
        s: &a * diag(f64::sinh) * b.adjoint(),
        grid,
        frame: Frame::Moving,
        meta: GreenMeta {
            spec: PumpSpec::new(24.0, 2.0 * grid.center, 1.0, 1.0).unwrap(),
            scheme: Scheme::SplitStep,
            n_steps: 0,
            direction_forward: true,
            frame_phase: FramePhase {
                beta0: 0.0,
                beta1: 0.0,
                center: grid.center,
                length: 1.0,
            },
            pump_label: "synthetic".into(),
        },
    }
}

fn synthetic(n: usize) -> impl Strategy<Value = (Vec<Complex64>, Vec<f64>)> {
    (field(2 * n * n), prop::collection::vec(0.0f64..2.5, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extraordinary_index_lies_between_the_principal_indices(theta in 0.0f64..(PI / 2.0), lambda in 300.0f64..1200.0) {
        let model = DispersionModel::bbo().with_theta(theta);
        let omega = 2.0 * PI * 2.99792458e-4 / (lambda * 1e-6);
        let no = model.refractive_index(omega, Polarization::Ordinary).unwrap();
        let ne = model.with_theta(PI / 2.0).refractive_index(omega, Polarization::Extraordinary).unwrap();
        let n = model.refractive_index(omega, Polarization::Extraordinary).unwrap();
        prop_assert!(no > 1.0 && ne > 1.0);
        prop_assert!(n <= no + 1e-12 && n >= ne - 1e-12);
        let steeper = model.with_theta((theta + 0.05).min(PI / 2.0)).refractive_index(omega, Polarization::Extraordinary).unwrap();
        prop_assert!(steeper <= n + 1e-12);
    }

    #[test]
    fn transform_round_trips_and_preserves_energy(f in field(64)) {
        let (_, grid) = bbo_grid(64);
        let t = transform(&f, opa_core::Direction::ToTime, &grid).unwrap();
        let back = transform(&t, opa_core::Direction::ToFrequency, &grid).unwrap();
        prop_assert!(max_diff(&f, &back) < 1e-12);
        let e_freq: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spacing;
        let e_time: f64 = t.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.time_step();
        prop_assert!((e_freq - e_time).abs() < 1e-12 * e_freq);
    }

    #[test]
    fn pump_profile_is_real_positive_and_normalized(tau in 8.0f64..60.0) {
        let (model, grid) = bbo_grid(256);
        let spec = PumpSpec::new(tau, model.omega_pump(), 1.0, 1.0).unwrap();
        let pump = PumpProfile::gaussian(&spec, &grid).unwrap();
        prop_assert!(pump.is_real());
        prop_assert!(pump.values.iter().all(|v| v.re >= 0.0));
        prop_assert!((pump.integral() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gaussian_model_width_is_the_geometric_mean(tau in 8.0f64..80.0, l_nl in 0.05f64..100.0) {
        let model = DispersionModel::bbo();
        let spec = PumpSpec::new(tau, model.omega_pump(), l_nl, 1.0).unwrap();
        let gm = gaussian_params(&spec, &model).unwrap();
        prop_assert!(gm.delta <= gm.big_delta);
        prop_assert!((gm.tau_s.powi(2) * gm.delta * gm.big_delta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bloch_messiah_recovers_synthetic_squeezing((entries, mut zetas) in synthetic(8)) {
        zetas.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(zetas.windows(2).all(|w| w[0] - w[1] > 1e-3));
        let grid = FrequencyGrid::new(8, 2.35, 0.5).unwrap();
        let gp = synthetic_pair(&entries, &zetas, grid);
        let r = gp.symplectic_residuals();
        prop_assert!(r.unitarity < 1e-12 && r.symmetry < 1e-12);
        let md = bloch_messiah(&gp, DEFAULT_DEGENERACY_TOLERANCE).unwrap();
        for (a, b) in md.zetas.iter().zip(&zetas) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        prop_assert!(md.reconstruction_error < 1e-8);
        prop_assert!(md.orthonormality_error() < 1e-10);
        prop_assert!(md.pairing_residual < 1e-6);
        let photons: f64 = zetas.iter().map(|z| z.sinh().powi(2)).sum();
        prop_assert!((md.total_photons() - photons).abs() < 1e-8 * photons.max(1.0));
    }

    #[test]
    fn homodyne_invariants_hold_for_random_oscillators(
        (entries, zetas) in synthetic(8),
        lo in field(8),
        phi0 in -PI..PI,
    ) {
        prop_assume!(lo.iter().map(|v| v.norm_sqr()).sum::<f64>() > 1e-3);
        let grid = FrequencyGrid::new(8, 2.35, 0.5).unwrap();
        let gp = synthetic_pair(&entries, &zetas, grid);
        let md = bloch_messiah(&gp, DEFAULT_DEGENERACY_TOLERANCE).unwrap();
        let lo = LocalOscillator::new(lo, "random", Frame::Moving, grid).unwrap();
        let report = homodyne_report(&lo, &md).unwrap();
        let mass: f64 = report.m.iter().map(|m| m * m).sum();
        prop_assert!((mass + report.leakage - 1.0).abs() < 1e-10);
        prop_assert!(report.q2_min * report.q2_max >= 1.0 / 16.0 - 1e-12);
        prop_assert!(report.q2_max >= 0.25 - 1e-12);

        let ld = lo_decompose(&lo, &md).unwrap();
        for k in 0..6 {
            let phi = k as f64 * PI / 6.0;
            let via_modes = quadrature_noise(&ld.m, &ld.theta, &md.zetas, ld.leakage, phi);
            let direct = direct_quadrature_noise(&lo, &gp, phi).unwrap();
            prop_assert!((via_modes - direct).abs() < 1e-10 * direct.max(1.0), "{via_modes} vs {direct}");
        }

        let shifted = homodyne_report(&lo.clone().with_phase(phi0), &md).unwrap();
        prop_assert!((shifted.q2_min - report.q2_min).abs() < 1e-12 * report.q2_max);
        prop_assert!((shifted.q2_max - report.q2_max).abs() < 1e-12 * report.q2_max);
        let mut d = shifted.theta_opt - (report.theta_opt - phi0);
        d = (d + PI / 2.0).rem_euclid(PI) - PI / 2.0;
        let degenerate = (report.q2_max - report.q2_min) < 1e-9;
        prop_assert!(degenerate || d.abs() < 1e-9, "theta_opt shift off by {d}");
    }

    #[test]
    fn phase_aligned_oscillators_see_sub_vacuum_noise(
        (entries, zetas) in synthetic(8),
        weights in prop::collection::vec(0.0f64..1.0, 8),
        common in -PI..PI,
    ) {
        prop_assume!(zetas.iter().any(|z| *z > 1e-3));
        let grid = FrequencyGrid::new(8, 2.35, 0.5).unwrap();
        let md = bloch_messiah(&synthetic_pair(&entries, &zetas, grid), DEFAULT_DEGENERACY_TOLERANCE).unwrap();
        let mut amplitude = vec![c(0.0, 0.0); 8];
        for (n, w) in weights.iter().enumerate() {
            for (j, a) in amplitude.iter_mut().enumerate() {
                *a += md.psi[(j, n)] * Complex64::from_polar(*w, common);
            }
        }
        prop_assume!(weights.iter().map(|w| w * w).sum::<f64>() > 1e-3);
        let lo = LocalOscillator::new(amplitude, "aligned", Frame::Moving, grid).unwrap();
        let report = homodyne_report(&lo, &md).unwrap();
        prop_assert!(report.q2_min <= 0.25 + 1e-12, "{}", report.q2_min);
    }

    #[test]
    fn config_survives_json_round_trip(n_exp in 5u32..11, tau in 5.0f64..80.0, lnl in prop::collection::vec(prop::option::of(0.01f64..100.0), 1..5)) {
        let mut config = RunConfig::default();
        config.grid.n_points = 1 << n_exp;
        config.pump.tau_p_fs = tau;
        config.pump.l_nl_mm = lnl;
        let back = RunConfig::from_json(&config.to_json()).unwrap();
        prop_assert_eq!(back.hash(), config.hash());
        prop_assert_eq!(back, config);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn propagation_is_linear_over_real_scalars(a in field(64), b in field(64), x in -2.0f64..2.0, y in -2.0f64..2.0, l_nl in 0.2f64..5.0) {
        let (model, grid) = bbo_grid(64);
        let spec = PumpSpec::new(24.0, model.omega_pump(), l_nl, 1.0).unwrap();
        let prop = Propagator::new(&spec, &model, &grid).unwrap();
        let run = |f: &[Complex64]| prop.propagate_field(f, Scheme::SplitStep, 20).unwrap();
        let combined: Vec<Complex64> = a.iter().zip(&b).map(|(p, q)| p * x + q * y).collect();
        let lhs = run(&combined);
        let (pa, pb) = (run(&a), run(&b));
        let rhs: Vec<Complex64> = pa.iter().zip(&pb).map(|(p, q)| p * x + q * y).collect();
        let scale = rhs.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10 * scale);
    }

    #[test]
    fn green_pairs_are_symplectic_and_invert_backwards(tau in 12.0f64..30.0, l_nl in 0.1f64..10.0) {
        let (model, grid) = bbo_grid(64);
        let spec = PumpSpec::new(tau, model.omega_pump(), l_nl, 1.0).unwrap();
        let prop = Propagator::new(&spec, &model, &grid).unwrap();
        let steps = 30;
        let forward = prop.compute_green(Scheme::SplitStep, steps).unwrap();
        let r = forward.symplectic_residuals();
        prop_assert!(r.unitarity < 1e-8 && r.symmetry < 1e-8, "{r:?}");
        let backward = prop.compute_green_backward(Scheme::SplitStep, steps).unwrap();
        let round = backward.compose(&forward).unwrap();
        let id = CMatrix::identity(64, 64);
        let scale = linalg::spectral_norm(&forward.c).powi(2);
        prop_assert!(linalg::frobenius(&(&round.c - &id)) < 1e-8 * scale);
        prop_assert!(linalg::frobenius(&round.s) < 1e-8 * scale);
    }
}
