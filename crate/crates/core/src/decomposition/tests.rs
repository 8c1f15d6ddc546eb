use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::grid::PumpProfile;
use crate::propagator::{FramePhase, GreenMeta};

fn grid(n: usize) -> FrequencyGrid {
    FrequencyGrid::new(n, 2.35456, (n as f64 / 32.0).min(2.0)).unwrap()
}

fn pair(c: CMatrix, s: CMatrix, grid: FrequencyGrid) -> GreenPair {
    GreenPair {
        c,
        s,
        grid,
        frame: Frame::Moving,
        meta: GreenMeta {
            spec: PumpSpec::new(24.0, 4.709, 1.0, 1.0).unwrap(),
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

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    m.qr().q()
}

fn random_unit_vector(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let v = CMatrix::from_fn(n, 1, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// C = A·cosh(ζ)·Bᵀ, S = A·sinh(ζ)·B† for unitary A, B.
fn symplectic_from(a: &CMatrix, b: &CMatrix, zetas: &[f64]) -> (CMatrix, CMatrix) {
    let n = zetas.len();
    let ch = CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(zetas[i].cosh(), 0.0) } else { Complex64::new(0.0, 0.0) });
    let sh = CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(zetas[i].sinh(), 0.0) } else { Complex64::new(0.0, 0.0) });
    (a * ch * b.transpose(), a * sh * b.adjoint())
}

fn physical(n: usize, l_nl: f64) -> (PumpSpec, DispersionModel, FrequencyGrid) {
    let model = DispersionModel::bbo();
    let wp = model.omega_pump();
    let span = (n as f64 / 32.0).min(2.0);
    (
        PumpSpec::new(24.0, wp, l_nl, 1.0).unwrap(),
        model,
        FrequencyGrid::new(n, 0.5 * wp, span).unwrap(),
    )
}

#[test]
fn diagonal_phase_pair_has_no_squeezing() {
    let g = grid(16);
    let c = CMatrix::from_fn(16, 16, |i, j| if i == j { Complex64::from_polar(1.0, 0.3 * i as f64) } else { Complex64::new(0.0, 0.0) });
    let md = bloch_messiah(&pair(c, CMatrix::zeros(16, 16), g), DEFAULT_DEGENERACY_TOLERANCE).unwrap();
    assert!(md.zetas.iter().all(|z| *z == 0.0));
    assert!(md.orthonormality_error() < 1e-12);
    assert_eq!(md.total_photons(), 0.0);
    assert_eq!(md.tail_ratio(), 0.0);
}

#[test]
fn single_mode_synthetic_pair_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = grid(32);
    let n = 32;
    for z in [0.05f64, 0.8, 3.0] {
        let u = random_unit_vector(n, &mut rng);
        let proj = &u * u.adjoint();
        let c = &proj * Complex64::new(z.cosh(), 0.0) + (CMatrix::identity(n, n) - &proj);
        let s = &u * u.transpose() * Complex64::new(z.sinh(), 0.0);
        let gp = pair(c, s, g);
        assert!(gp.symplectic_residuals().max() < 1e-12);
        let md = bloch_messiah(&gp, DEFAULT_DEGENERACY_TOLERANCE).unwrap();
        assert!((md.zetas[0] - z).abs() < 1e-12 * z.max(1.0));
        assert!(md.zetas[1..].iter().all(|v| *v < 1e-7));
        let psi0 = md.psi_column(0);
        let overlap: Complex64 = psi0.iter().zip(u.iter()).map(|(p, v)| p.conj() * v.conj()).sum::<Complex64>() * g.spacing.sqrt();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
        let u_dot_u: Complex64 = u.iter().map(|v| v * v).sum();
        assert!((md.verify_conjugacy(1)[0] - u_dot_u.norm()).abs() < 1e-10);
    }
}

#[test]
fn real_single_mode_is_its_own_time_reverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 16;
    let u = random_unit_vector(n, &mut rng).map(|v| Complex64::new(v.re, 0.0));
    let u = &u / Complex64::new(u.norm(), 0.0);
    let proj = &u * u.adjoint();
    let c = &proj * Complex64::new(1.5f64.cosh(), 0.0) + (CMatrix::identity(n, n) - &proj);
    let s = &u * u.transpose() * Complex64::new(1.5f64.sinh(), 0.0);
    let md = bloch_messiah(&pair(c, s, grid(16)), DEFAULT_DEGENERACY_TOLERANCE).unwrap();
    assert!((md.verify_conjugacy(1)[0] - 1.0).abs() < 1e-12);
}

#[test]
fn weak_pump_reconstructs_with_clustered_singular_values() {
    let (spec, model, g) = physical(64, 10.0);
    let gp = compute_moving(&spec, &model, &g, 400);
    let md = bloch_messiah(&gp, DEFAULT_DEGENERACY_TOLERANCE).unwrap();
    assert!(md.reconstruction_error < 1e-11, "{}", md.reconstruction_error);
}

#[test]
fn random_multimode_pair_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 24;
    let mut zetas: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0).collect();
    zetas.sort_by(|a, b| b.total_cmp(a));
    let (a, b) = (random_unitary(n, &mut rng), random_unitary(n, &mut rng));
    let (c, s) = symplectic_from(&a, &b, &zetas);
    let md = bloch_messiah(&pair(c, s, FrequencyGrid { n_points: n, ..grid(32) }), DEFAULT_DEGENERACY_TOLERANCE).unwrap();
    for (got, want) in md.zetas.iter().zip(&zetas) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    assert!(md.reconstruction_error < 1e-12);
    assert!(md.orthonormality_error() < 1e-10);
    assert!(md.pairing_residual < 1e-10);
}

#[test]
fn degenerate_spectrum_is_resolved_by_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 12;
    let zetas = [1.2, 1.2, 1.2, 0.7, 0.7, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let (a, b) = (random_unitary(n, &mut rng), random_unitary(n, &mut rng));
    let (c, s) = symplectic_from(&a, &b, &zetas);
    let md = bloch_messiah(&pair(c, s, FrequencyGrid { n_points: n, ..grid(16) }), DEFAULT_DEGENERACY_TOLERANCE).unwrap();
    for (got, want) in md.zetas.iter().zip(&zetas) {
        assert!((got - want).abs() < 1e-10);
    }
    assert!(md.reconstruction_error < 1e-12);
    assert!(md.orthonormality_error() < 1e-10);
}

#[test]
fn spectrum_is_invariant_under_grid_permutation() {
    let (spec, model, g) = physical(64, 1.0);
    let gp = compute_moving(&spec, &model, &g, 100);
    let md = bloch_messiah(&gp, DEFAULT_DEGENERACY_TOLERANCE).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut perm: Vec<usize> = (0..64).collect();
    for i in (1..64).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let c = CMatrix::from_fn(64, 64, |i, j| gp.c[(perm[i], perm[j])]);
    let s = CMatrix::from_fn(64, 64, |i, j| gp.s[(perm[i], perm[j])]);
    let shuffled = bloch_messiah(&GreenPair { c, s, ..gp.clone() }, DEFAULT_DEGENERACY_TOLERANCE).unwrap();
    let worst = md
        .zetas
        .iter()
        .zip(&shuffled.zetas)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

fn compute_moving(spec: &PumpSpec, model: &DispersionModel, g: &FrequencyGrid, steps: usize) -> GreenPair {
    Propagator::new(spec, model, g)
        .unwrap()
        .compute_green(Scheme::SplitStep, steps)
        .unwrap()
        .to_moving_frame()
        .unwrap()
}

#[test]
fn physical_pair_satisfies_structural_identities() {
    let (spec, model, g) = physical(128, 1.0);
    let gp = compute_moving(&spec, &model, &g, 400);
    let md = decompose(&gp).unwrap();
    assert_eq!(md.frame, Frame::Moving);
    assert!(md.zetas.windows(2).all(|w| w[0] >= w[1]));
    assert!(md.reconstruction_error < 1e-8);
    assert!(md.orthonormality_error() < 1e-10);
    assert!(md.pairing_residual < 1e-6);
    let s_norm = frobenius(&gp.s).powi(2);
    assert!((md.total_photons() - s_norm).abs() < 1e-8 * s_norm);
    assert!(md.verify_conjugacy(5).iter().all(|o| *o > 0.999));
    assert!(md.tail_ratio() < 1e-6);
}

#[test]
fn decompose_accepts_lab_frame_input() {
    let (spec, model, g) = physical(64, 1.0);
    let lab = compute_green_lab(&spec, &model, &g);
    let a = decompose(&lab).unwrap();
    let b = decompose(&lab.to_moving_frame().unwrap()).unwrap();
    assert_eq!(a.zetas, b.zetas);
    assert_eq!(a.psi, b.psi);
}

fn compute_green_lab(spec: &PumpSpec, model: &DispersionModel, g: &FrequencyGrid) -> GreenPair {
    Propagator::new(spec, model, g).unwrap().compute_green(Scheme::SplitStep, 100).unwrap()
}

#[test]
fn chirped_pump_breaks_conjugacy() {
    let (spec, model, g) = physical(128, 1.0);
    let pump = PumpProfile::gaussian(&spec, &g).unwrap().with_quadratic_phase(spec.omega_p, 400.0);
    let gp = Propagator::with_pump(&spec, &model, &g, &pump)
        .unwrap()
        .compute_green(Scheme::SplitStep, 400)
        .unwrap();
    let md = decompose(&gp).unwrap();
    let overlap = md.verify_conjugacy(1)[0];
    assert!(overlap < 0.99, "{overlap}");
}

#[test]
fn doubling_steps_leaves_leading_zeta_unchanged() {
    let (spec, model, g) = physical(64, 1.0 / 3.0);
    let a = decompose(&compute_moving(&spec, &model, &g, 400)).unwrap();
    let b = decompose(&compute_moving(&spec, &model, &g, 800)).unwrap();
    assert!((a.zetas[0] - b.zetas[0]).abs() < 1e-6 * a.zetas[0]);
}

#[test]
fn hermite_self_fit_recovers_width() {
    let g = FrequencyGrid::new(512, 2.35456, 2.0).unwrap();
    for n in 0..4 {
        let mode: Vec<Complex64> = (0..512)
            .map(|j| Complex64::from_polar(20f64.sqrt() * hermite_function(n, 20.0 * g.offset(j)), 0.01 * j as f64))
            .collect();
        let (tau, residual) = fit_hermite_width_with_residual(&mode, n, &g).unwrap();
        assert!((tau - 20.0).abs() < 1e-6 * 20.0, "n={n}: {tau}");
        assert!(residual < 1e-6);
    }
}

#[test]
fn non_hermite_shape_fails_fit() {
    let g = FrequencyGrid::new(256, 2.35456, 2.0).unwrap();
    let mode: Vec<Complex64> = (0..256)
        .map(|j| {
            let x = g.offset(j);
            Complex64::new((-(x - 0.4).powi(2) * 400.0).exp() + (-(x + 0.4).powi(2) * 400.0).exp(), 0.0)
        })
        .collect();
    assert!(matches!(fit_hermite_width(&mode, 0, &g), Err(Error::FitFailure { .. })));
    assert!(matches!(fit_hermite_width(&mode[..10], 0, &g), Err(Error::LengthMismatch { .. })));
}

#[test]
fn zeta_scaling_is_inverse_in_nonlinear_length() {
    let (spec, model, g) = physical(64, 1.0);
    let table = zeta_scaling_table(&spec, &[10.0, 1.0, 0.2], &model, &g, Scheme::SplitStep, 3).unwrap();
    for n in 0..3 {
        let reference = table.scaled[0][n];
        for row in &table.scaled {
            assert!((row[n] - reference).abs() < 0.02 * reference);
        }
    }
    assert!(zeta_scaling_table(&spec, &[], &model, &g, Scheme::SplitStep, 3).is_err());
}

#[test]
fn save_writes_hashed_tables() {
    let (spec, model, g) = physical(32, 1.0);
    let md = decompose(&compute_green_lab(&spec, &model, &g)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    md.save(dir.path(), "abc123", 4).unwrap();
    let zetas = Table::read(&dir.path().join("zetas.csv")).unwrap();
    assert_eq!(zetas.column("zeta").unwrap(), md.zetas);
    let psi = std::fs::read_to_string(dir.path().join("psi.csv")).unwrap();
    assert!(psi.contains("# config_sha256 abc123"));
    assert!(dir.path().join("meta.json").exists());
}

