//! Balanced homodyne detection of the amplifier output with a pulsed local oscillator.
//!
//! The detected mode operator is b = ∫ψ_LO(ω)a_out(ω)dω and the measured quadrature
//! is Q_φ = (−ie^{iφ}b + h.c.)/2, so the vacuum variance is 1/4.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::ModeDecomposition;
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::perturbative::frame_wavevectors;
use crate::propagator::{Frame, FramePhase, GreenPair};

/// Denominator magnitude below which the efficiency is reported as degenerate.
pub const EFFICIENCY_DEGENERACY: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalOscillator {
    pub amplitude: Vec<Complex64>,
    pub label: String,
    pub frame: Frame,
    pub grid: FrequencyGrid,
}

impl LocalOscillator {
    /// Normalizes an arbitrary amplitude on the grid.
    pub fn new(mut amplitude: Vec<Complex64>, label: impl Into<String>, frame: Frame, grid: FrequencyGrid) -> Result<Self> {
        if amplitude.len() != grid.n_points {
            return Err(Error::LengthMismatch {
                expected: grid.n_points,
                got: amplitude.len(),
            });
        }
        if grid.norm_sqr(&amplitude) == 0.0 {
            return Err(Error::Config("local oscillator amplitude is zero".into()));
        }
        grid.normalize(&mut amplitude);
        Ok(LocalOscillator {
            amplitude,
            label: label.into(),
            frame,
            grid,
        })
    }

    /// Shifts the LO by a global phase e^{iφ₀}.
    pub fn with_phase(mut self, phi0: f64) -> Self {
        let f = Complex64::from_polar(1.0, phi0);
        self.amplitude.iter_mut().for_each(|v| *v *= f);
        self.label = format!("{} phase({phi0})", self.label);
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.norm_sqr(&self.amplitude)
    }
}

/// Gaussian LO ∝ exp[−τ_LO²(ω − ω_c)²/2], optionally carrying the output-mode
/// propagation phase e^{−ik(ω)L/2}. Without phase locking the phase is flat in
/// the moving frame.
pub fn gaussian_lo(
    tau_lo: f64,
    model: &DispersionModel,
    length: f64,
    grid: &FrequencyGrid,
    phase_locked: bool,
    frame: Frame,
) -> Result<LocalOscillator> {
    if !(tau_lo > 0.0) || !tau_lo.is_finite() {
        return Err(Error::Config(format!("tau_LO must be positive, got {tau_lo}")));
    }
    grid.check_wraparound(tau_lo)?;
    let k_moving = frame_wavevectors(model, grid, length, Frame::Moving)?;
    let frame_phase = FramePhase::new(model, grid, length)?;
    let amplitude = (0..grid.n_points)
        .map(|j| {
            let x = grid.offset(j);
            let mut phase = if phase_locked { -0.5 * k_moving[j] * length } else { 0.0 };
            if frame == Frame::Lab {
                phase -= 0.5 * frame_phase.rate(grid.omega(j)) * length;
            }
            Complex64::from_polar((-0.5 * tau_lo * tau_lo * x * x).exp(), phase)
        })
        .collect();
    let label = format!(
        "gaussian(tau_LO={tau_lo} fs{})",
        if phase_locked { ", phase-locked" } else { "" }
    );
    LocalOscillator::new(amplitude, label, frame, *grid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoDecomposition {
    pub m: Vec<f64>,
    /// In (−π, π].
    pub theta: Vec<f64>,
    pub leakage: f64,
}

fn wrap_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

fn check_compatible(lo: &LocalOscillator, frame: Frame, grid: &FrequencyGrid) -> Result<()> {
    lo.grid.ensure_same(grid)?;
    if lo.frame != frame {
        return Err(Error::FrameMismatch(format!(
            "local oscillator is in the {} frame but the modes are in the {} frame",
            lo.frame, frame
        )));
    }
    Ok(())
}

/// Coefficients M_n e^{iθ_n} = Σ ψ_n* ψ_LO dω over all computed modes.
pub fn lo_decompose(lo: &LocalOscillator, md: &ModeDecomposition) -> Result<LoDecomposition> {
    check_compatible(lo, md.frame, &md.grid)?;
    let coeffs = md.psi.adjoint() * nalgebra::DVector::from_column_slice(&lo.amplitude) * Complex64::new(md.grid.spacing, 0.0);
    let m: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
    let theta = coeffs.iter().map(|c| wrap_pi(c.arg())).collect();
    let leakage = lo.norm_sqr() - m.iter().map(|v| v * v).sum::<f64>();
    Ok(LoDecomposition { m, theta, leakage })
}

fn mode_term(m: f64, theta: f64, zeta: f64, phi: f64) -> f64 {
    let a = theta + phi;
    0.25 * m * m * ((2.0 * zeta).exp() * a.sin().powi(2) + (-2.0 * zeta).exp() * a.cos().powi(2))
}

/// ⟨Q_φ²⟩ from the mode coefficients, with leaked LO mass seeing vacuum noise.
pub fn quadrature_noise(m: &[f64], theta: &[f64], zetas: &[f64], leakage: f64, phi: f64) -> f64 {
    m.iter()
        .zip(theta)
        .zip(zetas)
        .map(|((&m, &t), &z)| mode_term(m, t, z, phi))
        .sum::<f64>()
        + 0.25 * leakage
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseExtrema {
    pub q2_min: f64,
    pub q2_max: f64,
    /// LO phase achieving q2_min, in (−π/2, π/2].
    pub theta_opt: f64,
}

fn wrap_half_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(PI);
    if y > FRAC_PI_2 {
        y -= PI;
    }
    y
}

/// Closed-form extrema of Q(φ) = A − Re(Z e^{2iφ}) with Z = Σ M_n² sinh(2ζ_n) e^{2iθ_n}/4.
pub fn min_max_noise(m: &[f64], theta: &[f64], zetas: &[f64], leakage: f64) -> NoiseExtrema {
    let z: Complex64 = m
        .iter()
        .zip(theta)
        .zip(zetas)
        .map(|((&m, &t), &zeta)| Complex64::from_polar(0.25 * m * m * (2.0 * zeta).sinh(), 2.0 * t))
        .sum();
    let theta_opt = wrap_half_pi(-0.5 * z.arg());
    NoiseExtrema {
        q2_min: quadrature_noise(m, theta, zetas, leakage, theta_opt),
        q2_max: quadrature_noise(m, theta, zetas, leakage, theta_opt + FRAC_PI_2),
        theta_opt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Efficiency {
    Value(f64),
    Degenerate,
}

impl Efficiency {
    pub fn value(self) -> Option<f64> {
        match self {
            Efficiency::Value(v) => Some(v),
            Efficiency::Degenerate => None,
        }
    }

    /// NaN when degenerate, for tabular output.
    pub fn or_nan(self) -> f64 {
        self.value().unwrap_or(f64::NAN)
    }
}

/// Mode-matching efficiency inferred from the extreme quadrature variances.
pub fn efficiency(q2_min: f64, q2_max: f64) -> Efficiency {
    let den = 4.0 * q2_max + 4.0 * q2_min - 2.0;
    if den.abs() < EFFICIENCY_DEGENERACY {
        return Efficiency::Degenerate;
    }
    Efficiency::Value((-16.0 * q2_max * q2_min + 4.0 * q2_max + 4.0 * q2_min - 1.0) / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneReport {
    pub label: String,
    pub m: Vec<f64>,
    pub theta: Vec<f64>,
    pub q2_min: f64,
    pub q2_max: f64,
    pub theta_opt: f64,
    pub eta: Efficiency,
    pub leakage: f64,
}

impl HomodyneReport {
    /// Σ M_n² over odd n.
    pub fn odd_mass(&self) -> f64 {
        self.m.iter().skip(1).step_by(2).map(|v| v * v).sum()
    }

    pub fn q2_min_db(&self) -> f64 {
        10.0 * (4.0 * self.q2_min).log10()
    }
}

pub fn homodyne_report(lo: &LocalOscillator, md: &ModeDecomposition) -> Result<HomodyneReport> {
    let dec = lo_decompose(lo, md)?;
    let ext = min_max_noise(&dec.m, &dec.theta, &md.zetas, dec.leakage);
    Ok(HomodyneReport {
        label: lo.label.clone(),
        eta: efficiency(ext.q2_min, ext.q2_max),
        q2_min: ext.q2_min,
        q2_max: ext.q2_max,
        theta_opt: ext.theta_opt,
        m: dec.m,
        theta: dec.theta,
        leakage: dec.leakage,
    })
}

/// Detected-mode coefficients g = Cᵀℓ and h = Sᵀℓ with ℓ = √dω·ψ_LO.
fn detected_coefficients(lo: &LocalOscillator, gp: &GreenPair) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_compatible(lo, gp.frame, &gp.grid)?;
    let l = nalgebra::DVector::from_column_slice(&lo.amplitude) * Complex64::new(gp.grid.spacing.sqrt(), 0.0);
    let g = gp.c.transpose() * &l;
    let h = gp.s.transpose() * &l;
    Ok((g.as_slice().to_vec(), h.as_slice().to_vec()))
}

/// ⟨Q_φ²⟩ = ¼[‖g‖² + ‖h‖² − 2Re(e^{2iφ}Σ g_k h_k)] computed directly from (C, S).
pub fn direct_quadrature_noise(lo: &LocalOscillator, gp: &GreenPair, phi: f64) -> Result<f64> {
    let (g, h) = detected_coefficients(lo, gp)?;
    let rotation = Complex64::from_polar(1.0, phi);
    let mut total = 0.0;
    for (gk, hk) in g.iter().zip(&h) {
        let coeff = -Complex64::i() * rotation * gk + Complex64::i() * rotation.conj() * hk.conj();
        total += coeff.norm_sqr();
    }
    Ok(0.25 * total)
}

/// One row of an LO sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l_nl_mm: f64,
    pub tau_lo_fs: f64,
    pub q2_min: f64,
    pub q2_max: f64,
    pub eta: f64,
    pub theta_opt_rad: f64,
    pub leakage: f64,
}

pub const SWEEP_COLUMNS: [&str; 7] = ["L_nl_mm", "tau_LO_fs", "q2_min", "q2_max", "eta", "theta_opt_rad", "leakage"];

impl SweepRow {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.l_nl_mm,
            self.tau_lo_fs,
            self.q2_min,
            self.q2_max,
            self.eta,
            self.theta_opt_rad,
            self.leakage,
        ]
    }
}

/// Homodyne extrema for every (L_nl, τ_LO), ordered by L_nl then τ_LO as given.
pub fn lo_sweep(
    decompositions: &[(f64, ModeDecomposition)],
    taus: &[f64],
    model: &DispersionModel,
    length: f64,
    phase_locked: bool,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(decompositions.len() * taus.len());
    for (l_nl, md) in decompositions {
        for &tau in taus {
            let lo = gaussian_lo(tau, model, length, &md.grid, phase_locked, md.frame)?;
            let report = homodyne_report(&lo, md)?;
            rows.push(SweepRow {
                l_nl_mm: *l_nl,
                tau_lo_fs: tau,
                q2_min: report.q2_min,
                q2_max: report.q2_max,
                eta: report.eta.or_nan(),
                theta_opt_rad: report.theta_opt,
                leakage: report.leakage,
            });
        }
    }
    Ok(rows)
}
