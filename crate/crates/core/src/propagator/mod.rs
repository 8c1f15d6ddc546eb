//! Integration of the linear signal equation through the crystal.
//!
//! All numerics run in the frame co-moving with the signal group velocity. With
//! φ(ω) = β₀ + β₁(ω − ω_c) and α(ω, z) = e^{iφ(ω)z} a(ω, z), the envelope obeys
//!
//! ∂a/∂z = i[k(ω) − φ(ω)] a + (1/L_nl) ∫dω′ p(ω+ω′) e^{i[k_p(ω+ω′) − φ(ω) − φ(ω′)]z} a*(ω′),
//!
//! which is discretized on amplitudes A_j = √dω·a(ω_j). The pump lives on the
//! 2n-point axis whose index j + k is exactly the pair sum ω_j + ω_k, so the
//! coupling matrix K_jk = P_{j+k} is a Hankel matrix.

mod green;
mod rk4;
mod split_step;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, Field};
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PumpProfile, PumpSpec};

pub use green::{compute_green, GreenMeta, GreenPair, SymplecticResiduals};

/// Split-step steps per millimetre of crystal for L/L_nl ≤ 5.
pub const SPLIT_STEP_STEPS_PER_MM: usize = 400;
/// RK4 steps per millimetre of crystal for L/L_nl ≤ 5.
pub const RK4_STEPS_PER_MM: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    Moving,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Lab => "lab",
            Frame::Moving => "moving",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SplitStep,
    Rk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::SplitStep => "split_step",
            Scheme::Rk4 => "rk4",
        })
    }
}

impl Scheme {
    /// Default step count for a crystal of `length` mm at nonlinear length `l_nl`.
    pub fn default_steps(self, length: f64, l_nl: f64) -> usize {
        let per_mm = match self {
            Scheme::SplitStep => SPLIT_STEP_STEPS_PER_MM,
            Scheme::Rk4 => RK4_STEPS_PER_MM,
        };
        let gain = if l_nl.is_finite() { length / l_nl } else { 0.0 };
        let factor = (gain / 5.0).max(1.0);
        ((per_mm as f64) * length * factor).ceil().max(1.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// From −L/2 to +L/2.
    Forward,
    /// From +L/2 back to −L/2.
    Backward,
}

/// Linear phase φ(ω)·z removed by the moving-frame substitution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePhase {
    pub beta0: f64,
    pub beta1: f64,
    pub center: f64,
    pub length: f64,
}

impl FramePhase {
    /// Reference phase rate β₀ + β₁(ω − ω_c) of the signal at the grid center.
    pub fn new(model: &DispersionModel, grid: &FrequencyGrid, length: f64) -> Result<Self> {
        Ok(FramePhase {
            beta0: model.wavevector(grid.center, Field::Signal)?,
            beta1: model.beta(Field::Signal, 1)?,
            center: grid.center,
            length,
        })
    }

    pub fn rate(&self, omega: f64) -> f64 {
        self.beta0 + self.beta1 * (omega - self.center)
    }

    /// e^{iφ(ω)L/2}.
    pub fn half_factor(&self, omega: f64) -> Complex64 {
        Complex64::from_polar(1.0, 0.5 * self.rate(omega) * self.length)
    }
}

/// Precomputed wavevectors and coupling for one pump and crystal.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub(crate) grid: FrequencyGrid,
    pub(crate) spec: PumpSpec,
    pub(crate) frame_phase: FramePhase,
    pub(crate) pump_label: String,
    /// k(ω_j) in the lab frame.
    pub(crate) k_lab: Vec<f64>,
    /// k(ω_j) − φ(ω_j).
    pub(crate) k_moving: Vec<f64>,
    /// dω·p(Ω_m)/L_nl on the 2n-point pump axis.
    pub(crate) coupling: Vec<Complex64>,
    /// k_p(Ω_m) − 2β₀ − β₁(Ω_m − 2ω_c) on the same axis.
    pub(crate) pump_k: Vec<f64>,
}

impl Propagator {
    pub fn new(spec: &PumpSpec, model: &DispersionModel, grid: &FrequencyGrid) -> Result<Self> {
        let pump = PumpProfile::gaussian(spec, grid)?;
        Self::with_pump(spec, model, grid, &pump)
    }

    pub fn with_pump(
        spec: &PumpSpec,
        model: &DispersionModel,
        grid: &FrequencyGrid,
        pump: &PumpProfile,
    ) -> Result<Self> {
        spec.validate()?;
        grid.ensure_same(&pump_signal_grid(pump))?;
        grid.check_wraparound(spec.tau_p)?;
        let n = grid.n_points;
        let frame_phase = FramePhase::new(model, grid, spec.length)?;
        let (beta0, beta1) = (frame_phase.beta0, frame_phase.beta1);
        let k_lab = grid
            .omegas()
            .into_iter()
            .map(|w| model.wavevector(w, Field::Signal))
            .collect::<Result<Vec<_>>>()?;
        let k_moving = k_lab
            .iter()
            .enumerate()
            .map(|(j, k)| k - frame_phase.rate(grid.omega(j)))
            .collect();

        let peak = pump.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let g = spec.coupling() * grid.spacing;
        let mut coupling = Vec::with_capacity(2 * n);
        let mut pump_k = Vec::with_capacity(2 * n);
        for (m, p) in pump.values.iter().enumerate() {
            let omega = pump.axis.omega(m);
            match model.wavevector(omega, Field::Pump) {
                Ok(k) => {
                    pump_k.push(k - 2.0 * beta0 - beta1 * (omega - 2.0 * grid.center));
                    coupling.push(p * g);
                }
                Err(Error::Domain { .. }) if p.norm() <= 1e-30 * peak => {
                    pump_k.push(0.0);
                    coupling.push(Complex64::new(0.0, 0.0));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Propagator {
            grid: *grid,
            spec: *spec,
            frame_phase,
            pump_label: pump.label.clone(),
            k_lab,
            k_moving,
            coupling,
            pump_k,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn spec(&self) -> &PumpSpec {
        &self.spec
    }

    pub fn frame_phase(&self) -> &FramePhase {
        &self.frame_phase
    }

    pub fn wavevectors(&self) -> &[f64] {
        &self.k_lab
    }

    /// Pump kernel P_m(z) = dω·p_m·e^{i k_p,m z}/L_nl on the 2n-point axis.
    pub(crate) fn kernel_at(&self, z: f64, out: &mut [Complex64]) {
        for ((o, c), k) in out.iter_mut().zip(&self.coupling).zip(&self.pump_k) {
            *o = c * Complex64::from_polar(1.0, k * z);
        }
    }

    /// Bound on the field norm beyond which a run is declared unstable.
    pub(crate) fn growth_bound(&self) -> f64 {
        10.0 * (2.0 * self.spec.length * self.spec.coupling()).exp()
    }

    /// Propagates moving-frame amplitudes in place.
    pub fn propagate_moving(
        &self,
        field: &mut [Complex64],
        scheme: Scheme,
        n_steps: usize,
        direction: Direction,
    ) -> Result<()> {
        if field.len() != self.grid.n_points {
            return Err(Error::LengthMismatch {
                expected: self.grid.n_points,
                got: field.len(),
            });
        }
        if n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        let norm_in: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        match scheme {
            Scheme::SplitStep => {
                let mut columns = vec![field.to_vec()];
                split_step::SplitStepPlan::new(self, n_steps, direction).run(&mut columns);
                field.copy_from_slice(&columns[0]);
            }
            Scheme::Rk4 => {
                let mut state = nalgebra::DMatrix::from_column_slice(field.len(), 1, field);
                rk4::integrate(self, &mut state, n_steps, direction);
                field.copy_from_slice(state.as_slice());
            }
        }
        let norm_out: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let bound = self.growth_bound() * norm_in;
        if !norm_out.is_finite() || norm_out > bound {
            return Err(Error::Instability {
                norm: norm_out,
                bound,
            });
        }
        Ok(())
    }

    /// Maps α(ω; −L/2) to α(ω; +L/2) in the lab frame.
    pub fn propagate_field(
        &self,
        alpha_in: &[Complex64],
        scheme: Scheme,
        n_steps: usize,
    ) -> Result<Vec<Complex64>> {
        let mut a: Vec<Complex64> = alpha_in
            .iter()
            .enumerate()
            .map(|(j, v)| v * self.frame_phase.half_factor(self.grid.omega(j)))
            .collect();
        self.propagate_moving(&mut a, scheme, n_steps, Direction::Forward)?;
        Ok(a.into_iter()
            .enumerate()
            .map(|(j, v)| v * self.frame_phase.half_factor(self.grid.omega(j)))
            .collect())
    }

    /// Maps α(ω; +L/2) back to α(ω; −L/2) in the lab frame.
    pub fn propagate_field_backward(
        &self,
        alpha_out: &[Complex64],
        scheme: Scheme,
        n_steps: usize,
    ) -> Result<Vec<Complex64>> {
        let mut a: Vec<Complex64> = alpha_out
            .iter()
            .enumerate()
            .map(|(j, v)| v * self.frame_phase.half_factor(self.grid.omega(j)).conj())
            .collect();
        self.propagate_moving(&mut a, scheme, n_steps, Direction::Backward)?;
        Ok(a.into_iter()
            .enumerate()
            .map(|(j, v)| v * self.frame_phase.half_factor(self.grid.omega(j)).conj())
            .collect())
    }
}

fn pump_signal_grid(pump: &PumpProfile) -> FrequencyGrid {
    FrequencyGrid {
        n_points: pump.axis.n_points / 2,
        center: 0.5 * pump.axis.center,
        spacing: pump.axis.spacing,
    }
}

/// Convenience wrapper building a Gaussian-pump propagator for a single run.
pub fn propagate_field(
    alpha_in: &[Complex64],
    spec: &PumpSpec,
    model: &DispersionModel,
    grid: &FrequencyGrid,
    scheme: Scheme,
    n_steps: usize,
) -> Result<Vec<Complex64>> {
    Propagator::new(spec, model, grid)?.propagate_field(alpha_in, scheme, n_steps)
}
