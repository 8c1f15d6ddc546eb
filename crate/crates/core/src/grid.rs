//! Uniform frequency grids, the normalized pump spectrum and the unitary
//! frequency/time transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest fraction of pump spectral mass allowed to fall off the pump axis.
pub const MAX_MASS_CUT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub n_points: usize,
    pub center: f64,
    pub spacing: f64,
}

impl FrequencyGrid {
    pub fn new(n_points: usize, center: f64, span: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::InvalidGrid(format!("span must be positive, got {span}")));
        }
        if !(center > 0.0) || !center.is_finite() {
            return Err(Error::InvalidGrid(format!("center must be positive, got {center}")));
        }
        Ok(FrequencyGrid {
            n_points,
            center,
            spacing: span / n_points as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn span(&self) -> f64 {
        self.spacing * self.n_points as f64
    }

    /// Offset of grid point `j` from the center, rad/fs.
    pub fn offset(&self, j: usize) -> f64 {
        (j as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    pub fn omega(&self, j: usize) -> f64 {
        self.center + self.offset(j)
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.omega(j)).collect()
    }

    /// Index of the grid point nearest to the center frequency.
    pub fn center_index(&self) -> usize {
        self.n_points / 2
    }

    /// Length of the periodic time window, 2π/dω.
    pub fn time_window(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    pub fn time_step(&self) -> f64 {
        self.time_window() / self.n_points as f64
    }

    pub fn time(&self, l: usize) -> f64 {
        (l as f64 - (self.n_points / 2) as f64) * self.time_step()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|l| self.time(l)).collect()
    }

    /// Axis for pump frequencies Ω = ω + ω′: twice the points, same spacing,
    /// centred on twice the signal center, so that index j + k addresses ω_j + ω_k.
    pub fn pump_axis(&self) -> FrequencyGrid {
        FrequencyGrid {
            n_points: 2 * self.n_points,
            center: 2.0 * self.center,
            spacing: self.spacing,
        }
    }

    /// Fails if a pulse of duration `tau` (fs) does not fit four times into the window.
    pub fn check_wraparound(&self, tau: f64) -> Result<()> {
        let required = 4.0 * tau;
        let window = self.time_window();
        if window <= required {
            return Err(Error::Wraparound {
                window_fs: window,
                required_fs: required,
            });
        }
        Ok(())
    }

    pub fn same_as(&self, other: &FrequencyGrid) -> bool {
        self.n_points == other.n_points
            && (self.center - other.center).abs() <= 1e-12 * self.center.abs()
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing.abs()
    }

    pub fn ensure_same(&self, other: &FrequencyGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({} points, center {}, spacing {}) vs ({} points, center {}, spacing {})",
                self.n_points, self.center, self.spacing, other.n_points, other.center, other.spacing
            )))
        }
    }

    /// Σ conj(a)·b·dω.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * self.spacing
    }

    pub fn norm_sqr(&self, a: &[Complex64]) -> f64 {
        a.iter().map(|x| x.norm_sqr()).sum::<f64>() * self.spacing
    }

    /// Rescales `a` in place so that Σ|a|²dω = 1.
    pub fn normalize(&self, a: &mut [Complex64]) {
        let norm = self.norm_sqr(a).sqrt();
        if norm > 0.0 {
            a.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Gaussian amplitude duration, fs.
    pub tau_p: f64,
    pub omega_p: f64,
    /// Nonlinear length in mm; `f64::INFINITY` switches the coupling off.
    #[serde(with = "infinite_as_null")]
    pub l_nl: f64,
    /// Crystal length, mm.
    pub length: f64,
}

/// Stores an infinite length as JSON `null`.
pub mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl PumpSpec {
    pub fn new(tau_p: f64, omega_p: f64, l_nl: f64, length: f64) -> Result<Self> {
        let spec = PumpSpec {
            tau_p,
            omega_p,
            l_nl,
            length,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_p > 0.0) || !self.tau_p.is_finite() {
            return Err(Error::InvalidPump(format!("tau_p must be positive, got {}", self.tau_p)));
        }
        if !(self.omega_p > 0.0) || !self.omega_p.is_finite() {
            return Err(Error::InvalidPump(format!("omega_p must be positive, got {}", self.omega_p)));
        }
        if !(self.l_nl > 0.0) || self.l_nl.is_nan() {
            return Err(Error::InvalidPump(format!("L_nl must be positive, got {}", self.l_nl)));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidPump(format!("L must be positive, got {}", self.length)));
        }
        Ok(())
    }

    pub fn with_l_nl(mut self, l_nl: f64) -> Self {
        self.l_nl = l_nl;
        self
    }

    pub fn coupling(&self) -> f64 {
        if self.l_nl.is_infinite() {
            0.0
        } else {
            1.0 / self.l_nl
        }
    }
}

/// Pump spectrum on the pump axis of a signal grid, normalized so Σ p·dΩ = 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpProfile {
    pub axis: FrequencyGrid,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl PumpProfile {
    /// Gaussian p(Ω) ∝ exp[−τ_p²(Ω−ω_p)²/2].
    pub fn gaussian(spec: &PumpSpec, grid: &FrequencyGrid) -> Result<Self> {
        spec.validate()?;
        let axis = grid.pump_axis();
        let values: Vec<Complex64> = (0..axis.n_points)
            .map(|m| {
                let y = axis.omega(m) - spec.omega_p;
                Complex64::new((-0.5 * spec.tau_p * spec.tau_p * y * y).exp(), 0.0)
            })
            .collect();
        let sum: f64 = values.iter().map(|v| v.re).sum::<f64>() * axis.spacing;
        let exact = (2.0 * PI).sqrt() / spec.tau_p;
        let mass_cut = (1.0 - sum / exact).abs();
        if mass_cut > MAX_MASS_CUT {
            return Err(Error::Normalization { mass_cut });
        }
        let values = values.into_iter().map(|v| v / sum).collect();
        Ok(PumpProfile {
            axis,
            values,
            label: format!("gaussian(tau_p={} fs)", spec.tau_p),
        })
    }

    /// Multiplies the spectrum by exp[i·a·(Ω−ω_p)²], giving a chirped pump at the crystal center.
    pub fn with_quadratic_phase(mut self, omega_p: f64, a: f64) -> Self {
        for (m, v) in self.values.iter_mut().enumerate() {
            let y = self.axis.omega(m) - omega_p;
            *v *= Complex64::from_polar(1.0, a * y * y);
        }
        self.label = format!("{} chirp({a} fs^2)", self.label);
        self
    }

    /// Value at ω_j + ω_k of the signal grid the profile was built on.
    pub fn at_pair(&self, j: usize, k: usize) -> Complex64 {
        self.values[j + k]
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.axis.spacing
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToTime,
    ToFrequency,
}

/// Unitary transform between the frequency grid and the centred time axis.
///
/// To time: f̃(t_l) = dω/√(2π) Σ_j f(ω_j) e^{−i(ω_j−ω_c)t_l}, and the inverse
/// with e^{+i(ω_j−ω_c)t_l} and dt/√(2π). Both preserve Σ|f|²dω = Σ|f̃|²dt.
pub fn transform(field: &[Complex64], direction: Direction, grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    let n = grid.n_points;
    if field.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: field.len(),
        });
    }
    let mut planner = FftPlanner::<f64>::new();
    let half = n / 2;
    let sign = |j: usize| if (j + half) % 2 == 0 { 1.0 } else { -1.0 };
    let mut buf: Vec<Complex64> = field.iter().enumerate().map(|(j, v)| v * sign(j)).collect();
    let scale = match direction {
        Direction::ToTime => {
            planner.plan_fft_forward(n).process(&mut buf);
            grid.spacing / (2.0 * PI).sqrt()
        }
        Direction::ToFrequency => {
            planner.plan_fft_inverse(n).process(&mut buf);
            grid.time_step() / (2.0 * PI).sqrt()
        }
    };
    Ok(buf
        .into_iter()
        .enumerate()
        .map(|(l, v)| v * (scale * if l % 2 == 0 { 1.0 } else { -1.0 }))
        .collect())
}
