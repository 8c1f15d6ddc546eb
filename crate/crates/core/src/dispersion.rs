//! Refractive indices, wavevectors and phase mismatch for a type-I uniaxial crystal.
//!
//! Units are fixed across the crate: time in fs, length in mm, angular frequency in
//! rad/fs and wavevectors in rad/mm. Wavelengths are accepted in nm at the API
//! boundary and converted to µm for the Sellmeier form.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in mm/fs.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e-4;

/// Wavelength range (nm) over which the Sellmeier curves are evaluated.
pub const WINDOW_NM: (f64, f64) = (250.0, 1600.0);

/// Base finite-difference step for the dispersion coefficients, rad/fs.
pub const FD_STEP: f64 = 1e-3;

pub fn wavelength_nm_to_omega(lambda_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (lambda_nm * 1e-6)
}

pub fn omega_to_wavelength_nm(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e6
}

/// Sellmeier form n²(λ) = A + B/(λ² − C) − Dλ², λ in µm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sellmeier {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sellmeier {
    pub const BBO_ORDINARY: Sellmeier = Sellmeier {
        a: 2.7359,
        b: 0.01878,
        c: 0.01822,
        d: 0.01354,
    };
    pub const BBO_EXTRAORDINARY: Sellmeier = Sellmeier {
        a: 2.3753,
        b: 0.01224,
        c: 0.01667,
        d: 0.01516,
    };
    pub const VACUUM: Sellmeier = Sellmeier {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };

    pub fn from_array(v: [f64; 4]) -> Self {
        Sellmeier {
            a: v[0],
            b: v[1],
            c: v[2],
            d: v[3],
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn index(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let b_term = if self.b == 0.0 { 0.0 } else { self.b / (l2 - self.c) };
        (self.a + b_term - self.d * l2).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    Ordinary,
    /// Extraordinary wave propagating at the model's angle to the optic axis.
    Extraordinary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    /// Ordinary-polarized down-converted light, expanded around ω_p/2.
    Signal,
    /// Extraordinary-polarized pump, expanded around ω_p.
    Pump,
}

/// Derivatives of the signal and pump wavevectors at their carrier frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionCoefficients {
    pub omega_pump: f64,
    pub signal: [f64; 4],
    pub pump: [f64; 4],
}

impl DispersionCoefficients {
    /// Second-order expansion of k_p(ω+ω′) − k(ω) − k(ω′) around the degenerate point.
    pub fn phase_mismatch_quadratic(&self, omega: f64, omega_prime: f64) -> f64 {
        let center = 0.5 * self.omega_pump;
        let sum = omega + omega_prime - self.omega_pump;
        let x = omega - center;
        let y = omega_prime - center;
        (self.pump[1] - self.signal[1]) * sum - 0.5 * self.signal[2] * (x * x + y * y)
            + 0.5 * self.pump[2] * sum * sum
    }

    /// Group-velocity mismatch β₁,p − β₁ in fs/mm.
    pub fn walk_off(&self) -> f64 {
        self.pump[1] - self.signal[1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub sellmeier_o: Sellmeier,
    pub sellmeier_e: Sellmeier,
    /// Angle between propagation direction and optic axis, radians.
    pub theta: f64,
    pub lambda_pump_nm: f64,
    pub lambda_signal_nm: f64,
}

impl DispersionModel {
    /// BBO with the propagation angle solved for 400 nm → 800 nm degenerate type-I matching.
    pub fn bbo() -> Self {
        let mut model = DispersionModel {
            sellmeier_o: Sellmeier::BBO_ORDINARY,
            sellmeier_e: Sellmeier::BBO_EXTRAORDINARY,
            theta: 0.0,
            lambda_pump_nm: 400.0,
            lambda_signal_nm: 800.0,
        };
        model.theta = model
            .find_phase_matching_angle()
            .expect("BBO coefficients admit a phase-matching angle");
        model
    }

    /// n ≡ 1 for both polarizations.
    pub fn vacuum() -> Self {
        DispersionModel {
            sellmeier_o: Sellmeier::VACUUM,
            sellmeier_e: Sellmeier::VACUUM,
            theta: 0.0,
            lambda_pump_nm: 400.0,
            lambda_signal_nm: 800.0,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn omega_pump(&self) -> f64 {
        wavelength_nm_to_omega(self.lambda_pump_nm)
    }

    /// Signal carrier, always half the pump carrier.
    pub fn omega_signal(&self) -> f64 {
        0.5 * self.omega_pump()
    }

    fn check_window(omega: f64) -> Result<f64> {
        let lambda_nm = omega_to_wavelength_nm(omega);
        if !(omega > 0.0) || !(WINDOW_NM.0..=WINDOW_NM.1).contains(&lambda_nm) {
            return Err(Error::Domain {
                wavelength_nm: lambda_nm,
                min_nm: WINDOW_NM.0,
                max_nm: WINDOW_NM.1,
            });
        }
        Ok(lambda_nm * 1e-3)
    }

    fn index_at_angle(&self, lambda_um: f64, theta: f64) -> f64 {
        let no = self.sellmeier_o.index(lambda_um);
        let ne = self.sellmeier_e.index(lambda_um);
        let (s, c) = theta.sin_cos();
        1.0 / (c * c / (no * no) + s * s / (ne * ne)).sqrt()
    }

    pub fn refractive_index(&self, omega: f64, polarization: Polarization) -> Result<f64> {
        let lambda_um = Self::check_window(omega)?;
        Ok(match polarization {
            Polarization::Ordinary => self.sellmeier_o.index(lambda_um),
            Polarization::Extraordinary => self.index_at_angle(lambda_um, self.theta),
        })
    }

    pub fn wavevector(&self, omega: f64, field: Field) -> Result<f64> {
        let polarization = match field {
            Field::Signal => Polarization::Ordinary,
            Field::Pump => Polarization::Extraordinary,
        };
        Ok(self.refractive_index(omega, polarization)? * omega / SPEED_OF_LIGHT)
    }

    fn derivative(&self, field: Field, order: usize, h: f64) -> Result<f64> {
        let center = match field {
            Field::Signal => self.omega_signal(),
            Field::Pump => self.omega_pump(),
        };
        let k = |dw: f64| self.wavevector(center + dw, field);
        Ok(match order {
            0 => k(0.0)?,
            1 => (k(h)? - k(-h)?) / (2.0 * h),
            2 => (k(h)? - 2.0 * k(0.0)? + k(-h)?) / (h * h),
            3 => (k(2.0 * h)? - 2.0 * k(h)? + 2.0 * k(-h)? - k(-2.0 * h)?) / (2.0 * h * h * h),
            _ => {
                return Err(Error::Unsupported(format!(
                    "dispersion order {order} (supported: 0..=3)"
                )))
            }
        })
    }

    /// β_n = dⁿk/dωⁿ at the carrier, by central differences with one Richardson step.
    pub fn beta(&self, field: Field, order: usize) -> Result<f64> {
        self.beta_with_step(field, order, FD_STEP)
    }

    pub fn beta_with_step(&self, field: Field, order: usize, h: f64) -> Result<f64> {
        if order == 0 {
            return self.derivative(field, 0, h);
        }
        let coarse = self.derivative(field, order, h)?;
        let fine = self.derivative(field, order, 0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    pub fn coefficients(&self) -> Result<DispersionCoefficients> {
        let mut signal = [0.0; 4];
        let mut pump = [0.0; 4];
        for order in 0..4 {
            signal[order] = self.beta(Field::Signal, order)?;
            pump[order] = self.beta(Field::Pump, order)?;
        }
        Ok(DispersionCoefficients {
            omega_pump: self.omega_pump(),
            signal,
            pump,
        })
    }

    /// Exact Δk = k_p(ω+ω′) − k(ω) − k(ω′).
    pub fn phase_mismatch(&self, omega: f64, omega_prime: f64) -> Result<f64> {
        Ok(self.wavevector(omega + omega_prime, Field::Pump)?
            - self.wavevector(omega, Field::Signal)?
            - self.wavevector(omega_prime, Field::Signal)?)
    }

    pub fn phase_mismatch_quadratic(&self, omega: f64, omega_prime: f64) -> Result<f64> {
        Ok(self
            .coefficients()?
            .phase_mismatch_quadratic(omega, omega_prime))
    }

    /// Angle at which the extraordinary pump index equals the ordinary signal index.
    pub fn find_phase_matching_angle(&self) -> Result<f64> {
        let pump_um = Self::check_window(wavelength_nm_to_omega(self.lambda_pump_nm))?;
        let signal_um = Self::check_window(wavelength_nm_to_omega(self.lambda_signal_nm))?;
        let target = self.sellmeier_o.index(signal_um);
        let f = |theta: f64| self.index_at_angle(pump_um, theta) - target;

        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        let (f_lo, f_hi) = (f(lo), f(hi));
        if f_lo == 0.0 {
            return Ok(0.0);
        }
        if f_hi == 0.0 {
            return Ok(FRAC_PI_2);
        }
        if f_lo.signum() == f_hi.signum() {
            return Err(Error::NoRoot(format!(
                "index mismatch has the same sign at 0 ({f_lo:.3e}) and 90 degrees ({f_hi:.3e})"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid).signum() == f_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        debug_assert!(hi - lo <= 1e-9);
        Ok(0.5 * (lo + hi))
    }
}
