//! Weak-pump model: first-order Green function, its Gaussian approximation with the
//! geometric squeezing spectrum and Hermite-Gauss modes, and the biphoton amplitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, Field};
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PumpProfile, PumpSpec};
use crate::linalg::{relative_asymmetry, takagi, CMatrix};
use crate::propagator::{Frame, FramePhase, GreenMeta, GreenPair, Scheme};

/// Gain L/L_nl above which the first-order kernel is only indicative.
pub const FIRST_ORDER_ADVISORY_GAIN: f64 = 0.1;
/// Largest accepted ‖Ψ − Ψᵀ‖/‖Ψ‖ for a Schmidt decomposition.
pub const SCHMIDT_SYMMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    /// Pair-correlation width δ, rad/fs.
    pub delta: f64,
    /// Phase-matching bandwidth Δ, rad/fs.
    pub big_delta: f64,
    /// Photons per pulse.
    pub n_photons: f64,
    pub r: f64,
    /// Mode width τ_s, fs.
    pub tau_s: f64,
}

/// Orthonormal Hermite function h_n(ξ) = H_n(ξ)e^{−ξ²/2}/√(2ⁿn!√π).
pub fn hermite_function(n: usize, xi: f64) -> f64 {
    let h0 = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = 2f64.sqrt() * xi * h0;
    for m in 1..n {
        let m = m as f64;
        let next = (2.0 / (m + 1.0)).sqrt() * xi * cur - (m / (m + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// S(ω,ω′)·dω = (L/L_nl)·p(ω+ω′)·e^{i[k(ω)−k(ω′)]L/2}·sinc(LΔk/2)·dω in the lab frame.
pub fn first_order_s(spec: &PumpSpec, model: &DispersionModel, grid: &FrequencyGrid) -> Result<CMatrix> {
    let pump = PumpProfile::gaussian(spec, grid)?;
    first_order_s_with_pump(spec, model, grid, &pump)
}

pub fn first_order_s_with_pump(
    spec: &PumpSpec,
    model: &DispersionModel,
    grid: &FrequencyGrid,
    pump: &PumpProfile,
) -> Result<CMatrix> {
    spec.validate()?;
    let n = grid.n_points;
    let length = spec.length;
    let k: Vec<f64> = grid
        .omegas()
        .into_iter()
        .map(|w| model.wavevector(w, Field::Signal))
        .collect::<Result<_>>()?;
    let kp: Vec<Option<f64>> = (0..2 * n)
        .map(|m| {
            if pump.values[m].norm() == 0.0 {
                return Ok(None);
            }
            match model.wavevector(pump.axis.omega(m), Field::Pump) {
                Ok(v) => Ok(Some(v)),
                Err(Error::Domain { .. }) if pump.values[m].norm() < 1e-300 => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let amp = spec.coupling() * length * grid.spacing;
    Ok(CMatrix::from_fn(n, n, |j, l| match kp[j + l] {
        None => Complex64::new(0.0, 0.0),
        Some(kp) => {
            let dk = kp - k[j] - k[l];
            pump.values[j + l] * amp * sinc(0.5 * length * dk) * Complex64::from_polar(1.0, 0.5 * (k[j] - k[l]) * length)
        }
    }))
}

/// Lab-frame pair with C = diag(e^{ik(ω)L}) and the first-order S.
pub fn first_order_green(spec: &PumpSpec, model: &DispersionModel, grid: &FrequencyGrid) -> Result<GreenPair> {
    let s = first_order_s(spec, model, grid)?;
    let n = grid.n_points;
    let c = CMatrix::from_fn(n, n, |j, l| {
        if j == l {
            model
                .wavevector(grid.omega(j), Field::Signal)
                .map(|k| Complex64::from_polar(1.0, k * spec.length))
                .unwrap_or_default()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(GreenPair {
        c,
        s,
        grid: *grid,
        frame: Frame::Lab,
        meta: GreenMeta {
            spec: *spec,
            scheme: Scheme::SplitStep,
            n_steps: 0,
            direction_forward: true,
            frame_phase: FramePhase::new(model, grid, spec.length)?,
            pump_label: "first order".into(),
        },
    })
}

/// δ, Δ, N, r and τ_s from the sinc-to-Gaussian replacement.
pub fn gaussian_params(spec: &PumpSpec, model: &DispersionModel) -> Result<GaussianModel> {
    spec.validate()?;
    let coeffs = model.coefficients()?;
    let beta2 = coeffs.signal[2];
    if !(beta2 > 0.0) {
        return Err(Error::Unsupported(format!(
            "Gaussian model needs normal signal dispersion, got beta2 = {beta2} fs^2/mm"
        )));
    }
    let l = spec.length;
    let walk_off = coeffs.walk_off();
    let delta = 1.0 / (spec.tau_p.powi(2) + l * l / 10.0 * walk_off * walk_off).sqrt();
    let big_delta = 1.0 / (l * beta2 / 12.0).sqrt();
    let n_photons = l * l * spec.coupling().powi(2) / 4.0 * spec.tau_p.powi(2) * delta * big_delta;
    Ok(GaussianModel {
        delta,
        big_delta,
        n_photons,
        r: 0.5 * (big_delta / delta).ln(),
        tau_s: (2.0 / (delta * big_delta)).sqrt(),
    })
}

/// ζ_n = (√N/cosh r)·tanhⁿ r for n < n_max.
pub fn analytic_zetas(gm: &GaussianModel, n_max: usize) -> Vec<f64> {
    let lead = gm.n_photons.sqrt() / gm.r.cosh();
    let t = gm.r.tanh();
    (0..n_max).map(|n| lead * t.powi(n as i32)).collect()
}

/// Gaussian kernel S_G(ω,ω′)·dω with the lab-frame propagation phase.
pub fn gaussian_kernel(gm: &GaussianModel, spec: &PumpSpec, model: &DispersionModel, grid: &FrequencyGrid) -> Result<CMatrix> {
    let n = grid.n_points;
    let k: Vec<f64> = grid
        .omegas()
        .into_iter()
        .map(|w| model.wavevector(w, Field::Signal))
        .collect::<Result<_>>()?;
    let amp = (2.0 * gm.n_photons / (PI * gm.delta * gm.big_delta)).sqrt() * grid.spacing;
    Ok(CMatrix::from_fn(n, n, |j, l| {
        let s = grid.omega(j) + grid.omega(l) - spec.omega_p;
        let d = grid.omega(j) - grid.omega(l);
        let g = (-s * s / (2.0 * gm.delta.powi(2)) - d * d / (2.0 * gm.big_delta.powi(2))).exp();
        Complex64::from_polar(amp * g, 0.5 * (k[j] - k[l]) * spec.length)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Input,
    Output,
}

/// Hermite-Gauss mode of order n and width τ_s, centred at ω_c.
///
/// Output modes carry e^{−ik(ω)L/2} and input modes e^{+ik(ω)L/2}; in the moving
/// frame k is replaced by k − β₀ − β₁(ω − ω_c).
pub fn hermite_mode(
    n: usize,
    tau_s: f64,
    model: &DispersionModel,
    length: f64,
    grid: &FrequencyGrid,
    side: Side,
    frame: Frame,
) -> Result<Vec<Complex64>> {
    if n > 20 {
        return Err(Error::Unsupported(format!("Hermite order {n} (supported: 0..=20)")));
    }
    let frame_phase = FramePhase::new(model, grid, length)?;
    let sign = match side {
        Side::Output => -1.0,
        Side::Input => 1.0,
    };
    let mut mode = (0..grid.n_points)
        .map(|j| {
            let w = grid.omega(j);
            let mut k = model.wavevector(w, Field::Signal)?;
            if frame == Frame::Moving {
                k -= frame_phase.rate(w);
            }
            let amp = tau_s.sqrt() * hermite_function(n, tau_s * grid.offset(j));
            Ok(Complex64::from_polar(amp, sign * 0.5 * k * length))
        })
        .collect::<Result<Vec<_>>>()?;
    grid.normalize(&mut mode);
    Ok(mode)
}

/// Wavevectors of the given frame on the grid.
pub fn frame_wavevectors(model: &DispersionModel, grid: &FrequencyGrid, length: f64, frame: Frame) -> Result<Vec<f64>> {
    let frame_phase = FramePhase::new(model, grid, length)?;
    grid.omegas()
        .into_iter()
        .map(|w| {
            let k = model.wavevector(w, Field::Signal)?;
            Ok(match frame {
                Frame::Lab => k,
                Frame::Moving => k - frame_phase.rate(w),
            })
        })
        .collect()
}

/// Ψ(ω,ω′) = S(ω,ω′)·e^{ik(ω′)L}, with k taken in the frame of `s`.
pub fn biphoton_from_green(s: &CMatrix, wavevectors: &[f64], length: f64) -> Result<CMatrix> {
    if wavevectors.len() != s.ncols() {
        return Err(Error::LengthMismatch {
            expected: s.ncols(),
            got: wavevectors.len(),
        });
    }
    let mut psi = s.clone();
    for (l, mut col) in psi.column_iter_mut().enumerate() {
        let phase = Complex64::from_polar(1.0, wavevectors[l] * length);
        col.iter_mut().for_each(|v| *v *= phase);
    }
    Ok(psi)
}

/// Schmidt (Takagi) decomposition Ψ = Σ ζ_n u_n u_nᵀ. Modes are returned as
/// grid functions with Σ|u|²dω = 1.
#[derive(Clone, Debug)]
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    pub modes: CMatrix,
}

pub fn schmidt_decompose(psi: &CMatrix, grid: &FrequencyGrid) -> Result<Schmidt> {
    let asym = relative_asymmetry(psi);
    if asym > SCHMIDT_SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    let t = takagi(psi);
    let scale = Complex64::new(1.0 / grid.spacing.sqrt(), 0.0);
    Ok(Schmidt {
        coefficients: t.values,
        modes: t.vectors * scale,
    })
}

#[cfg(test)]
mod tests;
