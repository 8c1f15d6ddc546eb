//! JSON run configuration for the command-line front end.
//!
//! Every field has a default, so `{}` describes the reference run. Unknown keys are
//! rejected. Nonlinear lengths are given in mm, with `null` meaning no pump.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, Sellmeier};
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PumpSpec};
use crate::io;
use crate::propagator::Scheme;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    /// (A, B, C, D) of n² = A + B/(λ² − C) − Dλ², λ in µm.
    pub sellmeier_o: [f64; 4],
    pub sellmeier_e: [f64; 4],
    /// Propagation angle; solved for degenerate phase matching when absent.
    pub theta_deg: Option<f64>,
    pub lambda_pump_nm: f64,
    pub lambda_signal_nm: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            sellmeier_o: Sellmeier::BBO_ORDINARY.to_array(),
            sellmeier_e: Sellmeier::BBO_EXTRAORDINARY.to_array(),
            theta_deg: None,
            lambda_pump_nm: 400.0,
            lambda_signal_nm: 800.0,
        }
    }
}

impl DispersionConfig {
    pub fn model(&self) -> Result<DispersionModel> {
        let mut model = DispersionModel {
            sellmeier_o: Sellmeier::from_array(self.sellmeier_o),
            sellmeier_e: Sellmeier::from_array(self.sellmeier_e),
            theta: 0.0,
            lambda_pump_nm: self.lambda_pump_nm,
            lambda_signal_nm: self.lambda_signal_nm,
        };
        model.theta = match self.theta_deg {
            Some(deg) => deg.to_radians(),
            None => model.find_phase_matching_angle()?,
        };
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_points: usize,
    /// Full width of the signal grid, rad/fs.
    pub span: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_points: 512,
            span: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpConfig {
    pub tau_p_fs: f64,
    pub length_mm: f64,
    /// Nonlinear lengths for propagation, decomposition and the mode tables.
    pub l_nl_mm: Vec<Option<f64>>,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig {
            tau_p_fs: 24.0,
            length_mm: 1.0,
            l_nl_mm: vec![Some(100.0), Some(1.0), Some(1.0 / 3.0), Some(1.0 / 15.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Overrides the per-mm default step count when set.
    pub steps_per_mm: Option<usize>,
    /// Also integrate with RK4 and report the Frobenius difference.
    pub rk4_check: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::SplitStep,
            steps_per_mm: None,
            rk4_check: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesConfig {
    /// Number of modes written per decomposition.
    pub n_modes: usize,
    /// Hermite-Gauss orders fitted for the width table.
    pub fit_orders: usize,
    /// Nonlinear lengths whose ψ₀ intensity and phase are tabulated.
    pub profile_l_nl_mm: Vec<f64>,
}

impl Default for ModesConfig {
    fn default() -> Self {
        ModesConfig {
            n_modes: 10,
            fit_orders: 3,
            profile_l_nl_mm: vec![100.0, 1.0 / 15.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomodyneConfig {
    pub l_nl_mm: Vec<f64>,
    pub tau_lo_fs: Vec<f64>,
    pub phase_locked: bool,
    /// Nonlinear length and LO durations of the M_n² table.
    pub bars_l_nl_mm: f64,
    pub bars_tau_lo_fs: Vec<f64>,
    pub bars_modes: usize,
}

impl Default for HomodyneConfig {
    fn default() -> Self {
        HomodyneConfig {
            l_nl_mm: vec![1.0, 0.5, 1.0 / 3.0, 0.25],
            tau_lo_fs: (0..=24).map(|i| 2.0 + 2.0 * i as f64).collect(),
            phase_locked: true,
            bars_l_nl_mm: 0.5,
            bars_tau_lo_fs: vec![15.0, 30.0, 50.0],
            bars_modes: 20,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dispersion: DispersionConfig,
    pub grid: GridConfig,
    pub pump: PumpConfig,
    pub solver: SolverConfig,
    pub modes: ModesConfig,
    pub homodyne: HomodyneConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        io::sha256_hex(self.to_json().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("pump.tau_p_fs", self.pump.tau_p_fs)?;
        positive("pump.length_mm", self.pump.length_mm)?;
        positive("grid.span", self.grid.span)?;
        for l in self.pump.l_nl_mm.iter().flatten() {
            positive("pump.l_nl_mm", *l)?;
        }
        for &l in self.modes.profile_l_nl_mm.iter().chain(&self.homodyne.l_nl_mm) {
            positive("l_nl_mm", l)?;
        }
        positive("homodyne.bars_l_nl_mm", self.homodyne.bars_l_nl_mm)?;
        for &t in self.homodyne.tau_lo_fs.iter().chain(&self.homodyne.bars_tau_lo_fs) {
            positive("tau_lo_fs", t)?;
        }
        if self.pump.l_nl_mm.is_empty() {
            return Err(Error::Config("pump.l_nl_mm must list at least one value".into()));
        }
        if self.modes.n_modes == 0 || self.modes.n_modes > self.grid.n_points {
            return Err(Error::Config(format!(
                "modes.n_modes must be in 1..={}, got {}",
                self.grid.n_points, self.modes.n_modes
            )));
        }
        if self.solver.steps_per_mm == Some(0) {
            return Err(Error::Config("solver.steps_per_mm must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self, model: &DispersionModel) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.grid.n_points, model.omega_signal(), self.grid.span)
    }

    pub fn pump_spec(&self, model: &DispersionModel, l_nl: Option<f64>) -> Result<PumpSpec> {
        PumpSpec::new(
            self.pump.tau_p_fs,
            model.omega_pump(),
            l_nl.unwrap_or(f64::INFINITY),
            self.pump.length_mm,
        )
    }

    pub fn steps(&self, scheme: Scheme, l_nl: f64) -> usize {
        match (scheme, self.solver.steps_per_mm) {
            (Scheme::SplitStep, Some(per_mm)) => {
                let gain = if l_nl.is_finite() { self.pump.length_mm / l_nl } else { 0.0 };
                ((per_mm as f64) * self.pump.length_mm * (gain / 5.0).max(1.0)).ceil().max(1.0) as usize
            }
            _ => scheme.default_steps(self.pump.length_mm, l_nl),
        }
    }
}
