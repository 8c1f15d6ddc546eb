//! Batch commands behind the `opa` binary. Each command writes CSV tables with `#`
//! provenance headers and JSON reports into its own subdirectory of the output
//! directory. Green pairs and decompositions are computed once per nonlinear length
//! and shared between commands of the same run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::json;

use crate::config::RunConfig;
use crate::decomposition::{bloch_messiah, fit_hermite_width_with_residual, ModeDecomposition, DEFAULT_DEGENERACY_TOLERANCE};
use crate::dispersion::{omega_to_wavelength_nm, DispersionModel, Field, Polarization};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::homodyne::{direct_quadrature_noise, gaussian_lo, homodyne_report, lo_decompose, lo_sweep, SWEEP_COLUMNS};
use crate::io::{Table, CRATE_VERSION};
use crate::linalg::{frobenius, CMatrix};
use crate::perturbative::{analytic_zetas, gaussian_params, hermite_mode, GaussianModel, Side};
use crate::propagator::{Frame, GreenPair, Propagator, Scheme};

/// Number of leading modes checked for input/output conjugacy.
pub const CONJUGACY_MODES: usize = 5;
/// Highest Hermite order used to build the Gaussian-model decomposition.
const GAUSSIAN_MODEL_MODES: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Dispersion,
    Greens,
    Modes,
    Gaussian,
    Homodyne,
    All,
}

/// Green pair in the lab frame together with its moving-frame decomposition.
pub struct Solved {
    pub l_nl: f64,
    pub green: GreenPair,
    pub modes: ModeDecomposition,
}

pub struct Pipeline {
    pub config: RunConfig,
    pub hash: String,
    pub model: DispersionModel,
    pub grid: FrequencyGrid,
    out: PathBuf,
    cache: BTreeMap<u64, Arc<Solved>>,
}

fn label(l_nl: f64) -> String {
    if l_nl.is_finite() {
        format!("lnl_{l_nl}")
    } else {
        "lnl_inf".to_string()
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Unwrapped phase of `mode` relative to its value at the grid center.
fn unwrapped_phase(mode: &[Complex64], center: usize) -> Vec<f64> {
    let reference = mode[center];
    let mut phase = vec![0.0; mode.len()];
    for dir in [1isize, -1] {
        let mut prev: f64 = 0.0;
        let mut j = center as isize + dir;
        while j >= 0 && (j as usize) < mode.len() {
            let raw = (mode[j as usize] * reference.conj()).arg();
            let step = (raw - prev + PI).rem_euclid(2.0 * PI) - PI;
            prev += step;
            phase[j as usize] = prev;
            j += dir;
        }
    }
    phase
}

/// Intensity-weighted least-squares coefficient a of phase ≈ a·(ω − ω_c)², in fs².
pub fn phase_curvature(mode: &[Complex64], grid: &FrequencyGrid) -> f64 {
    let phase = unwrapped_phase(mode, grid.center_index());
    let (mut num, mut den) = (0.0, 0.0);
    for (j, p) in phase.iter().enumerate() {
        let w = mode[j].norm_sqr();
        let x2 = grid.offset(j).powi(2);
        num += w * x2 * p;
        den += w * x2 * x2;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl Pipeline {
    pub fn new(config: RunConfig, out: &Path) -> Result<Self> {
        config.validate()?;
        let model = config.dispersion.model()?;
        let grid = config.grid(&model)?;
        Ok(Pipeline {
            hash: config.hash(),
            config,
            model,
            grid,
            out: out.to_path_buf(),
            cache: BTreeMap::new(),
        })
    }

    fn dir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.out.join(name);
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn write(&self, table: Table, path: &Path) -> Result<()> {
        table.write(path, &self.hash)
    }

    /// Propagates and decomposes for one nonlinear length, reusing earlier results.
    pub fn solve(&mut self, l_nl: f64) -> Result<Arc<Solved>> {
        let key = l_nl.to_bits();
        if let Some(s) = self.cache.get(&key) {
            return Ok(s.clone());
        }
        let scheme = self.config.solver.scheme;
        let steps = self.config.steps(scheme, l_nl);
        let finite = l_nl.is_finite().then_some(l_nl);
        let spec = self.config.pump_spec(&self.model, finite)?;
        eprintln!("propagating L_nl = {l_nl} mm with {scheme} ({steps} steps)");
        let green = Propagator::new(&spec, &self.model, &self.grid)?.compute_green(scheme, steps)?;
        let modes = bloch_messiah(&green.to_moving_frame()?, DEFAULT_DEGENERACY_TOLERANCE)?;
        let solved = Arc::new(Solved { l_nl, green, modes });
        self.cache.insert(key, solved.clone());
        Ok(solved)
    }

    fn pump_l_nl(&self) -> Vec<f64> {
        self.config
            .pump
            .l_nl_mm
            .iter()
            .map(|l| l.unwrap_or(f64::INFINITY))
            .collect()
    }

    fn finite_pump_l_nl(&self) -> Vec<f64> {
        self.pump_l_nl().into_iter().filter(|l| l.is_finite()).collect()
    }

    pub fn run(&mut self, command: Command) -> Result<()> {
        match command {
            Command::Dispersion => self.cmd_dispersion(),
            Command::Greens => self.cmd_greens(),
            Command::Modes => self.cmd_modes(),
            Command::Gaussian => self.cmd_gaussian(),
            Command::Homodyne => self.cmd_homodyne(),
            Command::All => {
                std::fs::create_dir_all(&self.out)?;
                std::fs::write(self.out.join("config.json"), self.config.to_json() + "\n")?;
                self.cmd_dispersion()?;
                self.cmd_greens()?;
                self.cmd_modes()?;
                self.cmd_gaussian()?;
                self.cmd_homodyne()
            }
        }
    }

    pub fn cmd_dispersion(&mut self) -> Result<()> {
        let dir = self.dir("dispersion")?;
        let model = self.model;
        let ws = model.omega_signal();
        let wp = model.omega_pump();

        let mut beta = Table::new(["order", "beta_signal", "beta_pump"]).comment("units fs^order/mm");
        for order in 1..=3 {
            beta.push(vec![
                order as f64,
                model.beta(Field::Signal, order)?,
                model.beta(Field::Pump, order)?,
            ]);
        }
        self.write(beta, &dir.join("beta.csv"))?;

        let mut k = Table::new([
            "omega_rad_fs",
            "lambda_nm",
            "n_ordinary",
            "k_signal_rad_mm",
            "k_pump_at_2omega_rad_mm",
        ]);
        for w in self.grid.omegas() {
            k.push(vec![
                w,
                omega_to_wavelength_nm(w),
                model.refractive_index(w, Polarization::Ordinary)?,
                model.wavevector(w, Field::Signal)?,
                model.wavevector(2.0 * w, Field::Pump)?,
            ]);
        }
        self.write(k, &dir.join("wavevector.csv"))?;

        let report = json!({
            "version": CRATE_VERSION,
            "config_sha256": self.hash,
            "theta_rad": model.theta,
            "theta_deg": model.theta.to_degrees(),
            "omega_signal_rad_fs": ws,
            "omega_pump_rad_fs": wp,
            "delta_k_degenerate_rad_mm": model.phase_mismatch(ws, ws)?,
        });
        write_json(&dir.join("phase_matching.json"), &report)?;
        eprintln!("phase-matching angle {:.4} deg", model.theta.to_degrees());
        Ok(())
    }

    pub fn cmd_greens(&mut self) -> Result<()> {
        let dir = self.dir("greens")?;
        let mut residuals = Table::new(["L_nl_mm", "unitarity", "symmetry", "pairing", "s_frobenius"]);
        let mut rk4 = Table::new(["L_nl_mm", "rk4_steps", "frobenius_c", "frobenius_s"]);
        for l_nl in self.pump_l_nl() {
            let solved = self.solve(l_nl)?;
            let r = solved.green.symplectic_residuals();
            solved.green.save_with_hash(&dir.join(label(l_nl)), &self.hash)?;
            residuals.push(vec![
                l_nl,
                r.unitarity,
                r.symmetry,
                solved.modes.pairing_residual,
                frobenius(&solved.green.s),
            ]);
            if self.config.solver.rk4_check {
                let steps = self.config.steps(Scheme::Rk4, l_nl);
                let spec = self.config.pump_spec(&self.model, l_nl.is_finite().then_some(l_nl))?;
                let reference = Propagator::new(&spec, &self.model, &self.grid)?.compute_green(Scheme::Rk4, steps)?;
                let dc = frobenius(&(&reference.c - &solved.green.c));
                let ds = frobenius(&(&reference.s - &solved.green.s));
                eprintln!("L_nl = {l_nl} mm: RK4 difference C {dc:.3e}, S {ds:.3e}");
                rk4.push(vec![l_nl, steps as f64, dc, ds]);
            }
        }
        self.write(residuals, &dir.join("residuals.csv"))?;
        if self.config.solver.rk4_check {
            self.write(rk4, &dir.join("rk4_check.csv"))?;
        }
        Ok(())
    }

    pub fn cmd_modes(&mut self) -> Result<()> {
        let dir = self.dir("modes")?;
        let n_modes = self.config.modes.n_modes;
        let length = self.config.pump.length_mm;
        let finite = self.finite_pump_l_nl();

        let mut fig3 = Table::new(["L_nl_mm", "gain", "n", "zeta", "L_nl_zeta"]);
        let mut conj = Table::new(["L_nl_mm", "n", "overlap"]);
        let mut fits = Table::new(["L_nl_mm", "n", "tau_s_fs", "fit_residual"]);
        for &l_nl in &finite {
            let solved = self.solve(l_nl)?;
            let md = &solved.modes;
            md.save(&dir.join(label(l_nl)), &self.hash, n_modes)?;
            for (n, z) in md.zetas.iter().take(n_modes).enumerate() {
                fig3.push(vec![l_nl, length / l_nl, n as f64, *z, l_nl * z]);
            }
            for (n, o) in md.verify_conjugacy(CONJUGACY_MODES).iter().enumerate() {
                conj.push(vec![l_nl, n as f64, *o]);
            }
            for n in 0..self.config.modes.fit_orders {
                let (tau, residual) = match fit_hermite_width_with_residual(&md.psi_column(n), n, &self.grid) {
                    Ok(v) => v,
                    Err(Error::FitFailure { residual, .. }) => (f64::NAN, residual),
                    Err(e) => return Err(e),
                };
                fits.push(vec![l_nl, n as f64, tau, residual]);
            }
        }
        self.write(fig3, &dir.join("fig3.csv"))?;
        self.write(conj, &dir.join("conjugacy.csv"))?;

        if let Some(weakest) = finite.iter().copied().reduce(f64::max) {
            let solved = self.solve(weakest)?;
            let mut fig4 = Table::new(["omega_rad_fs", "offset_rad_fs", "psi0_sq", "psi1_sq", "psi2_sq"])
                .comment(format!("L_nl_mm {weakest}"));
            for j in 0..self.grid.n_points {
                let mut row = vec![self.grid.omega(j), self.grid.offset(j)];
                row.extend((0..3).map(|n| solved.modes.psi[(j, n)].norm_sqr()));
                fig4.push(row);
            }
            self.write(fig4, &dir.join("fig4.csv"))?;
        }

        let mut fig5 = Table::new(["L_nl_mm", "omega_rad_fs", "offset_rad_fs", "intensity", "phase_rad"]);
        for l_nl in self.config.modes.profile_l_nl_mm.clone() {
            let solved = self.solve(l_nl)?;
            let psi0 = solved.modes.psi_column(0);
            let phase = unwrapped_phase(&psi0, self.grid.center_index());
            for j in 0..self.grid.n_points {
                fig5.push(vec![l_nl, self.grid.omega(j), self.grid.offset(j), psi0[j].norm_sqr(), phase[j]]);
            }
        }
        self.write(fig5, &dir.join("fig5.csv"))?;

        let mut by_strength = finite.clone();
        by_strength.sort_by(|a, b| b.total_cmp(a));
        let mut fig6 = Table::new(["L_nl_mm", "inverse_L_nl_per_mm", "n", "tau_s_fs", "phase_curvature_fs2"]);
        for l_nl in by_strength {
            let solved = self.solve(l_nl)?;
            let curvature = phase_curvature(&solved.modes.psi_column(0), &self.grid);
            for n in 0..self.config.modes.fit_orders {
                let tau = fit_hermite_width_with_residual(&solved.modes.psi_column(n), n, &self.grid)
                    .map(|(t, _)| t)
                    .unwrap_or(f64::NAN);
                fig6.push(vec![l_nl, 1.0 / l_nl, n as f64, tau, curvature]);
            }
        }
        self.write(fits, &dir.join("hermite_fits.csv"))?;
        self.write(fig6, &dir.join("fig6.csv"))?;
        Ok(())
    }

    fn gaussian_model(&self, l_nl: f64) -> Result<GaussianModel> {
        gaussian_params(&self.config.pump_spec(&self.model, Some(l_nl))?, &self.model)
    }

    /// Decomposition built from the Gaussian model: analytic ζ_n with Hermite-Gauss modes.
    pub fn gaussian_decomposition(&self, gm: &GaussianModel) -> Result<ModeDecomposition> {
        let n = self.grid.n_points;
        let count = GAUSSIAN_MODEL_MODES.min(n);
        let length = self.config.pump.length_mm;
        let mut psi = CMatrix::zeros(n, count);
        let mut phi = CMatrix::zeros(n, count);
        for m in 0..count {
            let out = hermite_mode(m, gm.tau_s, &self.model, length, &self.grid, Side::Output, Frame::Moving)?;
            let inp = hermite_mode(m, gm.tau_s, &self.model, length, &self.grid, Side::Input, Frame::Moving)?;
            for j in 0..n {
                psi[(j, m)] = out[j];
                phi[(j, m)] = inp[j];
            }
        }
        Ok(ModeDecomposition {
            zetas: analytic_zetas(gm, count),
            phi,
            psi,
            grid: self.grid,
            frame: Frame::Moving,
            pairing_residual: 0.0,
            reconstruction_error: 0.0,
        })
    }

    pub fn cmd_gaussian(&mut self) -> Result<()> {
        let dir = self.dir("gaussian")?;
        let n_modes = self.config.modes.n_modes;
        let mut models = Vec::new();
        let mut table = Table::new(["L_nl_mm", "n", "zeta_analytic", "zeta_numeric", "ratio"]);
        for l_nl in self.finite_pump_l_nl() {
            let gm = self.gaussian_model(l_nl)?;
            let solved = self.solve(l_nl)?;
            let analytic = analytic_zetas(&gm, n_modes);
            for (n, a) in analytic.iter().enumerate() {
                let numeric = solved.modes.zetas[n];
                table.push(vec![l_nl, n as f64, *a, numeric, numeric / a]);
            }
            eprintln!(
                "L_nl = {l_nl} mm: numeric/analytic zeta_0 = {:.4}",
                solved.modes.zetas[0] / analytic[0]
            );
            models.push(json!({ "L_nl_mm": l_nl, "model": gm }));
        }
        self.write(table, &dir.join("zetas.csv"))?;
        let report = json!({
            "version": CRATE_VERSION,
            "config_sha256": self.hash,
            "models": models,
        });
        write_json(&dir.join("model.json"), &report)
    }

    pub fn cmd_homodyne(&mut self) -> Result<()> {
        let dir = self.dir("homodyne")?;
        let cfg = self.config.homodyne.clone();
        let length = self.config.pump.length_mm;

        let mut decompositions = Vec::with_capacity(cfg.l_nl_mm.len());
        for &l_nl in &cfg.l_nl_mm {
            decompositions.push((l_nl, self.solve(l_nl)?.modes.clone()));
        }
        let rows = lo_sweep(&decompositions, &cfg.tau_lo_fs, &self.model, length, cfg.phase_locked)?;
        let mut fig7 = Table::new(SWEEP_COLUMNS);
        for r in &rows {
            fig7.push(r.to_vec());
        }
        self.write(fig7, &dir.join("fig7.csv"))?;

        let mut fig9 = Table::new(["L_nl_mm", "tau_LO_fs", "eta", "eta_gaussian"]);
        let mut oracle = Table::new(["L_nl_mm", "tau_LO_fs", "max_abs_difference"]);
        for (l_nl, md) in &decompositions {
            let gaussian = self.gaussian_decomposition(&self.gaussian_model(*l_nl)?)?;
            let green = self.solve(*l_nl)?.green.to_moving_frame()?;
            for r in rows.iter().filter(|r| r.l_nl_mm == *l_nl) {
                let lo = gaussian_lo(r.tau_lo_fs, &self.model, length, &self.grid, cfg.phase_locked, Frame::Moving)?;
                let eta_g = homodyne_report(&lo, &gaussian)?.eta.or_nan();
                fig9.push(vec![*l_nl, r.tau_lo_fs, r.eta, eta_g]);
                let ld = lo_decompose(&lo, md)?;
                let mut worst: f64 = 0.0;
                for k in 0..8 {
                    let phi = k as f64 * PI / 8.0;
                    let via_modes = crate::homodyne::quadrature_noise(&ld.m, &ld.theta, &md.zetas, ld.leakage, phi);
                    let direct = direct_quadrature_noise(&lo, &green, phi)?;
                    worst = worst.max((via_modes - direct).abs());
                }
                oracle.push(vec![*l_nl, r.tau_lo_fs, worst]);
            }
        }
        self.write(fig9, &dir.join("fig9.csv"))?;
        self.write(oracle, &dir.join("oracle_check.csv"))?;

        let bars = self.solve(cfg.bars_l_nl_mm)?;
        let mut fig8 = Table::new(["tau_LO_fs", "n", "M_sq", "theta_rad"]).comment(format!("L_nl_mm {}", cfg.bars_l_nl_mm));
        for &tau in &cfg.bars_tau_lo_fs {
            let lo = gaussian_lo(tau, &self.model, length, &self.grid, cfg.phase_locked, Frame::Moving)?;
            let ld = lo_decompose(&lo, &bars.modes)?;
            for n in 0..cfg.bars_modes.min(ld.m.len()) {
                fig8.push(vec![tau, n as f64, ld.m[n].powi(2), ld.theta[n]]);
            }
        }
        self.write(fig8, &dir.join("fig8.csv"))
    }
}
