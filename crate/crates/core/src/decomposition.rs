//! Bloch-Messiah reduction of a Green pair into independent squeezers.
//!
//! The result satisfies C = Ψ*·diag(cosh ζ)·Φᵀ and S = Ψ*·diag(sinh ζ)·Φ†, where the
//! columns of Ψ and Φ are the output and input mode functions sampled on the grid
//! and normalized with Σ|·|²dω = 1.

use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PumpSpec};
use crate::io::{self, Table};
use crate::linalg::{frobenius, takagi, CMatrix};
use crate::perturbative::hermite_function;
use crate::propagator::{Frame, GreenPair, Propagator, Scheme};

/// Relative degeneracy tolerance on σ(C), scaled by σ₀(C).
pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-2;
/// Largest accepted relative reconstruction error.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;
/// Largest accepted relative residual of a Hermite-Gauss width fit.
pub const FIT_TOLERANCE: f64 = 0.2;

#[derive(Clone, Debug)]
pub struct ModeDecomposition {
    /// Descending, non-negative.
    pub zetas: Vec<f64>,
    /// Input modes φ_n as columns.
    pub phi: CMatrix,
    /// Output modes ψ_n as columns.
    pub psi: CMatrix,
    pub grid: FrequencyGrid,
    pub frame: Frame,
    /// max_n |σ_n(C)² − sinh²ζ_n − 1|.
    pub pairing_residual: f64,
    /// Larger of the relative Frobenius reconstruction errors of C and S.
    pub reconstruction_error: f64,
}

fn block_ranges(sigma: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=sigma.len() {
        if i == sigma.len() || sigma[i - 1] - sigma[i] > tol {
            blocks.push((start, i));
            start = i;
        }
    }
    blocks
}

/// Multiplies the columns `range` of `m` by the square matrix `q` in place.
fn rotate_columns(m: &mut CMatrix, start: usize, end: usize, q: &CMatrix) {
    let rotated = m.columns(start, end - start) * q;
    m.columns_mut(start, end - start).copy_from(&rotated);
}

/// Decomposes `gp` in its current frame. `tol_degeneracy` is relative to σ₀(C).
pub fn bloch_messiah(gp: &GreenPair, tol_degeneracy: f64) -> Result<ModeDecomposition> {
    let n = gp.n();
    let svd = gp.c.clone().svd(true, true);
    let u_raw = svd.u.expect("requested U");
    let v_raw = svd.v_t.expect("requested V").adjoint();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut u = CMatrix::from_fn(n, n, |r, c| u_raw[(r, order[c])]);
    let mut v = CMatrix::from_fn(n, n, |r, c| v_raw[(r, order[c])]);

    let t = u.adjoint() * &gp.s * v.map(|x| x.conj());
    let tol = tol_degeneracy * sigma.first().copied().unwrap_or(1.0);
    let mut sinh = vec![0.0; n];
    for (start, end) in block_ranges(&sigma, tol) {
        let size = end - start;
        let block = t.view((start, start), (size, size)).into_owned();
        let tk = takagi(&block);
        let rebuilt = {
            let mut scaled = tk.vectors.clone();
            for (k, mut col) in scaled.column_iter_mut().enumerate() {
                col *= Complex64::new(tk.values[k], 0.0);
            }
            scaled * tk.vectors.transpose()
        };
        let residual = frobenius(&(&block - rebuilt));
        let scale = frobenius(&block).max(1.0);
        if residual > 1e-6 * scale {
            return Err(Error::Degeneracy {
                start,
                end,
                residual: residual / scale,
            });
        }
        rotate_columns(&mut u, start, end, &tk.vectors);
        rotate_columns(&mut v, start, end, &tk.vectors);
        sinh[start..end].copy_from_slice(&tk.values);
    }

    let pairing_residual = sigma
        .iter()
        .zip(&sinh)
        .map(|(c, s)| (c * c - s * s - 1.0).abs())
        .fold(0.0, f64::max);

    let mut modes: Vec<usize> = (0..n).collect();
    modes.sort_by(|&a, &b| sinh[b].total_cmp(&sinh[a]).then(a.cmp(&b)));
    let zetas: Vec<f64> = modes.iter().map(|&i| sinh[i].asinh()).collect();
    let scale = Complex64::new(1.0 / gp.grid.spacing.sqrt(), 0.0);
    let mut psi = CMatrix::from_fn(n, n, |r, c| u[(r, modes[c])].conj() * scale);
    let mut phi = CMatrix::from_fn(n, n, |r, c| v[(r, modes[c])].conj() * scale);
    canonicalize_signs(&gp.grid, &mut psi, &mut phi);

    let mut md = ModeDecomposition {
        zetas,
        phi,
        psi,
        grid: gp.grid,
        frame: gp.frame,
        pairing_residual,
        reconstruction_error: 0.0,
    };
    let (c_rec, s_rec) = md.reconstruct();
    let err_c = frobenius(&(&gp.c - c_rec)) / frobenius(&gp.c).max(f64::MIN_POSITIVE);
    let s_norm = frobenius(&gp.s);
    let err_s = if s_norm > 0.0 {
        frobenius(&(&gp.s - s_rec)) / s_norm
    } else {
        frobenius(&s_rec)
    };
    md.reconstruction_error = err_c.max(err_s);
    if !(md.reconstruction_error <= RECONSTRUCTION_TOLERANCE) {
        return Err(Error::Reconstruction(md.reconstruction_error));
    }
    Ok(md)
}

/// Moving-frame decomposition with the default degeneracy tolerance.
pub fn decompose(gp: &GreenPair) -> Result<ModeDecomposition> {
    bloch_messiah(&gp.in_frame(Frame::Moving)?, DEFAULT_DEGENERACY_TOLERANCE)
}

/// Flips each (ψ_n, φ_n) pair so that ψ_n at the grid center, or its first moment
/// when the center value is negligible, has a positive real part.
fn canonicalize_signs(grid: &FrequencyGrid, psi: &mut CMatrix, phi: &mut CMatrix) {
    let center = grid.center_index();
    for n in 0..psi.ncols() {
        let col = psi.column(n);
        let peak = col.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut reference = col[center];
        if reference.norm() < 1e-3 * peak {
            reference = col
                .iter()
                .enumerate()
                .map(|(j, v)| v * grid.offset(j))
                .sum();
        }
        let arg = reference.arg();
        if arg <= -std::f64::consts::FRAC_PI_2 || arg > std::f64::consts::FRAC_PI_2 {
            psi.column_mut(n).neg_mut();
            phi.column_mut(n).neg_mut();
        }
    }
}

impl ModeDecomposition {
    pub fn len(&self) -> usize {
        self.zetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zetas.is_empty()
    }

    pub fn psi_column(&self, n: usize) -> Vec<Complex64> {
        self.psi.column(n).iter().copied().collect()
    }

    pub fn phi_column(&self, n: usize) -> Vec<Complex64> {
        self.phi.column(n).iter().copied().collect()
    }

    /// (C, S) rebuilt from ζ and the mode bases.
    pub fn reconstruct(&self) -> (CMatrix, CMatrix) {
        let dw = Complex64::new(self.grid.spacing, 0.0);
        let psi_bar = self.psi.map(|v| v.conj());
        let cosh = DVector::from_iterator(self.len(), self.zetas.iter().map(|z| Complex64::new(z.cosh(), 0.0)));
        let sinh = DVector::from_iterator(self.len(), self.zetas.iter().map(|z| Complex64::new(z.sinh(), 0.0)));
        let mut left_c = psi_bar.clone();
        let mut left_s = psi_bar;
        for k in 0..self.len() {
            let c = cosh[k];
            let s = sinh[k];
            left_c.column_mut(k).iter_mut().for_each(|v| *v *= c);
            left_s.column_mut(k).iter_mut().for_each(|v| *v *= s);
        }
        let c = left_c * self.phi.transpose() * dw;
        let s = left_s * self.phi.adjoint() * dw;
        (c, s)
    }

    /// Largest deviation of Ψ†Ψ·dω and Φ†Φ·dω from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.len();
        let id = CMatrix::identity(n, n);
        let dw = Complex64::new(self.grid.spacing, 0.0);
        let a = (self.psi.adjoint() * &self.psi * dw - &id).camax();
        let b = (self.phi.adjoint() * &self.phi * dw - &id).camax();
        a.max(b)
    }

    /// |⟨ψ_n, φ_n*⟩| for n < n_top.
    pub fn verify_conjugacy(&self, n_top: usize) -> Vec<f64> {
        (0..n_top.min(self.len()))
            .map(|n| {
                let overlap: Complex64 = self
                    .psi
                    .column(n)
                    .iter()
                    .zip(self.phi.column(n).iter())
                    .map(|(p, f)| p.conj() * f.conj())
                    .sum();
                (overlap * self.grid.spacing).norm()
            })
            .collect()
    }

    /// Σ sinh²ζ_n.
    pub fn total_photons(&self) -> f64 {
        self.zetas.iter().map(|z| z.sinh().powi(2)).sum()
    }

    /// ζ of the last mode relative to ζ₀.
    pub fn tail_ratio(&self) -> f64 {
        match (self.zetas.first(), self.zetas.last()) {
            (Some(&first), Some(&last)) if first > 0.0 => last / first,
            _ => 0.0,
        }
    }

    /// Largest |ψ_n| at the two outermost grid points relative to its peak, over n < n_top.
    pub fn edge_amplitude(&self, n_top: usize) -> f64 {
        let last = self.grid.n_points - 1;
        (0..n_top.min(self.len()))
            .map(|n| {
                let col = self.psi.column(n);
                let peak = col.iter().map(|v| v.norm()).fold(0.0, f64::max);
                col[0].norm().max(col[last].norm()) / peak
            })
            .fold(0.0, f64::max)
    }

    pub fn save(&self, dir: &Path, config_hash: &str, n_modes: usize) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut zetas = Table::new(["n", "zeta"]);
        for (n, z) in self.zetas.iter().enumerate() {
            zetas.push(vec![n as f64, *z]);
        }
        zetas.write(&dir.join("zetas.csv"), config_hash)?;
        let omegas = self.grid.omegas();
        io::mode_table(&omegas, &self.phi, n_modes).write(&dir.join("phi.csv"), config_hash)?;
        io::mode_table(&omegas, &self.psi, n_modes).write(&dir.join("psi.csv"), config_hash)?;
        let meta = ModeMeta {
            grid: self.grid,
            frame: self.frame,
            pairing_residual: self.pairing_residual,
            reconstruction_error: self.reconstruction_error,
            total_photons: self.total_photons(),
        };
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ModeMeta {
    grid: FrequencyGrid,
    frame: Frame,
    pairing_residual: f64,
    reconstruction_error: f64,
    total_photons: f64,
}

/// Normalized intensity τ·h_n(τ(ω − ω_c))² on the grid.
fn hermite_intensity(n: usize, tau: f64, grid: &FrequencyGrid) -> Vec<f64> {
    (0..grid.n_points)
        .map(|j| tau * hermite_function(n, tau * grid.offset(j)).powi(2))
        .collect()
}

fn fit_residual(data: &[f64], n: usize, tau: f64, grid: &FrequencyGrid) -> f64 {
    let model = hermite_intensity(n, tau, grid);
    let num: f64 = data.iter().zip(&model).map(|(d, m)| (d - m).powi(2)).sum();
    let den: f64 = data.iter().map(|d| d * d).sum();
    (num / den).sqrt()
}

/// Best-fit width τ_s (fs) of the order-n Hermite-Gauss intensity to |mode|², with the
/// relative L² residual of the fit.
pub fn fit_hermite_width_with_residual(mode: &[Complex64], n: usize, grid: &FrequencyGrid) -> Result<(f64, f64)> {
    if mode.len() != grid.n_points {
        return Err(Error::LengthMismatch {
            expected: grid.n_points,
            got: mode.len(),
        });
    }
    let norm = grid.norm_sqr(mode);
    let data: Vec<f64> = mode.iter().map(|v| v.norm_sqr() / norm).collect();
    let (lo, hi, samples) = (1.0f64.ln(), 500.0f64.ln(), 240);
    let taus: Vec<f64> = (0..=samples)
        .map(|i| (lo + (hi - lo) * i as f64 / samples as f64).exp())
        .collect();
    let residuals: Vec<f64> = taus.iter().map(|&t| fit_residual(&data, n, t, grid)).collect();
    let best = (0..taus.len())
        .min_by(|&a, &b| residuals[a].total_cmp(&residuals[b]))
        .unwrap_or(0);
    let mut a = taus[best.saturating_sub(1)].ln();
    let mut b = taus[(best + 1).min(taus.len() - 1)].ln();
    let f = |x: f64| fit_residual(&data, n, x.exp(), grid);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let tau = (0.5 * (a + b)).exp();
    let residual = fit_residual(&data, n, tau, grid);
    if !(residual <= FIT_TOLERANCE) {
        return Err(Error::FitFailure { order: n, residual });
    }
    Ok((tau, residual))
}

pub fn fit_hermite_width(mode: &[Complex64], n: usize, grid: &FrequencyGrid) -> Result<f64> {
    fit_hermite_width_with_residual(mode, n, grid).map(|(tau, _)| tau)
}

/// L_nl·ζ_n for each nonlinear length, one row per L_nl.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaScaling {
    pub l_nl: Vec<f64>,
    pub scaled: Vec<Vec<f64>>,
}

pub fn zeta_scaling_table(
    template: &PumpSpec,
    l_nl: &[f64],
    model: &DispersionModel,
    grid: &FrequencyGrid,
    scheme: Scheme,
    n_modes: usize,
) -> Result<ZetaScaling> {
    if l_nl.is_empty() {
        return Err(Error::Config("L_nl list is empty".into()));
    }
    let mut scaled = Vec::with_capacity(l_nl.len());
    for &l in l_nl {
        let spec = template.with_l_nl(l);
        let prop = Propagator::new(&spec, model, grid)?;
        let gp = prop.compute_green(scheme, scheme.default_steps(spec.length, l))?;
        let md = decompose(&gp)?;
        scaled.push(md.zetas.iter().take(n_modes).map(|z| z * l).collect());
    }
    Ok(ZetaScaling {
        l_nl: l_nl.to_vec(),
        scaled,
    })
}

#[cfg(test)]
mod tests;
