use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{split_step::SplitStepPlan, Direction, Frame, FramePhase, Propagator, Scheme};
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PumpSpec};
use crate::io;
use crate::linalg::{spectral_norm, CMatrix};

/// Absolute part of the symplectic tolerance; it is scaled by max(1, ‖C‖₂²).
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenMeta {
    pub spec: PumpSpec,
    pub scheme: Scheme,
    pub n_steps: usize,
    pub direction_forward: bool,
    pub frame_phase: FramePhase,
    pub pump_label: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticResiduals {
    /// ‖CC† − SS† − I‖₂.
    pub unitarity: f64,
    /// ‖CSᵀ − SCᵀ‖₂.
    pub symmetry: f64,
}

impl SymplecticResiduals {
    pub fn max(&self) -> f64 {
        self.unitarity.max(self.symmetry)
    }
}

/// Discretized Bogoliubov kernels: A_out = C·A_in + S·A_in* on amplitudes A_j = √dω·α(ω_j).
#[derive(Clone, Debug)]
pub struct GreenPair {
    pub c: CMatrix,
    pub s: CMatrix,
    pub grid: FrequencyGrid,
    pub frame: Frame,
    pub meta: GreenMeta,
}

#[derive(Serialize, Deserialize)]
struct StoredMeta {
    grid: FrequencyGrid,
    frame: Frame,
    meta: GreenMeta,
    residuals: SymplecticResiduals,
}

impl GreenPair {
    pub fn n(&self) -> usize {
        self.grid.n_points
    }

    fn frame_factors(&self) -> Vec<Complex64> {
        (0..self.n())
            .map(|j| self.meta.frame_phase.half_factor(self.grid.omega(j)))
            .collect()
    }

    /// C → D̄CD̄ and S → D̄SD with D = diag(e^{iφ(ω)L/2}).
    pub fn to_moving_frame(&self) -> Result<GreenPair> {
        if self.frame == Frame::Moving {
            return Err(Error::FrameState(Frame::Moving));
        }
        let d = self.frame_factors();
        let mut out = self.clone();
        out.apply_phases(&d, true);
        out.frame = Frame::Moving;
        Ok(out)
    }

    pub fn to_lab_frame(&self) -> Result<GreenPair> {
        if self.frame == Frame::Lab {
            return Err(Error::FrameState(Frame::Lab));
        }
        let d = self.frame_factors();
        let mut out = self.clone();
        out.apply_phases(&d, false);
        out.frame = Frame::Lab;
        Ok(out)
    }

    pub fn in_frame(&self, frame: Frame) -> Result<GreenPair> {
        match (self.frame, frame) {
            (a, b) if a == b => Ok(self.clone()),
            (Frame::Lab, Frame::Moving) => self.to_moving_frame(),
            _ => self.to_lab_frame(),
        }
    }

    fn apply_phases(&mut self, d: &[Complex64], strip: bool) {
        let n = self.n();
        let backward = !self.meta.direction_forward;
        for k in 0..n {
            for j in 0..n {
                let (dj, dk) = if backward {
                    (d[j].conj(), d[k].conj())
                } else {
                    (d[j], d[k])
                };
                let (out_factor, in_factor) = if strip { (dj.conj(), dk.conj()) } else { (dj, dk) };
                self.c[(j, k)] *= out_factor * in_factor;
                self.s[(j, k)] *= out_factor * in_factor.conj();
            }
        }
    }

    pub fn symplectic_residuals(&self) -> SymplecticResiduals {
        symplectic_residuals(&self.c, &self.s)
    }

    /// Fails with a structured error if either residual exceeds `tolerance·max(1, ‖C‖₂²)`.
    pub fn validate(&self, tolerance: f64) -> Result<SymplecticResiduals> {
        let r = self.symplectic_residuals();
        let scale = spectral_norm(&self.c).powi(2).max(1.0);
        let tol = tolerance * scale;
        if !(r.unitarity <= tol && r.symmetry <= tol) {
            return Err(Error::SymplecticViolation {
                unitarity: r.unitarity,
                symmetry: r.symmetry,
                tolerance: tol,
            });
        }
        Ok(r)
    }

    /// The pair describing `self` applied after `earlier`.
    pub fn compose(&self, earlier: &GreenPair) -> Result<GreenPair> {
        self.grid.ensure_same(&earlier.grid)?;
        if self.frame != earlier.frame {
            return Err(Error::FrameMismatch(format!(
                "cannot compose {} with {}",
                self.frame, earlier.frame
            )));
        }
        let c = &self.c * &earlier.c + &self.s * earlier.s.map(|v| v.conj());
        let s = &self.c * &earlier.s + &self.s * earlier.c.map(|v| v.conj());
        Ok(GreenPair {
            c,
            s,
            grid: self.grid,
            frame: self.frame,
            meta: self.meta.clone(),
        })
    }

    /// Applies the pair to amplitudes A_j = √dω·α(ω_j).
    pub fn apply(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        if field.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: field.len(),
            });
        }
        let a = DMatrix::from_column_slice(field.len(), 1, field);
        let out = &self.c * &a + &self.s * a.map(|v| v.conj());
        Ok(out.as_slice().to_vec())
    }

    /// Writes c.csv, s.csv and meta.json, tagging the tables with the hash of the metadata.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let hash = io::sha256_hex(self.stored_meta()?.as_bytes());
        self.save_with_hash(dir, &hash)
    }

    /// Like [`GreenPair::save`], with the tables tagged by a caller-supplied hash.
    pub fn save_with_hash(&self, dir: &Path, hash: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        io::write_complex_matrix(&dir.join("c.csv"), &self.c, hash)?;
        io::write_complex_matrix(&dir.join("s.csv"), &self.s, hash)?;
        std::fs::write(dir.join("meta.json"), self.stored_meta()? + "\n")?;
        Ok(())
    }

    fn stored_meta(&self) -> Result<String> {
        let stored = StoredMeta {
            grid: self.grid,
            frame: self.frame,
            meta: self.meta.clone(),
            residuals: self.symplectic_residuals(),
        };
        Ok(serde_json::to_string_pretty(&stored)?)
    }

    pub fn load(dir: &Path) -> Result<GreenPair> {
        let stored: StoredMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
        let c = io::read_complex_matrix(&dir.join("c.csv"))?;
        let s = io::read_complex_matrix(&dir.join("s.csv"))?;
        let n = stored.grid.n_points;
        for m in [&c, &s] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: m.nrows(),
                });
            }
        }
        Ok(GreenPair {
            c,
            s,
            grid: stored.grid,
            frame: stored.frame,
            meta: stored.meta,
        })
    }
}

pub fn symplectic_residuals(c: &CMatrix, s: &CMatrix) -> SymplecticResiduals {
    let n = c.nrows();
    let unit = c * c.adjoint() - s * s.adjoint() - CMatrix::identity(n, n);
    let sym = c * s.transpose() - s * c.transpose();
    SymplecticResiduals {
        unitarity: spectral_norm(&unit),
        symmetry: spectral_norm(&sym),
    }
}

impl Propagator {
    /// Moving-frame C and S from 2n δ-function runs.
    fn moving_frame_kernels(&self, scheme: Scheme, n_steps: usize, direction: Direction) -> Result<(CMatrix, CMatrix)> {
        if n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        let n = self.grid.n_points;
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let runs: CMatrix = match scheme {
            Scheme::SplitStep => {
                let mut columns: Vec<Vec<Complex64>> = (0..2 * n)
                    .map(|col| {
                        let mut field = vec![Complex64::new(0.0, 0.0); n];
                        field[col % n] = if col < n { one } else { i };
                        field
                    })
                    .collect();
                SplitStepPlan::new(self, n_steps, direction).run(&mut columns);
                CMatrix::from_fn(n, 2 * n, |j, col| columns[col][j])
            }
            Scheme::Rk4 => {
                let mut state = CMatrix::from_fn(n, 2 * n, |j, col| {
                    if j == col % n {
                        if col < n {
                            one
                        } else {
                            i
                        }
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                super::rk4::integrate(self, &mut state, n_steps, direction);
                state
            }
        };
        let bound = self.growth_bound();
        let worst = runs
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if !worst.is_finite() || worst > bound {
            return Err(Error::Instability { norm: worst, bound });
        }
        let c = CMatrix::from_fn(n, n, |j, k| (runs[(j, k)] - i * runs[(j, k + n)]) * 0.5);
        let s = CMatrix::from_fn(n, n, |j, k| (runs[(j, k)] + i * runs[(j, k + n)]) * 0.5);
        Ok((c, s))
    }

    fn assemble(&self, scheme: Scheme, n_steps: usize, direction: Direction) -> Result<GreenPair> {
        let (c, s) = self.moving_frame_kernels(scheme, n_steps, direction)?;
        let moving = GreenPair {
            c,
            s,
            grid: self.grid,
            frame: Frame::Moving,
            meta: GreenMeta {
                spec: self.spec,
                scheme,
                n_steps,
                direction_forward: direction == Direction::Forward,
                frame_phase: self.frame_phase,
                pump_label: self.pump_label.clone(),
            },
        };
        moving.to_lab_frame()
    }

    /// Lab-frame Green pair from −L/2 to +L/2, without the symplectic check.
    pub fn green_unchecked(&self, scheme: Scheme, n_steps: usize) -> Result<GreenPair> {
        self.assemble(scheme, n_steps, Direction::Forward)
    }

    /// Lab-frame Green pair from −L/2 to +L/2, validated against the symplectic relations.
    pub fn compute_green(&self, scheme: Scheme, n_steps: usize) -> Result<GreenPair> {
        let gp = self.green_unchecked(scheme, n_steps)?;
        gp.validate(SYMPLECTIC_TOLERANCE)?;
        Ok(gp)
    }

    /// Lab-frame pair mapping the field at +L/2 back to −L/2.
    pub fn compute_green_backward(&self, scheme: Scheme, n_steps: usize) -> Result<GreenPair> {
        self.assemble(scheme, n_steps, Direction::Backward)
    }
}

pub fn compute_green(
    spec: &PumpSpec,
    model: &DispersionModel,
    grid: &FrequencyGrid,
    scheme: Scheme,
    n_steps: usize,
) -> Result<GreenPair> {
    Propagator::new(spec, model, grid)?.compute_green(scheme, n_steps)
}
