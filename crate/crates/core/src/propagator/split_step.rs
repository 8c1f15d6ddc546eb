//! Symmetric Strang splitting, composed into a fourth-order triple jump.
//!
//! The linear part is a diagonal phase. For the coupling, the pump is frozen at the
//! substep midpoint, so dA/dz = K·conj(A) with a constant Hankel matrix
//! K_jk = P_{j+k}. Its flow over h is the series Σ_m (h^m/m!)·𝒦^m A with
//! 𝒦A = K·conj(A), summed until the next term no longer changes the result.
//! Each 𝒦 application is a circular correlation whose length covers the non-zero
//! band lo..=hi of P, so that no product wraps onto a live index.
//! Each step of length dz is three Strang substeps of lengths w₁dz, w₀dz, w₁dz.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{Direction, Propagator};

const MAX_SERIES_TERMS: usize = 60;

fn triple_jump_weights() -> [f64; 3] {
    let cbrt2 = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 / (2.0 - cbrt2);
    [w1, w0, w1]
}

/// Smallest 2^a·3^b·5^c that is at least `min`.
fn fast_length(min: usize) -> usize {
    let mut best = min.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut m = p35;
            while m < min {
                m *= 2;
            }
            best = best.min(m);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct Substep {
    h: f64,
    z_mid: f64,
}

pub(crate) struct SplitStepPlan<'a> {
    prop: &'a Propagator,
    substeps: Vec<Substep>,
    /// First and last index of the pump axis with non-zero coupling.
    band: Option<(usize, usize)>,
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

struct SubstepTables {
    /// Linear phase applied before the substep.
    pre: Vec<Complex64>,
    /// DFT of the pump band, divided by the transform length.
    kernel: Vec<Complex64>,
    h: f64,
}

struct Workspace {
    padded: Vec<Complex64>,
    term: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'a> SplitStepPlan<'a> {
    pub(crate) fn new(prop: &'a Propagator, n_steps: usize, direction: Direction) -> Self {
        let n = prop.grid.n_points;
        let length = prop.spec.length;
        let (z0, dz) = match direction {
            Direction::Forward => (-0.5 * length, length / n_steps as f64),
            Direction::Backward => (0.5 * length, -length / n_steps as f64),
        };
        let mut substeps = Vec::with_capacity(3 * n_steps);
        let mut z = z0;
        for step in 0..n_steps {
            for w in triple_jump_weights() {
                let h = w * dz;
                substeps.push(Substep { h, z_mid: z + 0.5 * h });
                z += h;
            }
            z = z0 + (step + 1) as f64 * dz;
        }
        let zero = Complex64::new(0.0, 0.0);
        let band = prop
            .coupling
            .iter()
            .position(|c| *c != zero)
            .zip(prop.coupling.iter().rposition(|c| *c != zero));
        let len = match band {
            Some((lo, hi)) => fast_length((hi + 1).max(2 * n - 1 - lo).max(n)),
            None => n,
        };
        let mut planner = FftPlanner::<f64>::new();
        SplitStepPlan {
            prop,
            substeps,
            band,
            len,
            fft: planner.plan_fft_forward(len),
            ifft: planner.plan_fft_inverse(len),
        }
    }

    fn linear(&self, h: f64) -> Vec<Complex64> {
        self.prop
            .k_moving
            .iter()
            .map(|k| Complex64::from_polar(1.0, k * h))
            .collect()
    }

    fn tables(&self, index: usize, scratch: &mut [Complex64]) -> SubstepTables {
        let m = self.len;
        let sub = self.substeps[index];
        let prev_h = if index == 0 { 0.0 } else { self.substeps[index - 1].h };
        let mut axis = vec![Complex64::new(0.0, 0.0); 2 * self.prop.grid.n_points];
        self.prop.kernel_at(sub.z_mid, &mut axis);
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        if let Some((lo, hi)) = self.band {
            kernel[..=hi - lo].copy_from_slice(&axis[lo..=hi]);
        }
        self.fft.process_with_scratch(&mut kernel, scratch);
        let scale = 1.0 / m as f64;
        kernel.iter_mut().for_each(|v| *v *= scale);
        SubstepTables {
            pre: self.linear(0.5 * (prev_h + sub.h)),
            kernel,
            h: sub.h,
        }
    }

    fn workspace(&self) -> Workspace {
        let n = self.prop.grid.n_points;
        let zero = Complex64::new(0.0, 0.0);
        Workspace {
            padded: vec![zero; self.len],
            term: vec![zero; n],
            scratch: vec![
                zero;
                self.fft
                    .get_inplace_scratch_len()
                    .max(self.ifft.get_inplace_scratch_len())
            ],
        }
    }

    /// term ← (h/m)·K·conj(term).
    fn coupling_term(&self, t: &SubstepTables, order: usize, ws: &mut Workspace) {
        let n = ws.term.len();
        let m = ws.padded.len();
        ws.padded.fill(Complex64::new(0.0, 0.0));
        ws.padded[0] = ws.term[0].conj();
        for k in 1..n {
            ws.padded[m - k] = ws.term[k].conj();
        }
        self.fft.process_with_scratch(&mut ws.padded, &mut ws.scratch);
        for (v, g) in ws.padded.iter_mut().zip(&t.kernel) {
            *v *= g;
        }
        self.ifft.process_with_scratch(&mut ws.padded, &mut ws.scratch);
        let factor = t.h / order as f64;
        let shift = m - self.band.map_or(0, |(lo, _)| lo % m);
        for (j, dst) in ws.term.iter_mut().enumerate() {
            *dst = ws.padded[(j + shift) % m] * factor;
        }
    }

    fn apply(&self, t: &SubstepTables, field: &mut [Complex64], ws: &mut Workspace) {
        for (a, p) in field.iter_mut().zip(&t.pre) {
            *a *= p;
        }
        if self.band.is_none() {
            return;
        }
        ws.term.copy_from_slice(field);
        for order in 1..=MAX_SERIES_TERMS {
            self.coupling_term(t, order, ws);
            let mut term_sqr = 0.0;
            let mut sum_sqr = 0.0;
            for (a, d) in field.iter_mut().zip(&ws.term) {
                *a += d;
                term_sqr += d.norm_sqr();
                sum_sqr += a.norm_sqr();
            }
            if term_sqr <= f64::EPSILON * f64::EPSILON * sum_sqr {
                break;
            }
        }
    }

    /// Advances every column through the crystal. Columns are independent and
    /// processed in parallel; the result does not depend on the thread count.
    pub(crate) fn run(&self, columns: &mut [Vec<Complex64>]) {
        let mut ws = self.workspace();
        for index in 0..self.substeps.len() {
            let t = self.tables(index, &mut ws.scratch);
            columns.par_iter_mut().for_each_init(
                || self.workspace(),
                |ws, field| self.apply(&t, field, ws),
            );
        }
        let last = self.substeps.last().map(|s| s.h).unwrap_or(0.0);
        let post = self.linear(0.5 * last);
        columns.par_iter_mut().for_each(|field| {
            for (a, p) in field.iter_mut().zip(&post) {
                *a *= p;
            }
        });
    }
}
