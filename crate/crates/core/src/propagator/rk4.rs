//! Fixed-step classical Runge-Kutta on the dense coupling matrix.
//!
//! Each column of the state is an independent field. The right-hand side is
//! i·diag(k)·A + K(z)·conj(A) with K_jk(z) = P_{j+k}(z), evaluated as
//! an explicit matrix product so the result does not depend on any FFT.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Direction, Propagator};

type CMatrix = DMatrix<Complex64>;

fn kernel_matrix(prop: &Propagator, z: f64, axis: &mut [Complex64]) -> CMatrix {
    let n = prop.grid.n_points;
    prop.kernel_at(z, axis);
    CMatrix::from_fn(n, n, |j, k| axis[j + k])
}

fn rhs(prop: &Propagator, kernel: &CMatrix, state: &CMatrix, out: &mut CMatrix) {
    let conj = state.map(|v| v.conj());
    kernel.mul_to(&conj, out);
    for (c, mut col) in out.column_iter_mut().enumerate() {
        for (j, v) in col.iter_mut().enumerate() {
            *v += Complex64::new(0.0, prop.k_moving[j]) * state[(j, c)];
        }
    }
}

pub(crate) fn integrate(prop: &Propagator, state: &mut CMatrix, n_steps: usize, direction: Direction) {
    let n = prop.grid.n_points;
    let length = prop.spec.length;
    let (z0, dz) = match direction {
        Direction::Forward => (-0.5 * length, length / n_steps as f64),
        Direction::Backward => (0.5 * length, -length / n_steps as f64),
    };
    let cols = state.ncols();
    let mut axis = vec![Complex64::new(0.0, 0.0); 2 * n];
    let zero = || CMatrix::zeros(n, cols);
    let (mut k1, mut k2, mut k3, mut k4) = (zero(), zero(), zero(), zero());
    let mut k_start = kernel_matrix(prop, z0, &mut axis);
    for step in 0..n_steps {
        let z = z0 + step as f64 * dz;
        let k_mid = kernel_matrix(prop, z + 0.5 * dz, &mut axis);
        let k_end = kernel_matrix(prop, z + dz, &mut axis);

        rhs(prop, &k_start, state, &mut k1);
        let trial = &*state + &k1 * Complex64::new(0.5 * dz, 0.0);
        rhs(prop, &k_mid, &trial, &mut k2);
        let trial = &*state + &k2 * Complex64::new(0.5 * dz, 0.0);
        rhs(prop, &k_mid, &trial, &mut k3);
        let trial = &*state + &k3 * Complex64::new(dz, 0.0);
        rhs(prop, &k_end, &trial, &mut k4);

        let w = dz / 6.0;
        for i in 0..state.len() {
            state[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * w;
        }
        k_start = k_end;
    }
}
