//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A − Aᵀ‖_F / ‖A‖_F.
pub fn relative_asymmetry(m: &CMatrix) -> f64 {
    let norm = frobenius(m);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius(&(m - m.transpose())) / norm
}

/// Takagi factorization of a complex symmetric matrix, A = Q·diag(σ)·Qᵀ.
#[derive(Clone, Debug)]
pub struct Takagi {
    /// Non-negative, descending.
    pub values: Vec<f64>,
    /// Unitary; column k satisfies A·conj(q_k) = σ_k·q_k.
    pub vectors: CMatrix,
}

/// Takagi factorization through the real symmetric embedding
/// M = [[Re A, Im A], [Im A, −Re A]], whose eigenvectors [x; y] with eigenvalue
/// σ ≥ 0 give Takagi vectors q = x + iy. The input is symmetrized first.
pub fn takagi(a: &CMatrix) -> Takagi {
    let m = a.nrows();
    assert_eq!(m, a.ncols(), "takagi needs a square matrix");
    if m == 0 {
        return Takagi {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let sym = (a + a.transpose()) * Complex64::new(0.5, 0.0);
    let scale = frobenius(&sym);
    if scale == 0.0 {
        return Takagi {
            values: vec![0.0; m],
            vectors: CMatrix::identity(m, m),
        };
    }
    let embed = DMatrix::<f64>::from_fn(2 * m, 2 * m, |r, c| {
        let (i, j) = (r % m, c % m);
        let v = sym[(i, j)];
        match (r < m, c < m) {
            (true, true) => v.re,
            (true, false) | (false, true) => v.im,
            (false, false) => -v.re,
        }
    });
    let eig = embed.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));

    let floor = 8.0 * f64::EPSILON * m as f64 * eig.eigenvalues[order[0]];

    let mut vectors = CMatrix::zeros(m, m);
    let mut values = Vec::with_capacity(m);
    for &idx in &order {
        if values.len() == m || eig.eigenvalues[idx] <= floor {
            break;
        }
        let col = eig.eigenvectors.column(idx);
        let q: Vec<Complex64> = (0..m).map(|i| Complex64::new(col[i], col[i + m])).collect();
        if push_orthonormal(&mut vectors, values.len(), q, 0.5) {
            values.push(eig.eigenvalues[idx]);
        }
    }
    // The remaining directions span the numerical null space. A unit vector rejected
    // here keeps less than 1e-6 of its weight outside the basis, and those weights
    // sum to the number of missing columns, so one pass always completes it.
    for e in 0..m {
        if values.len() == m {
            break;
        }
        let mut q = vec![Complex64::new(0.0, 0.0); m];
        q[e] = Complex64::new(1.0, 0.0);
        if push_orthonormal(&mut vectors, values.len(), q, 1e-3) {
            values.push(0.0);
        }
    }
    debug_assert_eq!(values.len(), m);
    Takagi { values, vectors }
}

/// Orthogonalizes `q` against the first `accepted` columns and stores it as column
/// `accepted` unless its remaining norm is below `min_norm`.
fn push_orthonormal(vectors: &mut CMatrix, accepted: usize, mut q: Vec<Complex64>, min_norm: f64) -> bool {
    let m = q.len();
    for _ in 0..2 {
        for k in 0..accepted {
            let overlap: Complex64 = (0..m).map(|i| vectors[(i, k)].conj() * q[i]).sum();
            for (i, qi) in q.iter_mut().enumerate() {
                *qi -= vectors[(i, k)] * overlap;
            }
        }
    }
    let norm = q.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm < min_norm {
        return false;
    }
    for (i, qi) in q.iter().enumerate() {
        vectors[(i, accepted)] = qi / norm;
    }
    true
}

/// Rebuilds Q·diag(σ)·Qᵀ.
pub fn takagi_reconstruct(t: &Takagi) -> CMatrix {
    let mut scaled = t.vectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::new(t.values[k], 0.0);
    }
    scaled * t.vectors.transpose()
}
