//! Random states and unitaries for property tests and benchmarks.

use rand::Rng;

use crate::linalg::{c, CMatrix, CVector, C64};
use crate::quantum::StateVector;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(gaussian(rng), gaussian(rng))
}

/// Haar-distributed pure state on `num_qubits` qubits.
pub fn random_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> StateVector {
    let dim = 1usize << num_qubits;
    let v = CVector::new((0..dim).map(|_| gaussian_c64(rng)).collect()).expect("finite");
    StateVector::normalized(v).expect("nonzero")
}

/// Random unitary from Gram-Schmidt orthonormalization of a complex
/// Gaussian matrix (Haar up to column phases).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        for u in &cols {
            let overlap: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= overlap * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            m[(i, j)] = *z;
        }
    }
    m
}
