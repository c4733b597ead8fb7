//! Standard gate matrices. Multi-qubit gates list their first wire as the most
//! significant bit, so `cnot()` uses wire 0 as control.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::linalg::{c, CMatrix, ONE, ZERO};

pub fn x() -> CMatrix {
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn y() -> CMatrix {
    CMatrix::from_rows(&[vec![ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]]).unwrap()
}

pub fn z() -> CMatrix {
    CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
}

pub fn h() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    CMatrix::from_real_rows(&[&[s, s], &[s, -s]]).unwrap()
}

/// Controlled NOT: `|00>→|00>, |01>→|01>, |10>→|11>, |11>→|10>`.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

/// Real rotation `[[cos t, -sin t], [sin t, cos t]]`.
pub fn ry(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_real_rows(&[&[co, -s], &[s, co]]).unwrap()
}
