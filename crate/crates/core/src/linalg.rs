//! Dense complex vectors and matrices.
//!
//! Everything here is row-major and double precision. Registers stay small
//! (ten qubits at most), so no attempt is made at blocking or sparsity.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Shorthand for building a complex number.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("entry count {len} does not match shape {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
}

fn check_finite(entries: &[C64]) -> Result<(), LinalgError> {
    match entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(LinalgError::NonFinite(i)),
        None => Ok(()),
    }
}

/// A column vector of complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    entries: Vec<C64>,
}

impl CVector {
    pub fn new(entries: Vec<C64>) -> Result<Self, LinalgError> {
        check_finite(&entries)?;
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: vec![ZERO; dim] }
    }

    /// The unit vector `e_index` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = ONE;
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            entries: values.iter().map(|&x| c(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVector) -> Result<C64, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim().to_string(),
                found: other.dim().to_string(),
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: C64) -> CVector {
        Self {
            entries: self.entries.iter().map(|z| z * k).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CVector) -> CVector {
        let mut entries = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.entries {
            for b in &other.entries {
                entries.push(a * b);
            }
        }
        Self { entries }
    }

    /// `|self><other|`.
    pub fn outer(&self, other: &CVector) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), other.dim());
        for (i, a) in self.entries.iter().enumerate() {
            for (j, b) in other.entries.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    /// The vector viewed as a `dim x 1` matrix.
    pub fn as_column(&self) -> CMatrix {
        CMatrix {
            rows: self.dim(),
            cols: 1,
            data: self.entries.clone(),
        }
    }

    pub fn max_abs_diff(&self, other: &CVector) -> Result<f64, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim().to_string(),
                found: other.dim().to_string(),
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.entries[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.entries[i]
    }
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    /// Build from nested rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::BadShape {
                    rows: r,
                    cols,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(r, cols, data)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector {
            entries: (0..self.rows).map(|i| self[(i, j)]).collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = CMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &CVector) -> Result<CVector, LinalgError> {
        if self.cols != v.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols.to_string(),
                found: v.dim().to_string(),
            });
        }
        let entries = (0..self.rows)
            .map(|i| self.row(i).iter().zip(v.entries()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(CVector { entries })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Result<C64, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    pub fn scale(&self, k: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> Result<f64, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                found: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// True iff every entry of `self - other` has modulus at most `tol`.
    pub fn close_to(&self, other: &CMatrix, tol: f64) -> Result<bool, LinalgError> {
        Ok(self.max_abs_diff(other)? <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()).is_ok_and(|d| d <= tol)
    }

    /// `U U† == I` entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let prod = self.matmul(&self.adjoint()).expect("square");
        prod.max_abs_diff(&CMatrix::identity(self.rows))
            .is_ok_and(|d| d <= tol)
    }
}

/// Kronecker product of two matrices.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kron(b)
}

/// Standard matrix-vector product.
pub fn mat_apply(m: &CMatrix, v: &CVector) -> Result<CVector, LinalgError> {
    m.apply(v)
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn trace(m: &CMatrix) -> Result<C64, LinalgError> {
    m.trace()
}

/// Max-entry comparison of two equally shaped matrices.
pub fn frobenius_close(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool, LinalgError> {
    a.close_to(b, tol)
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use proptest::prelude::*;

    const A: f64 = 0.6;
    const B: f64 = 0.8;

    fn mat2(entries: [f64; 8]) -> CMatrix {
        let data = entries.chunks(2).map(|p| c(p[0], p[1])).collect();
        CMatrix::new(2, 2, data).unwrap()
    }

    fn square(dim: usize, vals: &[(f64, f64)]) -> CMatrix {
        CMatrix::new(dim, dim, vals.iter().map(|&(r, i)| c(r, i)).collect()).unwrap()
    }

    #[test]
    fn kron_of_basis_kets() {
        let zero = CVector::basis(2, 0);
        let k = zero.as_column().kron(&zero.as_column());
        assert_eq!(k.rows(), 4);
        assert_eq!(k.column(0), CVector::basis(4, 0));
    }

    #[test]
    fn kron_superposition_with_ancilla() {
        // (a, b) ⊗ (1, 0) = (a, 0, b, 0)
        let psi = CVector::from_real(&[A, B]);
        let k = psi.kron(&CVector::basis(2, 0));
        assert_eq!(k, CVector::from_real(&[A, 0.0, B, 0.0]));
        let km = tensor_product(&psi.as_column(), &CVector::basis(2, 0).as_column());
        assert_eq!(km.column(0), k);
    }

    #[test]
    fn kron_identities() {
        assert_eq!(
            tensor_product(&CMatrix::identity(2), &CMatrix::identity(2)),
            CMatrix::identity(4)
        );
    }

    #[test]
    fn apply_examples() {
        let psi = CVector::from_real(&[A, B]);
        assert_eq!(mat_apply(&CMatrix::identity(2), &psi).unwrap(), psi);
        assert_eq!(
            mat_apply(&gates::x(), &CVector::basis(2, 0)).unwrap(),
            CVector::basis(2, 1)
        );
        let out = mat_apply(&gates::cnot(), &CVector::from_real(&[A, 0.0, B, 0.0])).unwrap();
        assert_eq!(out, CVector::from_real(&[A, 0.0, 0.0, B]));
    }

    #[test]
    fn apply_dimension_mismatch() {
        let err = mat_apply(&CMatrix::identity(4), &CVector::basis(2, 0)).unwrap_err();
        assert!(matches!(err, LinalgError::DimensionMismatch { .. }));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(adjoint(&CMatrix::identity(3)), CMatrix::identity(3));
        let m = mat2([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let expected = mat2([0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(adjoint(&m), expected);
        // CNOT is a real symmetric permutation matrix.
        let cx = gates::cnot();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(cx[(i, j)], cx[(j, i)]);
                assert_eq!(cx[(i, j)].im, 0.0);
            }
        }
        assert_eq!(adjoint(&cx), cx);
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace(&CMatrix::identity(4)).unwrap(), c(4.0, 0.0));
        let one = CVector::basis(2, 1);
        assert_eq!(trace(&one.outer(&one)).unwrap(), ONE);
        assert!(matches!(
            trace(&CMatrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn trace_of_wigner_chain_product() {
        // C = 0.8 |11><psi0|, psi0 = (0.6, 0, 0.8, 0); Tr(C C†) by explicit
        // entry-by-entry product and diagonal sum.
        let psi0 = [A, 0.0, B, 0.0];
        let mut cm = [[0.0f64; 4]; 4];
        for (j, p) in psi0.iter().enumerate() {
            cm[3][j] = B * p;
        }
        let brute: f64 = cm.iter().flatten().map(|x| x * x).sum();
        assert!((brute - 0.64).abs() < 1e-15);

        let chain = CVector::basis(4, 3)
            .outer(&CVector::from_real(&psi0))
            .scale(c(B, 0.0));
        let t = trace(&(&chain * &chain.adjoint())).unwrap();
        assert!((t.re - 0.64).abs() < 1e-12 && t.im.abs() < 1e-15);
    }

    #[test]
    fn frobenius_close_examples() {
        let i = CMatrix::identity(2);
        assert!(frobenius_close(&i, &i, 1e-12).unwrap());
        assert!(!frobenius_close(&i, &i.scale(c(2.0, 0.0)), 1e-12).unwrap());
        let h = gates::h();
        assert!(frobenius_close(&(&h * &h.adjoint()), &i, 1e-12).unwrap());
        assert!(frobenius_close(&i, &CMatrix::identity(4), 1.0).is_err());
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(CMatrix::new(2, 2, vec![ONE; 3]).is_err());
        assert!(matches!(
            CMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(LinalgError::NonFinite(0))
        ));
        assert!(CVector::new(vec![c(0.0, f64::INFINITY)]).is_err());
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(r, i)| c(r, i))
    }

    fn arb_matrix(dim: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec(arb_c64(), dim * dim)
            .prop_map(move |d| CMatrix::new(dim, dim, d).unwrap())
    }

    fn arb_int_matrix() -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-8i32..=8, -8i32..=8), 4).prop_map(|d| {
            let data = d.into_iter().map(|(r, i)| c(r as f64, i as f64)).collect();
            CMatrix::new(2, 2, data).unwrap()
        })
    }

    fn arb_square() -> impl Strategy<Value = (CMatrix, CMatrix)> {
        (1usize..=16).prop_flat_map(|d| (arb_matrix(d), arb_matrix(d)))
    }

    proptest! {
        // Products of small Gaussian integers are exact in f64, so the two
        // groupings must agree bit for bit there.
        #[test]
        fn kron_is_associative_exactly(a in arb_int_matrix(), b in arb_int_matrix(), cm in arb_int_matrix()) {
            prop_assert_eq!(a.kron(&b).kron(&cm), a.kron(&b.kron(&cm)));
        }

        #[test]
        fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(2), cm in arb_matrix(2)) {
            let lhs = a.kron(&b).kron(&cm);
            let rhs = a.kron(&b.kron(&cm));
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-15);
        }

        #[test]
        fn mixed_product(a in arb_matrix(2), b in arb_matrix(2), cc in arb_matrix(2), d in arb_matrix(2)) {
            let lhs = &a.kron(&b) * &cc.kron(&d);
            let rhs = (&a * &cc).kron(&(&b * &d));
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        }

        #[test]
        fn trace_is_cyclic((a, b) in arb_square()) {
            let ab = trace(&(&a * &b)).unwrap();
            let ba = trace(&(&b * &a)).unwrap();
            prop_assert!((ab - ba).norm() <= 1e-12);
        }

        #[test]
        fn adjoint_involution_and_reversal(a in arb_matrix(3), b in arb_matrix(3)) {
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            let lhs = (&a * &b).adjoint();
            let rhs = &b.adjoint() * &a.adjoint();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn square_helper_shapes() {
        let m = square(2, &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 0.0)]);
        assert!(m.is_hermitian(0.0));
    }
}
