//! Qubit registers, gates placed on wires, projective measurements and
//! density operators.
//!
//! Qubit 0 is the leftmost ket label and the most significant bit of a
//! basis index: in a two-qubit register `|10>` has index 2.

use thiserror::Error;

use crate::linalg::{c, CMatrix, CVector, LinalgError, C64, ZERO};

/// Tolerance for projector, unitarity and Hermiticity checks.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Tolerance on `<s|s> == 1` and `Tr rho == 1`.
pub const NORM_TOL: f64 = 1e-9;
/// Outcomes with Born probability below this are treated as impossible.
pub const ZERO_PROBABILITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("wire {wire} out of range for a {num_qubits}-qubit register")]
    WireOutOfRange { wire: usize, num_qubits: usize },
    #[error("wire {0} listed more than once")]
    DuplicateWire(usize),
    #[error("no wires given")]
    EmptyWires,
    #[error("operator of dimension {dim} cannot act on {wires} wire(s)")]
    ArityMismatch { dim: usize, wires: usize },
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("invalid projector family: {0}")]
    InvalidFamily(String),
    #[error("unknown outcome label {0:?}")]
    UnknownLabel(String),
    #[error("outcome {label:?} has zero probability ({probability:e})")]
    ZeroProbability { label: String, probability: f64 },
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
}

fn qubits_for_dim(dim: usize) -> Result<usize, QuantumError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QuantumError::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub(crate) fn check_wires(wires: &[usize], num_qubits: usize) -> Result<(), QuantumError> {
    if wires.is_empty() {
        return Err(QuantumError::EmptyWires);
    }
    for (i, &w) in wires.iter().enumerate() {
        if w >= num_qubits {
            return Err(QuantumError::WireOutOfRange { wire: w, num_qubits });
        }
        if wires[..i].contains(&w) {
            return Err(QuantumError::DuplicateWire(w));
        }
    }
    Ok(())
}

/// Pure state of an n-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self, QuantumError> {
        let num_qubits = qubits_for_dim(amplitudes.dim())?;
        let n2 = amplitudes.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::NotNormalized(n2));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self, QuantumError> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(QuantumError::NotNormalized(0.0));
        }
        Self::new(amplitudes.scale(c(1.0 / n, 0.0)))
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        Self {
            num_qubits,
            amplitudes: CVector::basis(1 << num_qubits, index),
        }
    }

    /// Computational basis state from a bit label such as `"10"`.
    pub fn from_bits(bits: &str) -> Result<Self, QuantumError> {
        let index = usize::from_str_radix(bits, 2)
            .map_err(|_| QuantumError::UnknownLabel(bits.to_string()))?;
        Ok(Self::basis(bits.len(), index))
    }

    /// Product state `q0 ⊗ q1 ⊗ ...` of single-qubit states.
    pub fn product(factors: &[StateVector]) -> Result<Self, QuantumError> {
        let mut acc = CVector::new(vec![c(1.0, 0.0)])?;
        for f in factors {
            acc = acc.kron(&f.amplitudes);
        }
        Self::new(acc)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.dim()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes: self.amplitudes.kron(&other.amplitudes),
        }
    }

    /// `|<self|other>|` within `tol` of 1.
    pub fn same_ray(&self, other: &StateVector, tol: f64) -> bool {
        self.amplitudes
            .inner(&other.amplitudes)
            .is_ok_and(|z| (z.norm() - 1.0).abs() <= tol)
    }
}

/// A `k`-wire unitary placed on specific wires of a register.
#[derive(Clone, Debug, PartialEq)]
pub struct GatePlacement {
    unitary: CMatrix,
    wires: Vec<usize>,
}

impl GatePlacement {
    pub fn new(unitary: CMatrix, wires: Vec<usize>) -> Result<Self, QuantumError> {
        if !unitary.is_square() {
            return Err(LinalgError::NotSquare {
                rows: unitary.rows(),
                cols: unitary.cols(),
            }
            .into());
        }
        let k = qubits_for_dim(unitary.rows())?;
        if k != wires.len() {
            return Err(QuantumError::ArityMismatch {
                dim: unitary.rows(),
                wires: wires.len(),
            });
        }
        check_wires(&wires, usize::MAX)?;
        if !unitary.is_unitary(STRUCTURE_TOL) {
            return Err(QuantumError::NotUnitary);
        }
        Ok(Self { unitary, wires })
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires
    }
}

/// Embeds an operator acting on `wires` into the full `num_qubits` register,
/// acting as the identity on the remaining wires. The first listed wire is
/// the most significant bit of the operator's own index.
pub fn embed_operator(
    op: &CMatrix,
    wires: &[usize],
    num_qubits: usize,
) -> Result<CMatrix, QuantumError> {
    check_wires(wires, num_qubits)?;
    if !op.is_square() || op.rows() != 1 << wires.len() {
        return Err(QuantumError::ArityMismatch {
            dim: op.rows(),
            wires: wires.len(),
        });
    }
    let dim = 1usize << num_qubits;
    let k = wires.len();
    let shifts: Vec<usize> = wires.iter().map(|&w| num_qubits - 1 - w).collect();
    let mask: usize = shifts.iter().map(|s| 1 << s).sum();

    let sub_index = |full: usize| -> usize {
        shifts
            .iter()
            .fold(0, |acc, &s| (acc << 1) | ((full >> s) & 1))
    };
    let with_sub = |full: usize, sub: usize| -> usize {
        let mut out = full & !mask;
        for (pos, &s) in shifts.iter().enumerate() {
            let bit = (sub >> (k - 1 - pos)) & 1;
            out |= bit << s;
        }
        out
    };

    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let sub_col = sub_index(col);
        for sub_row in 0..op.rows() {
            let v = op[(sub_row, sub_col)];
            if v != ZERO {
                out[(with_sub(col, sub_row), col)] = v;
            }
        }
    }
    Ok(out)
}

/// Full-register unitary for a placed gate.
pub fn lift_gate(g: &GatePlacement, num_qubits: usize) -> Result<CMatrix, QuantumError> {
    embed_operator(&g.unitary, &g.wires, num_qubits)
}

pub fn apply_gate(s: &StateVector, g: &GatePlacement) -> Result<StateVector, QuantumError> {
    let u = lift_gate(g, s.num_qubits)?;
    Ok(StateVector {
        num_qubits: s.num_qubits,
        amplitudes: u.apply(&s.amplitudes)?,
    })
}

/// Labeled, complete, mutually orthogonal projectors: one projective
/// measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorFamily {
    outcomes: Vec<(String, CMatrix)>,
}

impl ProjectorFamily {
    pub fn new(outcomes: Vec<(String, CMatrix)>) -> Result<Self, QuantumError> {
        let invalid = |m: String| Err(QuantumError::InvalidFamily(m));
        let Some((_, first)) = outcomes.first() else {
            return invalid("no outcomes".into());
        };
        let dim = first.rows();
        qubits_for_dim(dim)?;
        for (i, (label, p)) in outcomes.iter().enumerate() {
            if p.rows() != dim || p.cols() != dim {
                return invalid(format!("projector {label:?} has the wrong shape"));
            }
            if outcomes[..i].iter().any(|(l, _)| l == label) {
                return invalid(format!("duplicate label {label:?}"));
            }
            if label.is_empty() || label.contains([',', '.', ' ', '\t']) {
                return invalid(format!(
                    "label {label:?} must be nonempty without commas, dots or spaces"
                ));
            }
            if !p.is_hermitian(STRUCTURE_TOL) {
                return invalid(format!("projector {label:?} is not Hermitian"));
            }
            if p.max_abs_diff(&(p * p))? > STRUCTURE_TOL {
                return invalid(format!("projector {label:?} is not idempotent"));
            }
        }
        let zero = CMatrix::zeros(dim, dim);
        for (i, (li, pi)) in outcomes.iter().enumerate() {
            for (lj, pj) in &outcomes[i + 1..] {
                if (pi * pj).max_abs_diff(&zero)? > STRUCTURE_TOL {
                    return invalid(format!("projectors {li:?} and {lj:?} are not orthogonal"));
                }
            }
        }
        let sum = outcomes.iter().fold(zero, |acc, (_, p)| &acc + p);
        if sum.max_abs_diff(&CMatrix::identity(dim))? > STRUCTURE_TOL {
            return invalid("projectors do not sum to the identity".into());
        }
        Ok(Self { outcomes })
    }

    /// Family whose projectors are `|v><v|` for an orthonormal basis.
    pub fn from_basis(basis: Vec<(String, CVector)>) -> Result<Self, QuantumError> {
        Self::new(basis.into_iter().map(|(l, v)| (l, v.outer(&v))).collect())
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].1.rows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[(String, CMatrix)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn projector(&self, label: &str) -> Result<&CMatrix, QuantumError> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| p)
            .ok_or_else(|| QuantumError::UnknownLabel(label.to_string()))
    }

    /// Tensor product of two families; labels are concatenated.
    pub fn tensor(&self, other: &ProjectorFamily) -> Result<ProjectorFamily, QuantumError> {
        let mut outcomes = Vec::with_capacity(self.len() * other.len());
        for (la, pa) in &self.outcomes {
            for (lb, pb) in &other.outcomes {
                outcomes.push((format!("{la}{lb}"), pa.kron(pb)));
            }
        }
        ProjectorFamily::new(outcomes)
    }
}

/// Rank of a projector, read off its trace.
pub fn projector_rank(p: &CMatrix) -> usize {
    p.trace().map_or(0, |t| t.re.round().max(0.0) as usize)
}

/// Orthonormal basis of the range of a projector, by Gram-Schmidt over its
/// columns. For projectors diagonal in the computational basis this returns
/// the corresponding basis kets in index order.
pub fn projector_range_basis(p: &CMatrix) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    let rank = projector_rank(p);
    for j in 0..p.cols() {
        if basis.len() == rank {
            break;
        }
        let mut v = p.column(j);
        for b in &basis {
            let overlap = b.inner(&v).expect("same dim");
            let proj = b.scale(overlap);
            v = CVector::new(v.entries().iter().zip(proj.entries()).map(|(x, y)| x - y).collect())
                .expect("finite");
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.scale(c(1.0 / n, 0.0)));
        }
    }
    basis
}

fn bit_label(index: usize, width: usize) -> String {
    format!("{index:0width$b}")
}

/// Rank-1 projectors onto every computational basis state, labeled by
/// bitstrings in index order.
pub fn computational_basis_family(num_qubits: usize) -> ProjectorFamily {
    let dim = 1usize << num_qubits;
    let outcomes = (0..dim)
        .map(|i| {
            let mut p = CMatrix::zeros(dim, dim);
            p[(i, i)] = c(1.0, 0.0);
            (bit_label(i, num_qubits), p)
        })
        .collect();
    ProjectorFamily { outcomes }
}

/// Lifts a family acting on `wires` to the whole register.
pub fn subsystem_family(
    f: &ProjectorFamily,
    wires: &[usize],
    num_qubits: usize,
) -> Result<ProjectorFamily, QuantumError> {
    let outcomes = f
        .outcomes
        .iter()
        .map(|(l, p)| Ok((l.clone(), embed_operator(p, wires, num_qubits)?)))
        .collect::<Result<Vec<_>, QuantumError>>()?;
    Ok(ProjectorFamily { outcomes })
}

/// Born rule: probability `<s|P|s>` and the renormalized post-measurement
/// state `P|s> / sqrt(p)`.
pub fn born_update(
    s: &StateVector,
    f: &ProjectorFamily,
    label: &str,
) -> Result<(f64, StateVector), QuantumError> {
    let p = f.projector(label)?;
    let projected = p.apply(&s.amplitudes)?;
    let probability = projected.norm_sqr();
    if probability < ZERO_PROBABILITY_FLOOR {
        return Err(QuantumError::ZeroProbability {
            label: label.to_string(),
            probability,
        });
    }
    let collapsed = projected.scale(c(1.0 / probability.sqrt(), 0.0));
    Ok((
        probability,
        StateVector {
            num_qubits: s.num_qubits,
            amplitudes: collapsed,
        },
    ))
}

/// Born probabilities of every outcome, in family order.
pub fn outcome_probabilities(s: &StateVector, f: &ProjectorFamily) -> Vec<(String, f64)> {
    f.outcomes
        .iter()
        .map(|(l, p)| {
            let v = p.apply(&s.amplitudes).expect("family matches register");
            (l.clone(), v.norm_sqr())
        })
        .collect()
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    num_qubits: usize,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self, QuantumError> {
        if !matrix.is_square() {
            return Err(QuantumError::InvalidDensity("not square".into()));
        }
        let num_qubits = qubits_for_dim(matrix.rows())?;
        if !matrix.is_hermitian(STRUCTURE_TOL) {
            return Err(QuantumError::InvalidDensity("not Hermitian".into()));
        }
        let tr = matrix.trace()?;
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(QuantumError::InvalidDensity(format!("trace {tr}")));
        }
        let rho = Self { num_qubits, matrix };
        if let Some(min) = rho.eigenvalues().into_iter().reduce(f64::min) {
            if min < -NORM_TOL {
                return Err(QuantumError::InvalidDensity(format!(
                    "negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(rho)
    }

    /// Mixture `sum_k |w_k><w_k|` of unnormalized branch vectors whose squared
    /// norms already sum to one.
    pub fn from_branches(num_qubits: usize, branches: &[CVector]) -> Result<Self, QuantumError> {
        let dim = 1usize << num_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for w in branches {
            if w.dim() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim.to_string(),
                    found: w.dim().to_string(),
                }
                .into());
            }
            m = &m + &w.outer(w);
        }
        let tr = m.trace()?.re;
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::InvalidDensity(format!("trace {tr}")));
        }
        Ok(Self {
            num_qubits,
            matrix: m,
        })
    }

    /// Caller guarantees the density-operator invariants.
    pub(crate) fn from_matrix_unchecked(num_qubits: usize, matrix: CMatrix) -> Self {
        Self { num_qubits, matrix }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace().expect("square")
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().expect("square").re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            num_qubits: self.num_qubits + other.num_qubits,
            matrix: self.matrix.kron(&other.matrix),
        }
    }
}

/// `|s><s|`.
pub fn density_from_pure(s: &StateVector) -> DensityOperator {
    DensityOperator {
        num_qubits: s.num_qubits,
        matrix: s.amplitudes.outer(&s.amplitudes),
    }
}

/// Traces out every wire not in `keep_wires`. The kept wires appear in the
/// result in the order given.
pub fn partial_trace(
    rho: &DensityOperator,
    keep_wires: &[usize],
) -> Result<DensityOperator, QuantumError> {
    let n = rho.num_qubits;
    check_wires(keep_wires, n)?;
    let keep_shifts: Vec<usize> = keep_wires.iter().map(|&w| n - 1 - w).collect();
    let keep_mask: usize = keep_shifts.iter().map(|s| 1 << s).sum();
    let reduced_index = |full: usize| -> usize {
        keep_shifts
            .iter()
            .fold(0, |acc, &s| (acc << 1) | ((full >> s) & 1))
    };

    let dim = 1usize << n;
    let out_dim = 1usize << keep_wires.len();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for r in 0..dim {
        for col in 0..dim {
            if (r & !keep_mask) != (col & !keep_mask) {
                continue;
            }
            out[(reduced_index(r), reduced_index(col))] += rho.matrix[(r, col)];
        }
    }
    Ok(DensityOperator {
        num_qubits: keep_wires.len(),
        matrix: out,
    })
}

/// Eigenvalues of a Hermitian matrix via cyclic Jacobi on its real
/// `2n x 2n` embedding `[[A, -B], [B, A]]`, where `H = A + iB`. Each
/// eigenvalue of `H` appears twice in the embedding.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.rows();
    let m = 2 * n;
    let mut a = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = cs * akp - sn * akq;
                    a[k * m + q] = sn * akp + cs * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = cs * apk - sn * aqk;
                    a[q * m + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut diag: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    diag.sort_by(f64::total_cmp);
    diag.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::linalg::ONE;
    use crate::random::{random_state, random_unitary};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const A: f64 = 0.6;
    const B: f64 = 0.8;

    fn psi_sf() -> StateVector {
        StateVector::new(CVector::from_real(&[A, 0.0, B, 0.0])).unwrap()
    }

    fn cnot_on(wires: Vec<usize>) -> GatePlacement {
        GatePlacement::new(gates::cnot(), wires).unwrap()
    }

    #[test]
    fn lift_cnot_on_natural_wires_is_cnot() {
        assert_eq!(lift_gate(&cnot_on(vec![0, 1]), 2).unwrap(), gates::cnot());
    }

    #[test]
    fn lift_x_on_second_wire() {
        let g = GatePlacement::new(gates::x(), vec![1]).unwrap();
        assert_eq!(
            lift_gate(&g, 2).unwrap(),
            CMatrix::identity(2).kron(&gates::x())
        );
    }

    #[test]
    fn lift_reversed_cnot() {
        // Control on wire 1, target wire 0: only basis states with wire-1 bit
        // set are affected, and they have wire-0 flipped.
        let m = lift_gate(&cnot_on(vec![1, 0]), 2).unwrap();
        let expected: [(usize, usize); 4] = [(0b00, 0b00), (0b01, 0b11), (0b10, 0b10), (0b11, 0b01)];
        for (input, output) in expected {
            let out = m.apply(&CVector::basis(4, input)).unwrap();
            assert_eq!(out, CVector::basis(4, output), "input {input:02b}");
        }
    }

    #[test]
    fn lift_errors() {
        let g = GatePlacement::new(gates::x(), vec![3]).unwrap();
        assert_eq!(
            lift_gate(&g, 2),
            Err(QuantumError::WireOutOfRange { wire: 3, num_qubits: 2 })
        );
        assert_eq!(
            GatePlacement::new(gates::cnot(), vec![0, 0]),
            Err(QuantumError::DuplicateWire(0))
        );
        assert!(matches!(
            GatePlacement::new(gates::x(), vec![0, 1]),
            Err(QuantumError::ArityMismatch { .. })
        ));
        let not_unitary = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(
            GatePlacement::new(not_unitary, vec![0]),
            Err(QuantumError::NotUnitary)
        );
    }

    #[test]
    fn cnot_entangles_system_and_friend() {
        let out = apply_gate(&psi_sf(), &cnot_on(vec![0, 1])).unwrap();
        assert_eq!(out.amplitudes(), &CVector::from_real(&[A, 0.0, 0.0, B]));
        let s00 = StateVector::from_bits("00").unwrap();
        assert_eq!(apply_gate(&s00, &cnot_on(vec![0, 1])).unwrap(), s00);
        let s10 = StateVector::from_bits("10").unwrap();
        assert_eq!(
            apply_gate(&s10, &cnot_on(vec![0, 1])).unwrap(),
            StateVector::from_bits("11").unwrap()
        );
    }

    #[test]
    fn computational_families() {
        let f1 = computational_basis_family(1);
        let labels: Vec<_> = f1.labels().collect();
        assert_eq!(labels, ["0", "1"]);
        assert_eq!(f1.projector("0").unwrap(), &CVector::basis(2, 0).outer(&CVector::basis(2, 0)));
        assert_eq!(f1.projector("1").unwrap(), &CVector::basis(2, 1).outer(&CVector::basis(2, 1)));

        let f2 = computational_basis_family(2);
        let labels: Vec<_> = f2.labels().collect();
        assert_eq!(labels, ["00", "01", "10", "11"]);
        let sum = f2
            .outcomes()
            .iter()
            .fold(CMatrix::zeros(4, 4), |acc, (_, p)| &acc + p);
        assert_eq!(sum, CMatrix::identity(4));
        // Revalidate through the checked constructor.
        assert!(ProjectorFamily::new(f2.outcomes().to_vec()).is_ok());
    }

    #[test]
    fn subsystem_family_on_first_wire() {
        let f = subsystem_family(&computational_basis_family(1), &[0], 2).unwrap();
        let p0 = computational_basis_family(1).projector("0").unwrap().kron(&CMatrix::identity(2));
        let p1 = computational_basis_family(1).projector("1").unwrap().kron(&CMatrix::identity(2));
        assert_eq!(f.projector("0").unwrap(), &p0);
        assert_eq!(f.projector("1").unwrap(), &p1);
        assert!(ProjectorFamily::new(f.outcomes().to_vec()).is_ok());
        for (_, p) in f.outcomes() {
            let diag_rank = (0..4).filter(|&i| p[(i, i)] == ONE).count();
            assert_eq!(diag_rank, 2);
            assert_eq!(projector_rank(p), 2);
        }
        assert!(matches!(
            subsystem_family(&computational_basis_family(1), &[2], 2),
            Err(QuantumError::WireOutOfRange { .. })
        ));
    }

    #[test]
    fn family_validation_rejects_bad_input() {
        let p0 = CVector::basis(2, 0).outer(&CVector::basis(2, 0));
        assert!(ProjectorFamily::new(vec![("0".into(), p0.clone())]).is_err());
        assert!(ProjectorFamily::new(vec![
            ("0".into(), p0.clone()),
            ("0".into(), CVector::basis(2, 1).outer(&CVector::basis(2, 1))),
        ])
        .is_err());
        let plus = CVector::from_real(&[std::f64::consts::FRAC_1_SQRT_2; 2]);
        assert!(ProjectorFamily::new(vec![
            ("0".into(), p0),
            ("+".into(), plus.outer(&plus)),
        ])
        .is_err());
        assert!(ProjectorFamily::new(vec![]).is_err());
    }

    #[test]
    fn born_update_examples() {
        let psi = StateVector::new(CVector::from_real(&[A, B])).unwrap();
        let f = computational_basis_family(1);
        let (p, post) = born_update(&psi, &f, "1").unwrap();
        assert!((p - 0.64).abs() < 1e-12);
        assert_eq!(post, StateVector::basis(1, 1));

        let zero = StateVector::basis(1, 0);
        let (p, post) = born_update(&zero, &f, "0").unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(post, zero);

        assert!(matches!(
            born_update(&zero, &f, "1"),
            Err(QuantumError::ZeroProbability { .. })
        ));
        assert_eq!(
            born_update(&zero, &f, "2"),
            Err(QuantumError::UnknownLabel("2".into()))
        );
    }

    #[test]
    fn density_from_pure_examples() {
        let rho = density_from_pure(&StateVector::basis(1, 0));
        assert_eq!(rho.matrix(), &CMatrix::diagonal(&[ONE, ZERO]));

        let entangled = StateVector::new(CVector::from_real(&[A, 0.0, 0.0, B])).unwrap();
        let rho = density_from_pure(&entangled);
        let m = rho.matrix();
        for (i, j, v) in [(0, 0, 0.36), (0, 3, 0.48), (3, 0, 0.48), (3, 3, 0.64)] {
            assert!((m[(i, j)].re - v).abs() < 1e-15);
        }
        let nonzero = m.entries().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        assert!(DensityOperator::new(m.clone()).is_ok());
    }

    #[test]
    fn partial_trace_examples() {
        let entangled = StateVector::new(CVector::from_real(&[A, 0.0, 0.0, B])).unwrap();
        let rho_s = partial_trace(&density_from_pure(&entangled), &[0]).unwrap();
        let expected = CMatrix::diagonal(&[c(0.36, 0.0), c(0.64, 0.0)]);
        assert!(rho_s.matrix().max_abs_diff(&expected).unwrap() < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(CVector::from_real(&[h, 0.0, 0.0, h])).unwrap();
        let reduced = partial_trace(&density_from_pure(&bell), &[0]).unwrap();
        let half_i = CMatrix::identity(2).scale(c(0.5, 0.0));
        assert!(reduced.matrix().max_abs_diff(&half_i).unwrap() < 1e-12);
        assert!((reduced.purity() - 0.5).abs() < 1e-12);

        assert!(matches!(
            partial_trace(&density_from_pure(&bell), &[]),
            Err(QuantumError::EmptyWires)
        ));
        assert!(partial_trace(&density_from_pure(&bell), &[1, 1]).is_err());
        assert!(partial_trace(&density_from_pure(&bell), &[2]).is_err());
    }

    #[test]
    fn partial_trace_of_product_operator() {
        let rho_a = DensityOperator::new(CMatrix::from_rows(&[
            vec![c(0.7, 0.0), c(0.1, 0.2)],
            vec![c(0.1, -0.2), c(0.3, 0.0)],
        ]).unwrap())
        .unwrap();
        let rho_b = DensityOperator::new(CMatrix::diagonal(&[c(0.25, 0.0), c(0.75, 0.0)])).unwrap();
        let joint = rho_a.tensor(&rho_b);
        let back = partial_trace(&joint, &[0]).unwrap();
        assert!(back.matrix().max_abs_diff(rho_a.matrix()).unwrap() < 1e-15);
        let other = partial_trace(&joint, &[1]).unwrap();
        assert!(other.matrix().max_abs_diff(rho_b.matrix()).unwrap() < 1e-15);
    }

    #[test]
    fn keep_order_permutes_subsystems() {
        let s = StateVector::from_bits("01").unwrap();
        let swapped = partial_trace(&density_from_pure(&s), &[1, 0]).unwrap();
        assert_eq!(swapped, density_from_pure(&StateVector::from_bits("10").unwrap()));
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(CMatrix::diagonal(&[c(1.5, 0.0), c(-0.5, 0.0)])).is_err());
        assert!(DensityOperator::new(CMatrix::diagonal(&[c(0.5, 0.0), c(0.4, 0.0)])).is_err());
        let not_herm = CMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.1, 0.0)], vec![ZERO, c(0.5, 0.0)]]).unwrap();
        assert!(DensityOperator::new(not_herm).is_err());
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let y = gates::y();
        let ev = hermitian_eigenvalues(&y);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        let ev = hermitian_eigenvalues(&CMatrix::diagonal(&[c(0.3, 0.0), c(-0.2, 0.0), c(0.9, 0.0)]));
        let expected = [-0.2, 0.3, 0.9];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn range_basis_of_lifted_projector() {
        let f = subsystem_family(&computational_basis_family(1), &[1], 2).unwrap();
        let basis = projector_range_basis(f.projector("1").unwrap());
        assert_eq!(basis, vec![CVector::basis(4, 1), CVector::basis(4, 3)]);
    }

    #[test]
    fn wigner_reduced_state_is_diagonal_mixture() {
        // rho_S of the entangled state has vanishing coherences because the
        // friend's records |0_F>, |1_F> are orthogonal.
        let entangled = apply_gate(&psi_sf(), &cnot_on(vec![0, 1])).unwrap();
        let rho_s = partial_trace(&density_from_pure(&entangled), &[0]).unwrap();
        let m = rho_s.matrix();
        assert!(m[(0, 1)].norm() <= 1e-12 && m[(1, 0)].norm() <= 1e-12);
        assert!((m[(0, 0)].re - A * A).abs() <= 1e-12);
        assert!((m[(1, 1)].re - B * B).abs() <= 1e-12);
    }

    fn seeded(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn apply_gate_preserves_norm(seed in any::<u64>(), n in 1usize..=6, k in 1usize..=2) {
            let k = k.min(n);
            let mut rng = seeded(seed);
            let s = random_state(n, &mut rng);
            let wires: Vec<usize> = (0..k).map(|i| (i + seed as usize) % n).collect();
            let g = GatePlacement::new(random_unitary(1 << k, &mut rng), wires).unwrap();
            let out = apply_gate(&s, &g).unwrap();
            prop_assert!((out.amplitudes().norm_sqr() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn born_probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = seeded(seed);
            let s = random_state(n, &mut rng);
            let fam = subsystem_family(&computational_basis_family(1), &[n - 1], n).unwrap();
            for f in [computational_basis_family(n), fam] {
                let total: f64 = outcome_probabilities(&s, &f).iter().map(|(_, p)| p).sum();
                prop_assert!((total - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn partial_trace_recovers_product_factor(seed in any::<u64>(), na in 1usize..=3, nb in 1usize..=3) {
            let mut rng = seeded(seed);
            let a = random_state(na, &mut rng);
            let b = random_state(nb, &mut rng);
            let joint = density_from_pure(&a.tensor(&b));
            let keep: Vec<usize> = (0..na).collect();
            let reduced = partial_trace(&joint, &keep).unwrap();
            let diff = reduced.matrix().max_abs_diff(density_from_pure(&a).matrix()).unwrap();
            prop_assert!(diff <= 1e-10);
        }

        #[test]
        fn born_update_is_idempotent(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let s = random_state(2, &mut rng);
            let f = subsystem_family(&computational_basis_family(1), &[0], 2).unwrap();
            let (_, once) = born_update(&s, &f, "1").unwrap();
            let (p, twice) = born_update(&once, &f, "1").unwrap();
            prop_assert!((p - 1.0).abs() <= 1e-12);
            prop_assert!(twice.amplitudes().max_abs_diff(once.amplitudes()).unwrap() <= 1e-12);
        }
    }
}
