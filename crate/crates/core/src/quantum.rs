//! Dense complex linear algebra on labeled composite Hilbert spaces.
//!
//! Every state and operator carries the [`HilbertSpace`] it lives on. Flat
//! indices are row-major over the factor list, so the first factor is the most
//! significant digit of the multi-index.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest composite dimension accepted by [`HilbertSpace`].
pub const MAX_DIM: usize = 1 << 20;

/// Tolerance for structural invariants (hermiticity, trace, completeness).
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a positive semidefinite state.
pub const PSD_TOL: f64 = 1e-9;
/// Tolerance on the sum of measurement probabilities.
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;
/// Channels whose completeness is violated beyond this are rejected.
pub const CHANNEL_REJECT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled tensor factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factors: Vec<Factor>,
    dim: usize,
}

impl HilbertSpace {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor {
                label: label.into(),
                dim,
            })
            .collect();
        if factors.is_empty() {
            return Err(Error::InvalidSpace("no factors".into()));
        }
        let mut dim: usize = 1;
        for (i, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(Error::InvalidSpace(format!("factor `{}` has dimension 0", f.label)));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::InvalidSpace(format!("duplicate label `{}`", f.label)));
            }
            dim = dim
                .checked_mul(f.dim)
                .filter(|&d| d <= MAX_DIM)
                .ok_or(Error::DimensionOverflow(dim.saturating_mul(f.dim)))?;
        }
        Ok(Self { factors, dim })
    }

    /// A single two-level factor.
    pub fn qubit(label: &str) -> Self {
        Self::new([(label, 2)]).expect("a single qubit factor is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    /// Concatenates the factor lists; labels must stay unique.
    pub fn tensor(&self, other: &HilbertSpace) -> Result<HilbertSpace> {
        HilbertSpace::new(
            self.factors
                .iter()
                .chain(other.factors.iter())
                .map(|f| (f.label.clone(), f.dim)),
        )
    }

    pub fn flat_index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                actual: multi.len(),
            });
        }
        let mut flat = 0;
        for (&digit, f) in multi.iter().zip(&self.factors) {
            if digit >= f.dim {
                return Err(Error::DimensionMismatch {
                    expected: f.dim,
                    actual: digit,
                });
            }
            flat = flat * f.dim + digit;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut multi = vec![0; self.factors.len()];
        for (slot, f) in multi.iter_mut().zip(&self.factors).rev() {
            *slot = flat % f.dim;
            flat /= f.dim;
        }
        multi
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual,
            });
        }
        Ok(())
    }
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `max |U^dag U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Kronecker product carrying factor metadata along.
pub trait TensorProduct: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: HilbertSpace,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        space.check_dim(amplitudes.len())?;
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { space, amplitudes })
    }

    /// Computational basis vector for a multi-index.
    pub fn basis(space: HilbertSpace, multi: &[usize]) -> Result<Self> {
        let idx = space.flat_index(multi)?;
        let mut amplitudes = CVector::zeros(space.dim());
        amplitudes[idx] = ONE;
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            space: self.space.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Applies an operator to the amplitudes without renormalizing; the
    /// operator must be norm-preserving on this vector.
    pub fn apply(&self, op: &Operator) -> Result<Self> {
        self.space.check_dim(op.matrix.nrows())?;
        Self::new(self.space.clone(), &op.matrix * &self.amplitudes)
    }
}

impl TensorProduct for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(Self { space, amplitudes })
    }
}

/// A general square operator on a labeled space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        space.check_dim(matrix.nrows())?;
        Ok(Self { space, matrix })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let matrix = identity(space.dim());
        Self { space, matrix }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl TensorProduct for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        Ok(Self {
            space,
            matrix: kron(&self.matrix, &other.matrix),
        })
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates all three invariants before accepting the matrix.
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        space.check_dim(matrix.nrows())?;
        let rho = Self { space, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Output of a map that is known to preserve validity.
    fn from_valid(space: HilbertSpace, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.dim();
        let matrix = identity(d).scale(1.0 / d as f64);
        Self { space, matrix }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = hermiticity_defect(&self.matrix);
        if herm > STRUCTURE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // Tr(AB) = sum_ij A_ij B_ji, and rho is Hermitian so B_ji = conj(A_ij).
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Traces out the named factors, keeping the remaining ones in order.
    pub fn partial_trace(&self, traced: &[&str]) -> Result<DensityOperator> {
        let factors = self.space.factors();
        let mut keep_mask = vec![true; factors.len()];
        for label in traced {
            let pos = self
                .space
                .position(label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            keep_mask[pos] = false;
        }
        let kept: Vec<(String, usize)> = factors
            .iter()
            .zip(&keep_mask)
            .filter(|(_, &k)| k)
            .map(|(f, _)| (f.label.clone(), f.dim))
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidSpace("cannot trace out every factor".into()));
        }
        let reduced = HilbertSpace::new(kept)?;
        let mut out = CMatrix::zeros(reduced.dim(), reduced.dim());
        let d = self.space.dim();
        for row in 0..d {
            let mr = self.space.multi_index(row);
            for col in 0..d {
                let mc = self.space.multi_index(col);
                let traced_match = mr
                    .iter()
                    .zip(&mc)
                    .zip(&keep_mask)
                    .all(|((a, b), &k)| k || a == b);
                if !traced_match {
                    continue;
                }
                let r: Vec<usize> = mr.iter().zip(&keep_mask).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
                let c: Vec<usize> = mc.iter().zip(&keep_mask).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
                out[(reduced.flat_index(&r)?, reduced.flat_index(&c)?)] += self.matrix[(row, col)];
            }
        }
        Ok(DensityOperator::from_valid(reduced, out))
    }
}

impl TensorProduct for DensityOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        Ok(Self::from_valid(space, kron(&self.matrix, &other.matrix)))
    }
}

/// `U rho U^dag`; rejects `U` whose unitarity defect exceeds 1e-12.
pub fn apply_unitary(rho: &DensityOperator, u: &CMatrix) -> Result<DensityOperator> {
    rho.space.check_dim(u.nrows())?;
    rho.space.check_dim(u.ncols())?;
    let defect = unitarity_defect(u);
    if defect > STRUCTURE_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let out = u * &rho.matrix * u.adjoint();
    Ok(DensityOperator::from_valid(rho.space.clone(), out))
}

/// Operator-sum representation of a trace-preserving channel.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    space: HilbertSpace,
    elements: Vec<CMatrix>,
}

impl KrausChannel {
    /// Rejects element lists whose completeness defect exceeds 1e-10.
    pub fn new(space: HilbertSpace, elements: Vec<CMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::IncompleteChannel(1.0));
        }
        for e in &elements {
            space.check_dim(e.nrows())?;
            space.check_dim(e.ncols())?;
        }
        let ch = Self { space, elements };
        let defect = ch.completeness_defect();
        if defect > CHANNEL_REJECT_TOL {
            return Err(Error::IncompleteChannel(defect));
        }
        Ok(ch)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// `max |sum_i E_i^dag E_i - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.space.dim();
        let sum = self
            .elements
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e);
        max_abs_diff(&sum, &identity(d))
    }
}

/// `sum_i E_i rho E_i^dag`.
pub fn apply_channel(rho: &DensityOperator, ch: &KrausChannel) -> Result<DensityOperator> {
    rho.space.check_dim(ch.space.dim())?;
    let d = rho.space.dim();
    let out = ch
        .elements
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, e| acc + e * &rho.matrix * e.adjoint());
    Ok(DensityOperator::from_valid(rho.space.clone(), out))
}

/// Embeds a single-factor channel into `space`, acting as identity elsewhere.
pub fn lift_channel(ch: &KrausChannel, target_label: &str, space: &HilbertSpace) -> Result<KrausChannel> {
    let pos = space
        .position(target_label)
        .ok_or_else(|| Error::UnknownLabel(target_label.to_string()))?;
    let target_dim = space.factors()[pos].dim;
    if ch.space.dim() != target_dim {
        return Err(Error::DimensionMismatch {
            expected: target_dim,
            actual: ch.space.dim(),
        });
    }
    let before: usize = space.factors()[..pos].iter().map(|f| f.dim).product();
    let after: usize = space.factors()[pos + 1..].iter().map(|f| f.dim).product();
    let (left, right) = (identity(before), identity(after));
    let elements = ch
        .elements
        .iter()
        .map(|e| kron(&kron(&left, e), &right))
        .collect();
    Ok(KrausChannel {
        space: space.clone(),
        elements,
    })
}

/// Complete set of mutually orthogonal projectors with outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    space: HilbertSpace,
    projectors: Vec<CMatrix>,
    labels: Vec<String>,
}

impl ProjectorSet {
    pub fn new(space: HilbertSpace, projectors: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if projectors.len() != labels.len() {
            return Err(Error::InvalidProjectors(format!(
                "{} projectors but {} labels",
                projectors.len(),
                labels.len()
            )));
        }
        let d = space.dim();
        for p in &projectors {
            space.check_dim(p.nrows())?;
            space.check_dim(p.ncols())?;
        }
        for (i, p) in projectors.iter().enumerate() {
            let herm = hermiticity_defect(p);
            if herm > STRUCTURE_TOL {
                return Err(Error::InvalidProjectors(format!("projector {i} not Hermitian ({herm:e})")));
            }
            let idem = max_abs_diff(&(p * p), p);
            if idem > STRUCTURE_TOL {
                return Err(Error::InvalidProjectors(format!("projector {i} not idempotent ({idem:e})")));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                let overlap = (p * q).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if overlap > STRUCTURE_TOL {
                    return Err(Error::InvalidProjectors(format!(
                        "projectors {i} and {j} not orthogonal ({overlap:e})"
                    )));
                }
            }
        }
        let sum = projectors.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
        let defect = max_abs_diff(&sum, &identity(d));
        if defect > STRUCTURE_TOL {
            return Err(Error::InvalidProjectors(format!("projectors do not sum to identity ({defect:e})")));
        }
        Ok(Self {
            space,
            projectors,
            labels,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }
}

/// `Tr(M Pi)` for a general operator, no clamping.
pub fn trace_product(m: &CMatrix, projector: &CMatrix) -> f64 {
    // Tr(MP) = sum_ij M_ij P_ji
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += (m[(i, j)] * projector[(j, i)]).re;
        }
    }
    acc
}

/// Born-rule probabilities `Tr(rho Pi_m)`, clamped to `[0, 1]`.
pub fn measurement_probabilities(rho: &DensityOperator, ps: &ProjectorSet) -> Result<Vec<f64>> {
    rho.space.check_dim(ps.space.dim())?;
    Ok(ps
        .projectors
        .iter()
        .map(|p| trace_product(&rho.matrix, p).clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubits(labels: &[&str]) -> HilbertSpace {
        HilbertSpace::new(labels.iter().map(|l| (*l, 2))).unwrap()
    }

    #[test]
    fn identity_tensor_identity_is_identity() {
        let a = Operator::identity(HilbertSpace::qubit("a"));
        let b = Operator::identity(HilbertSpace::qubit("b"));
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.space().dim(), 4);
        assert_eq!(ab.matrix(), &identity(4));
    }

    #[test]
    fn first_basis_vectors_map_to_flat_zero() {
        let path = HilbertSpace::qubit("path");
        let pol = HilbertSpace::qubit("pol");
        let u = PureState::basis(path, &[0]).unwrap();
        let h = PureState::basis(pol, &[0]).unwrap();
        let uh = u.tensor(&h).unwrap();
        assert_eq!(uh.amplitudes()[0], ONE);
        assert_eq!(uh.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn pauli_on_first_factor() {
        let sx = Operator::new(HilbertSpace::qubit("a"), pauli_x()).unwrap();
        let id = Operator::identity(HilbertSpace::qubit("b"));
        let op = sx.tensor(&id).unwrap();
        let zero = PureState::basis(qubits(&["a", "b"]), &[0, 0]).unwrap();
        let out = zero.apply(&op).unwrap();
        let expected = PureState::basis(qubits(&["a", "b"]), &[1, 0]).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn multi_index_round_trip() {
        let space = HilbertSpace::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        for flat in 0..space.dim() {
            assert_eq!(space.flat_index(&space.multi_index(flat)).unwrap(), flat);
        }
        assert_eq!(space.flat_index(&[1, 0, 0]).unwrap(), 6);
    }

    #[test]
    fn space_rejects_duplicates_and_overflow() {
        assert!(matches!(
            HilbertSpace::new([("a", 2), ("a", 2)]),
            Err(Error::InvalidSpace(_))
        ));
        assert!(matches!(
            HilbertSpace::new([("a", 1 << 11), ("b", 1 << 10)]),
            Err(Error::DimensionOverflow(_))
        ));
        let big = Operator::identity(HilbertSpace::new([("a", 1 << 10)]).unwrap());
        let big2 = Operator::new(HilbertSpace::new([("b", 2048)]).unwrap(), identity(2048)).unwrap();
        assert!(matches!(big.tensor(&big2), Err(Error::DimensionOverflow(_))));
    }

    #[test]
    fn unitary_identity_leaves_state_alone() {
        let rho = PureState::basis(qubits(&["a"]), &[1]).unwrap().density();
        let out = apply_unitary(&rho, &identity(2)).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn non_unitary_is_rejected_with_defect() {
        let rho = DensityOperator::maximally_mixed(qubits(&["a"]));
        let m = pauli_x().scale(1.1);
        match apply_unitary(&rho, &m) {
            Err(Error::NotUnitary(d)) => assert!((d - 0.21).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_channel_is_noop() {
        let space = qubits(&["a"]);
        let ch = KrausChannel::new(space.clone(), vec![identity(2)]).unwrap();
        let rho = PureState::basis(space, &[0]).unwrap().density();
        assert_eq!(apply_channel(&rho, &ch).unwrap(), rho);
    }

    #[test]
    fn incomplete_channel_rejected() {
        let space = qubits(&["a"]);
        let err = KrausChannel::new(space, vec![identity(2).scale(0.9)]).unwrap_err();
        assert!(matches!(err, Error::IncompleteChannel(_)));
    }

    #[test]
    fn lift_rejects_unknown_label_and_wrong_dim() {
        let ch = KrausChannel::new(HilbertSpace::qubit("x"), vec![identity(2)]).unwrap();
        let space = HilbertSpace::new([("a", 2), ("b", 3)]).unwrap();
        assert!(matches!(lift_channel(&ch, "z", &space), Err(Error::UnknownLabel(_))));
        assert!(matches!(
            lift_channel(&ch, "b", &space),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn maximally_mixed_gives_uniform_probabilities() {
        let space = qubits(&["a", "b"]);
        let projectors = (0..4)
            .map(|k| {
                let mut m = CMatrix::zeros(4, 4);
                m[(k, k)] = ONE;
                m
            })
            .collect();
        let ps = ProjectorSet::new(space.clone(), projectors, (0..4).map(|k| k.to_string()).collect()).unwrap();
        let probs = measurement_probabilities(&DensityOperator::maximally_mixed(space), &ps).unwrap();
        for p in probs {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn projector_set_rejects_overlap() {
        let space = qubits(&["a"]);
        let mut p0 = CMatrix::zeros(2, 2);
        p0[(0, 0)] = ONE;
        let err = ProjectorSet::new(space, vec![p0.clone(), p0], vec!["x".into(), "y".into()]).unwrap_err();
        assert!(matches!(err, Error::InvalidProjectors(_)));
    }

    #[test]
    fn density_validation_catches_bad_matrices() {
        let space = qubits(&["a"]);
        let not_psd = CMatrix::from_row_slice(2, 2, &[ONE.scale(1.5), ZERO, ZERO, -ONE.scale(0.5)]);
        assert!(matches!(
            DensityOperator::new(space.clone(), not_psd),
            Err(Error::NotPositive(_))
        ));
        let bad_trace = identity(2);
        assert!(matches!(
            DensityOperator::new(space.clone(), bad_trace),
            Err(Error::InvalidTrace(_))
        ));
        let not_herm = CMatrix::from_row_slice(2, 2, &[ONE.scale(0.5), I, ZERO, ONE.scale(0.5)]);
        assert!(matches!(DensityOperator::new(space, not_herm), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = PureState::basis(qubits(&["a"]), &[1]).unwrap().density();
        let b = DensityOperator::maximally_mixed(qubits(&["b"]));
        let ab = a.tensor(&b).unwrap();
        let ra = ab.partial_trace(&["b"]).unwrap();
        assert!(max_abs_diff(ra.matrix(), a.matrix()) < 1e-15);
        let rb = ab.partial_trace(&["a"]).unwrap();
        assert!(max_abs_diff(rb.matrix(), b.matrix()) < 1e-15);
    }
}
