//! Truncated atom ⊗ Fock spaces and the elementary operators acting on them.
//!
//! Basis ordering is atom-major, photon-minor: the state `|level, n⟩` sits at
//! index `level * (n_max + 1) + n`. Atom levels are zero-based, so the paper-style
//! labels |1⟩, |2⟩, |3⟩ are [`GROUND`], [`EXCITED`] and [`AUXILIARY`].

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// |1⟩, the lower level of the JCM transition.
pub const GROUND: usize = 0;
/// |2⟩, the upper level of the JCM transition.
pub const EXCITED: usize = 1;
/// |3⟩, the far-detuned intermediate level of the Raman scheme.
pub const AUXILIARY: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    atom_levels: usize,
    photon_cutoff: usize,
}

impl SpaceSpec {
    pub fn new(atom_levels: usize, photon_cutoff: usize) -> Result<Self> {
        if !(2..=3).contains(&atom_levels) {
            return Err(Error::invalid(format!(
                "atom_levels must be 2 or 3, got {atom_levels}"
            )));
        }
        if photon_cutoff < 1 {
            return Err(Error::invalid("photon cutoff n_max must be at least 1"));
        }
        Ok(Self {
            atom_levels,
            photon_cutoff,
        })
    }

    pub fn two_level(photon_cutoff: usize) -> Result<Self> {
        Self::new(2, photon_cutoff)
    }

    pub fn three_level(photon_cutoff: usize) -> Result<Self> {
        Self::new(3, photon_cutoff)
    }

    pub fn atom_levels(&self) -> usize {
        self.atom_levels
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn fock_dim(&self) -> usize {
        self.photon_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.atom_levels * self.fock_dim()
    }

    /// Index of `|level, n⟩`; panics on out-of-range labels.
    pub fn index(&self, level: usize, n: usize) -> usize {
        assert!(level < self.atom_levels && n <= self.photon_cutoff);
        level * self.fock_dim() + n
    }

    pub fn checked_index(&self, level: usize, n: usize) -> Result<usize> {
        if level >= self.atom_levels {
            return Err(Error::invalid(format!(
                "atom level {level} out of range for a {}-level atom",
                self.atom_levels
            )));
        }
        if n > self.photon_cutoff {
            return Err(Error::invalid(format!(
                "photon number {n} exceeds cutoff {}",
                self.photon_cutoff
            )));
        }
        Ok(level * self.fock_dim() + n)
    }

    /// Inverse of [`SpaceSpec::index`].
    pub fn label(&self, index: usize) -> (usize, usize) {
        (index / self.fock_dim(), index % self.fock_dim())
    }

    /// Photon number of every basis index, in basis order.
    pub fn photon_numbers(&self) -> Vec<usize> {
        (0..self.dim()).map(|i| self.label(i).1).collect()
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-level atom x Fock(0..={})",
            self.atom_levels, self.photon_cutoff
        )
    }
}

/// Dense complex operator on a [`SpaceSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    space: SpaceSpec,
    matrix: DMatrix<C64>,
}

impl ComplexOperator {
    pub fn from_matrix(space: SpaceSpec, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, space {space} has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: SpaceSpec) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: SpaceSpec) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// `⟨row_level, row_n| O |col_level, col_n⟩`.
    pub fn element(&self, row: (usize, usize), col: (usize, usize)) -> C64 {
        self.matrix[(
            self.space.index(row.0, row.1),
            self.space.index(col.0, col.1),
        )]
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space,
            matrix: &self.matrix * factor,
        }
    }

    pub fn pow(&self, exponent: u32) -> Self {
        let mut out = Self::identity(self.space);
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |O - O†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        inf_norm(&self.matrix)
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        StateVector {
            space: self.space,
            amplitudes: &self.matrix * &state.amplitudes,
            normalization: Normalization::Unspecified,
        }
    }

    /// Principal submatrix on the given basis indices.
    pub fn restrict(&self, indices: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
            self.matrix[(indices[r], indices[c])]
        })
    }
}

pub(crate) fn inf_norm(m: &DMatrix<C64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl<'a> Mul<&'a ComplexOperator> for &'a ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: &'a ComplexOperator) -> ComplexOperator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        ComplexOperator {
            space: self.space,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl<'a> Add<&'a ComplexOperator> for &'a ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: &'a ComplexOperator) -> ComplexOperator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        ComplexOperator {
            space: self.space,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl<'a> Sub<&'a ComplexOperator> for &'a ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: &'a ComplexOperator) -> ComplexOperator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        ComplexOperator {
            space: self.space,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

/// How the producer of a state vouches for its norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Unit norm to within 1e-12.
    Unit,
    /// Produced by non-Hermitian evolution; norm ≤ 1 and decaying.
    SubNormalized,
    Unspecified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: SpaceSpec,
    amplitudes: DVector<C64>,
    normalization: Normalization,
}

impl StateVector {
    pub fn from_amplitudes(space: SpaceSpec, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::invalid(format!(
                "state has {} amplitudes, space {space} has dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let normalization = if (amplitudes.norm_squared() - 1.0).abs() <= 1e-12 {
            Normalization::Unit
        } else {
            Normalization::Unspecified
        };
        Ok(Self {
            space,
            amplitudes,
            normalization,
        })
    }

    pub(crate) fn tagged(
        space: SpaceSpec,
        amplitudes: DVector<C64>,
        normalization: Normalization,
    ) -> Self {
        Self {
            space,
            amplitudes,
            normalization,
        }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn amplitude(&self, level: usize, n: usize) -> C64 {
        self.amplitudes[self.space.index(level, n)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.amplitudes.norm_squared() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Self {
        Self {
            space: self.space,
            amplitudes: &self.amplitudes / C64::from(self.norm()),
            normalization: Normalization::Unit,
        }
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.space, other.space, "state spaces differ");
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn expectation(&self, op: &ComplexOperator) -> C64 {
        self.inner(&op.apply(self))
    }
}

/// Photon annihilation operator with hard truncation at `n_max`.
pub fn annihilation(space: SpaceSpec) -> ComplexOperator {
    let mut op = ComplexOperator::zeros(space);
    for level in 0..space.atom_levels() {
        for n in 1..=space.photon_cutoff() {
            let row = space.index(level, n - 1);
            let col = space.index(level, n);
            op.matrix[(row, col)] = C64::from((n as f64).sqrt());
        }
    }
    op
}

pub fn creation(space: SpaceSpec) -> ComplexOperator {
    annihilation(space).dagger()
}

/// `a†a`, built directly as a diagonal.
pub fn number(space: SpaceSpec) -> ComplexOperator {
    let diag = DVector::from_iterator(
        space.dim(),
        space.photon_numbers().into_iter().map(|n| C64::from(n as f64)),
    );
    ComplexOperator {
        space,
        matrix: DMatrix::from_diagonal(&diag),
    }
}

/// `|i⟩⟨j|` on the atom, identity on the field.
pub fn atom_op(space: SpaceSpec, i: usize, j: usize) -> Result<ComplexOperator> {
    let levels = space.atom_levels();
    if i >= levels || j >= levels {
        return Err(Error::invalid(format!(
            "atom operator |{i}><{j}| out of range for {levels} levels"
        )));
    }
    let mut op = ComplexOperator::zeros(space);
    for n in 0..=space.photon_cutoff() {
        op.matrix[(space.index(i, n), space.index(j, n))] = C64::from(1.0);
    }
    Ok(op)
}

/// `σz = |2⟩⟨2| − |1⟩⟨1|`.
pub fn sigma_z(space: SpaceSpec) -> ComplexOperator {
    let up = atom_op(space, EXCITED, EXCITED).expect("levels 0/1 always exist");
    let down = atom_op(space, GROUND, GROUND).expect("levels 0/1 always exist");
    &up - &down
}

/// `σ+ = |2⟩⟨1|`.
pub fn sigma_plus(space: SpaceSpec) -> ComplexOperator {
    atom_op(space, EXCITED, GROUND).expect("levels 0/1 always exist")
}

/// `σ− = |1⟩⟨2|`.
pub fn sigma_minus(space: SpaceSpec) -> ComplexOperator {
    atom_op(space, GROUND, EXCITED).expect("levels 0/1 always exist")
}

/// `exp(−iφ a†a)`, exponentiated entrywise on the diagonal.
pub fn phase_shift(space: SpaceSpec, phi: f64) -> ComplexOperator {
    let diag = DVector::from_iterator(
        space.dim(),
        space
            .photon_numbers()
            .into_iter()
            .map(|n| C64::from_polar(1.0, -phi * n as f64)),
    );
    ComplexOperator {
        space,
        matrix: DMatrix::from_diagonal(&diag),
    }
}

pub fn tensor_basis_state(space: SpaceSpec, level: usize, n: usize) -> Result<StateVector> {
    let idx = space.checked_index(level, n)?;
    let mut amplitudes = DVector::zeros(space.dim());
    amplitudes[idx] = C64::from(1.0);
    Ok(StateVector {
        space,
        amplitudes,
        normalization: Normalization::Unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn space_rejects_bad_shapes() {
        assert!(SpaceSpec::new(4, 3).is_err());
        assert!(SpaceSpec::new(1, 3).is_err());
        assert!(SpaceSpec::new(2, 0).is_err());
        let s = SpaceSpec::three_level(4).unwrap();
        assert_eq!(s.dim(), 15);
        assert_eq!(s.label(s.index(2, 3)), (2, 3));
    }

    #[test]
    fn annihilation_single_photon() {
        let s = SpaceSpec::two_level(1).unwrap();
        let a = annihilation(s);
        for level in 0..2 {
            for r in 0..2 {
                for c in 0..2 {
                    let expect = if (r, c) == (0, 1) { 1.0 } else { 0.0 };
                    assert!(close(a.element((level, r), (level, c)), C64::from(expect)));
                }
            }
        }
        // no cross-level entries
        assert_eq!(a.element((0, 0), (1, 1)), C64::from(0.0));
    }

    #[test]
    fn number_operator_eigencheck() {
        let s = SpaceSpec::two_level(5).unwrap();
        let a = annihilation(s);
        let n_op = &creation(s) * &a;
        let v = tensor_basis_state(s, GROUND, 3).unwrap();
        let nv = n_op.apply(&v);
        let diff = nv.amplitudes() - v.amplitudes() * C64::from(3.0);
        assert!(diff.norm() < 1e-14);
        assert!(n_op.max_abs_diff(&number(s)) < 1e-14);
    }

    #[test]
    fn double_annihilation_element() {
        let s = SpaceSpec::two_level(4).unwrap();
        let a2 = annihilation(s).pow(2);
        let v = a2.element((EXCITED, 2), (EXCITED, 4));
        // sqrt(4) * sqrt(3), composed by hand
        assert!((v.re - 12f64.sqrt()).abs() < 1e-14);
        assert!((v.re - 3.4641016151377544).abs() < 1e-12);
    }

    #[test]
    fn sigma_z_spectrum() {
        let s = SpaceSpec::two_level(3).unwrap();
        let sz = sigma_z(s);
        for n in 0..=3 {
            assert_eq!(sz.element((EXCITED, n), (EXCITED, n)), C64::from(1.0));
            assert_eq!(sz.element((GROUND, n), (GROUND, n)), C64::from(-1.0));
        }
        assert!(sz.is_hermitian(0.0));
    }

    #[test]
    fn raising_lowering_projector() {
        let s = SpaceSpec::two_level(2).unwrap();
        let p = &sigma_plus(s) * &sigma_minus(s);
        assert_eq!(p, atom_op(s, EXCITED, EXCITED).unwrap());
    }

    #[test]
    fn raising_times_annihilation_on_basis_state() {
        let s = SpaceSpec::two_level(3).unwrap();
        let op = &sigma_plus(s) * &annihilation(s);
        let out = op.apply(&tensor_basis_state(s, GROUND, 3).unwrap());
        let expect = tensor_basis_state(s, EXCITED, 2).unwrap();
        let diff = out.amplitudes() - expect.amplitudes() * C64::from(3f64.sqrt());
        assert!(diff.norm() < 1e-14);
    }

    #[test]
    fn atom_op_range_checked() {
        let s = SpaceSpec::two_level(2).unwrap();
        assert!(atom_op(s, 2, 0).is_err());
        assert!(atom_op(SpaceSpec::three_level(2).unwrap(), 2, 0).is_ok());
    }

    #[test]
    fn basis_states() {
        let s = SpaceSpec::two_level(2).unwrap();
        let v = tensor_basis_state(s, 1, 0).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert_eq!(v.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let a = tensor_basis_state(s, EXCITED, 1).unwrap();
        let b = tensor_basis_state(s, GROUND, 1).unwrap();
        assert_eq!(a.inner(&b), C64::from(0.0));
        assert_eq!(a.inner(&a), C64::from(1.0));
        assert!(tensor_basis_state(s, 0, 3).is_err());
        assert!(tensor_basis_state(s, 2, 0).is_err());
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let s = SpaceSpec::two_level(6).unwrap();
        let comm = annihilation(s).commutator(&creation(s));
        for level in 0..2 {
            for r in 0..6 {
                for c in 0..6 {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!(close(comm.element((level, r), (level, c)), C64::from(expect)));
                }
            }
        }
        // the cutoff row carries -n_max instead of 1
        assert!(close(comm.element((0, 6), (0, 6)), C64::from(-6.0)));
    }

    #[test]
    fn projector_algebra() {
        let s = SpaceSpec::three_level(2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let prod = &atom_op(s, i, j).unwrap() * &atom_op(s, k, l).unwrap();
                        let expect = if j == k {
                            atom_op(s, i, l).unwrap()
                        } else {
                            ComplexOperator::zeros(s)
                        };
                        assert_eq!(prod, expect);
                    }
                }
            }
        }
    }

    #[test]
    fn atom_and_field_generators_commute() {
        let s = SpaceSpec::three_level(3).unwrap();
        let field = [annihilation(s), creation(s), number(s)];
        for i in 0..3 {
            for j in 0..3 {
                let atom = atom_op(s, i, j).unwrap();
                for f in &field {
                    assert!(atom.commutator(f).matrix().norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn phase_shift_is_diagonal_unitary() {
        let s = SpaceSpec::two_level(3).unwrap();
        let u = phase_shift(s, 0.37);
        let prod = &u * &u.dagger();
        assert!(prod.max_abs_diff(&ComplexOperator::identity(s)) < 1e-15);
        let z = u.element((GROUND, 2), (GROUND, 2));
        assert!(close(z, C64::from_polar(1.0, -0.74)));
    }
}
