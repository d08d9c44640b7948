//! Dense complex linear algebra over small tensor-product spaces.
//!
//! Layout is row-major over subsystems with the last subsystem index varying
//! fastest: for dims `[dA, dB]` the amplitude of `|i⟩_A|j⟩_B` sits at flat
//! index `i * dB + j`. Every space in this crate is at most a few hundred
//! dimensional, so everything is a plain dense matrix.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result, TOL};

pub type C64 = Complex<f64>;

/// Tolerance for accepting user-supplied basis vectors as orthonormal.
pub const BASIS_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDims);
    }
    Ok(dims.iter().product())
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a C64>) -> Result<()> {
    if values.into_iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Flat index of a multi-index under the row-major layout.
pub fn flat_index(dims: &[usize], index: &[usize]) -> Result<usize> {
    if index.len() != dims.len() {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            found: index.len(),
        });
    }
    let mut flat = 0;
    for (&i, &d) in index.iter().zip(dims) {
        if i >= d {
            return Err(Error::OutcomeOutOfRange { outcome: i, size: d });
        }
        flat = flat * d + i;
    }
    Ok(flat)
}

/// Inverse of [`flat_index`].
pub fn multi_index(dims: &[usize], mut flat: usize) -> Vec<usize> {
    let mut index = vec![0; dims.len()];
    for (slot, &d) in dims.iter().enumerate().rev() {
        index[slot] = flat % d;
        flat /= d;
    }
    index
}

/// A vector over a tensor-product space with no normalization constraint.
///
/// This is what operators produce: `P|ψ⟩` is generally shorter than `|ψ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    dims: Vec<usize>,
    amps: DVector<C64>,
}

impl Ket {
    pub fn new(dims: &[usize], amps: Vec<C64>) -> Result<Self> {
        let len = check_dims(dims)?;
        if amps.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: amps.len(),
            });
        }
        check_finite(&amps)?;
        Ok(Self {
            dims: dims.to_vec(),
            amps: DVector::from_vec(amps),
        })
    }

    pub(crate) fn from_parts(dims: Vec<usize>, amps: DVector<C64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), amps.len());
        Self { dims, amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub(crate) fn vector(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn scale(&self, factor: C64) -> Ket {
        Ket::from_parts(self.dims.clone(), self.amps.map(|z| z * factor))
    }

    pub fn add(&self, other: &Ket) -> Result<Ket> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Ket::from_parts(self.dims.clone(), &self.amps + &other.amps))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Ket) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Reorders subsystems: slot `j` of the result is slot `order[j]` of `self`.
    pub fn permute_slots(&self, order: &[usize]) -> Result<Ket> {
        let n = self.dims.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&o| o >= n || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::InvalidDims);
        }
        let new_dims: Vec<usize> = order.iter().map(|&o| self.dims[o]).collect();
        let mut amps = DVector::<C64>::zeros(self.len());
        for (flat, z) in self.amps.iter().enumerate() {
            let old = multi_index(&self.dims, flat);
            let new: Vec<usize> = order.iter().map(|&o| old[o]).collect();
            amps[flat_index(&new_dims, &new)?] = *z;
        }
        Ok(Ket::from_parts(new_dims, amps))
    }

    pub fn normalize(&self) -> Result<StateVector> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Unnormalizable);
        }
        let inv = 1.0 / norm;
        Ok(StateVector(Ket::from_parts(
            self.dims.clone(),
            self.amps.map(|z| z * inv),
        )))
    }
}

/// A unit-norm state over a tensor product of finite subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Ket);

impl StateVector {
    /// Computational basis state `|index⟩`.
    pub fn basis(dims: &[usize], index: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        let flat = flat_index(dims, index)?;
        let mut amps = vec![C64::new(0.0, 0.0); len];
        amps[flat] = C64::new(1.0, 0.0);
        Ok(Self(Ket::new(dims, amps)?))
    }

    /// Wraps the image of a unit vector under an isometry without rescaling.
    pub(crate) fn from_isometry_image(ket: Ket) -> Self {
        debug_assert!((ket.norm_sqr() - 1.0).abs() < 1e-9);
        Self(ket)
    }

    pub fn dims(&self) -> &[usize] {
        self.0.dims()
    }

    pub fn amps(&self) -> &[C64] {
        self.0.amps()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_ket(&self) -> &Ket {
        &self.0
    }

    pub fn into_ket(self) -> Ket {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn amplitude(&self, index: &[usize]) -> Result<C64> {
        Ok(self.amps()[flat_index(self.dims(), index)?])
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.0.inner(&other.0)
    }
}

/// Normalizes `raw` into a state over `dims`.
pub fn make_state(dims: &[usize], raw: &[C64]) -> Result<StateVector> {
    Ket::new(dims, raw.to_vec())?.normalize()
}

/// Like [`make_state`] for purely real amplitudes.
pub fn make_real_state(dims: &[usize], raw: &[f64]) -> Result<StateVector> {
    let amps: Vec<C64> = raw.iter().map(|&x| c(x, 0.0)).collect();
    make_state(dims, &amps)
}

/// `a ⊗ b`, with the subsystems of `b` appended after those of `a`.
pub fn tensor_state(a: &StateVector, b: &StateVector) -> StateVector {
    let dims = [a.dims(), b.dims()].concat();
    let amps = a.0.amps.kronecker(&b.0.amps);
    StateVector(Ket::from_parts(dims, amps))
}

/// Square complex matrix acting on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl LinearOperator {
    pub fn new(dims: &[usize], matrix: DMatrix<C64>) -> Result<Self> {
        let side = check_dims(dims)?;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if matrix.nrows() != side {
            return Err(Error::DimensionMismatch {
                expected: side,
                found: matrix.nrows(),
            });
        }
        check_finite(matrix.iter())?;
        Ok(Self {
            dims: dims.to_vec(),
            matrix,
        })
    }

    /// Builds a single-subsystem operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(&[dim], DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        let side = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            matrix: DMatrix::identity(side, side),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.side(),
                found: other.side(),
            });
        }
        Ok(())
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// `self ⊗ other` on the concatenated space.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            dims: [self.dims.as_slice(), other.dims.as_slice()].concat(),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// `[self, other]` = `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.matrix.adjoint();
        self.matrix
            .iter()
            .zip(adj.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(U†U − 1)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        let side = self.side();
        gram.iter()
            .enumerate()
            .map(|(k, z)| {
                let (row, col) = (k % side, k / side);
                let target = if row == col { 1.0 } else { 0.0 };
                (z - c(target, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= TOL
    }

    /// Embeds a single-subsystem operator as `1 ⊗ … ⊗ self ⊗ … ⊗ 1`.
    pub fn lift(&self, dims: &[usize], slot: usize) -> Result<Self> {
        check_dims(dims)?;
        if slot >= dims.len() {
            return Err(Error::SlotOutOfRange {
                slot,
                num_slots: dims.len(),
            });
        }
        if self.side() != dims[slot] {
            return Err(Error::DimensionMismatch {
                expected: dims[slot],
                found: self.side(),
            });
        }
        let before: usize = dims[..slot].iter().product();
        let after: usize = dims[slot + 1..].iter().product();
        let left = DMatrix::<C64>::identity(before, before);
        let right = DMatrix::<C64>::identity(after, after);
        let matrix = left.kronecker(&self.matrix).kronecker(&right);
        Ok(Self {
            dims: dims.to_vec(),
            matrix,
        })
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if ket.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.side(),
                found: ket.len(),
            });
        }
        Ok(Ket::from_parts(self.dims.clone(), &self.matrix * ket.vector()))
    }
}

/// Applies `op` to a state; the result is generally unnormalized.
pub fn apply(op: &LinearOperator, s: &StateVector) -> Result<Ket> {
    op.apply(s.as_ket())
}

/// Hermitian idempotent operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(LinearOperator);

impl Projector {
    pub fn new(op: LinearOperator) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > TOL {
            return Err(Error::NotProjector(format!(
                "hermiticity defect {herm:e}"
            )));
        }
        let squared = op.compose(&op)?;
        let idem = squared.max_abs_diff(&op)?;
        if idem > TOL {
            return Err(Error::NotProjector(format!(
                "idempotence defect {idem:e}"
            )));
        }
        Ok(Self(op))
    }

    /// `|v⟩⟨v|` for the normalized direction of `v`.
    pub fn rank_one(v: &[C64]) -> Result<Self> {
        let unit = Ket::new(&[v.len()], v.to_vec())?.normalize()?;
        let col = unit.as_ket().vector();
        let op = LinearOperator::new(&[v.len()], col * col.adjoint())?;
        Self::new(op)
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        Ok(Self(LinearOperator::identity(dims)?))
    }

    pub fn dims(&self) -> &[usize] {
        self.0.dims()
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.0
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        self.0.apply(ket)
    }
}

/// Lifts a single-subsystem projector onto slot `slot` of `dims`.
pub fn lift(p: &Projector, dims: &[usize], slot: usize) -> Result<Projector> {
    // Kronecker products with identities stay Hermitian and idempotent exactly.
    Ok(Projector(p.0.lift(dims, slot)?))
}

/// Complete family of mutually orthogonal projectors on one space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveFamily {
    projectors: Vec<Projector>,
}

impl ProjectiveFamily {
    pub fn new(projectors: Vec<Projector>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::NotFamily("empty family".into()))?;
        let dims = first.dims().to_vec();
        if let Some(p) = projectors.iter().find(|p| p.dims() != dims.as_slice()) {
            return Err(Error::NotFamily(format!(
                "mixed dims {:?} and {:?}",
                dims,
                p.dims()
            )));
        }
        for (i, p) in projectors.iter().enumerate() {
            for q in &projectors[i + 1..] {
                let overlap = p.0.compose(&q.0)?.max_abs();
                if overlap > TOL {
                    return Err(Error::NotFamily(format!(
                        "projectors not orthogonal (overlap {overlap:e})"
                    )));
                }
            }
        }
        let mut sum = DMatrix::<C64>::zeros(first.0.side(), first.0.side());
        for p in &projectors {
            sum += p.0.matrix();
        }
        let sum = LinearOperator::new(&dims, sum)?;
        let defect = sum.max_abs_diff(&LinearOperator::identity(&dims)?)?;
        if defect > TOL {
            return Err(Error::NotFamily(format!(
                "projectors do not sum to identity (defect {defect:e})"
            )));
        }
        Ok(Self { projectors })
    }

    /// Projectors onto the computational basis of a `dim`-level system.
    pub fn computational(dim: usize) -> Result<Self> {
        let vectors: Vec<Vec<C64>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        family_from_basis(&vectors)
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        self.projectors[0].dims()
    }

    /// Dimension of the space the family acts on.
    pub fn dim(&self) -> usize {
        self.projectors[0].0.side()
    }

    pub fn get(&self, outcome: usize) -> Option<&Projector> {
        self.projectors.get(outcome)
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }
}

/// One rank-1 projector per basis vector.
///
/// The vectors must be orthonormal within [`BASIS_TOL`]; they are then
/// re-orthonormalized so the family invariants hold at [`TOL`].
pub fn family_from_basis(vectors: &[Vec<C64>]) -> Result<ProjectiveFamily> {
    let dim = vectors.len();
    if dim == 0 {
        return Err(Error::NotOrthonormal("empty basis".into()));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::NotOrthonormal(format!(
            "{dim} vectors of length {} do not form a basis",
            v.len()
        )));
    }
    let cols: Vec<DVector<C64>> = vectors
        .iter()
        .map(|v| {
            check_finite(v)?;
            Ok(DVector::from_column_slice(v))
        })
        .collect::<Result<_>>()?;
    for i in 0..dim {
        for j in i..dim {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (cols[i].dotc(&cols[j]) - c(target, 0.0)).norm();
            if dev > BASIS_TOL {
                return Err(Error::NotOrthonormal(format!(
                    "<v{i}|v{j}> deviates by {dev:e}"
                )));
            }
        }
    }
    // Modified Gram-Schmidt
    let mut ortho: Vec<DVector<C64>> = Vec::with_capacity(dim);
    for col in cols {
        let mut v = col;
        for u in &ortho {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        ortho.push(v / c(norm, 0.0));
    }
    let projectors = ortho
        .iter()
        .map(|v| Projector::new(LinearOperator::new(&[dim], v * v.adjoint())?))
        .collect::<Result<Vec<_>>>()?;
    ProjectiveFamily::new(projectors)
}
