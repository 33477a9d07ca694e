//! Dense complex operators over [`LabeledSpace`]s.
//!
//! Matrix indices follow the mixed-radix convention documented in
//! [`crate::space`]. All operations return new values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::space::LabeledSpace;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const EIGEN_TOL: f64 = 1e-9;
pub const UNITARY_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A square complex matrix acting on a labeled space.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    space: LabeledSpace,
    entries: CMatrix,
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: ComplexOperator,
}

impl ComplexOperator {
    pub fn new(space: LabeledSpace, entries: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(LabError::DimensionMismatch(format!(
                "space {space} needs a {dim}x{dim} matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { space, entries })
    }

    pub fn from_fn(space: LabeledSpace, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let dim = space.dim();
        Self { space, entries: CMatrix::from_fn(dim, dim, f) }
    }

    pub fn zeros(space: LabeledSpace) -> Self {
        let dim = space.dim();
        Self { space, entries: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(space: LabeledSpace) -> Self {
        let dim = space.dim();
        Self { space, entries: CMatrix::identity(dim, dim) }
    }

    pub fn diagonal(space: LabeledSpace, diag: &[Complex64]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(LabError::DimensionMismatch(format!(
                "diagonal of length {} for space of dimension {}",
                diag.len(),
                space.dim()
            )));
        }
        Ok(Self::from_fn(space, |i, j| if i == j { diag[i] } else { ZERO }))
    }

    pub fn real_diagonal(space: LabeledSpace, diag: &[f64]) -> Result<Self> {
        let diag: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(space, &diag)
    }

    /// `|v⟩⟨v|` (no normalization is applied).
    pub fn outer(space: LabeledSpace, v: &[Complex64]) -> Result<Self> {
        Self::outer2(space, v, v)
    }

    /// `|u⟩⟨v|`.
    pub fn outer2(space: LabeledSpace, u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        let dim = space.dim();
        if u.len() != dim || v.len() != dim {
            return Err(LabError::DimensionMismatch(format!(
                "vectors of length {}/{} for space of dimension {dim}",
                u.len(),
                v.len()
            )));
        }
        Ok(Self::from_fn(space, |i, j| u[i] * v[j].conj()))
    }

    /// Permutation operator sending basis index `j` to `perm[j]`.
    pub fn permutation(space: LabeledSpace, perm: &[usize]) -> Result<Self> {
        let dim = space.dim();
        if perm.len() != dim {
            return Err(LabError::DimensionMismatch(format!(
                "permutation of length {} for space of dimension {dim}",
                perm.len()
            )));
        }
        let mut seen = vec![false; dim];
        for &p in perm {
            if p >= dim || std::mem::replace(&mut seen[p], true) {
                return Err(LabError::InvalidState("not a bijection".into()));
            }
        }
        let mut entries = CMatrix::zeros(dim, dim);
        for (j, &p) in perm.iter().enumerate() {
            entries[(p, j)] = ONE;
        }
        Ok(Self { space, entries })
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Same entries, relabeled onto a space of identical joint dimension.
    pub fn with_space(self, space: LabeledSpace) -> Result<Self> {
        Self::new(space, self.entries)
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(LabError::SpaceMismatch(format!("{} vs {}", self.space, other.space)));
        }
        Ok(())
    }

    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), entries: &self.entries * &rhs.entries })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), entries: &self.entries + &rhs.entries })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), entries: &self.entries - &rhs.entries })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { space: self.space.clone(), entries: &self.entries * factor }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// `[self, rhs] = self·rhs − rhs·self`.
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        let entries = &self.entries * &rhs.entries - &rhs.entries * &self.entries;
        Ok(Self { space: self.space.clone(), entries })
    }

    /// `U·self·U†`.
    pub fn conjugate_by(&self, unitary: &Self) -> Result<Self> {
        self.same_space(unitary)?;
        let entries = &unitary.entries * &self.entries * unitary.entries.adjoint();
        Ok(Self { space: self.space.clone(), entries })
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance to another operator on the same space.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), entries: self.entries.adjoint() }
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.dim();
        let product = self.entries.adjoint() * &self.entries;
        (product - CMatrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(LabError::NotUnitary { deviation });
        }
        Ok(())
    }

    /// `Tr(self† · other)`.
    pub fn hilbert_schmidt_inner(&self, other: &Self) -> Result<Complex64> {
        self.same_space(other)?;
        Ok(self.entries.iter().zip(other.entries.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// Kronecker product; the result space lists `self`'s labels first.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        let space = self.space.concat(&other.space)?;
        Ok(Self { space, entries: self.entries.kronecker(&other.entries) })
    }

    /// Sums out every label not in `keep`. The kept labels stay in this
    /// operator's subsystem order regardless of the order of `keep`.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        let space = self.space.restrict(keep)?;
        let (kept_dim, rest_dim, table) = self.space.split_table(keep)?;
        let mut entries = CMatrix::zeros(kept_dim, kept_dim);
        for r in 0..rest_dim {
            for a in 0..kept_dim {
                let row = table[a][r];
                for b in 0..kept_dim {
                    entries[(a, b)] += self.entries[(row, table[b][r])];
                }
            }
        }
        Ok(Self { space, entries })
    }

    /// Extends this operator by the identity to a larger space that contains
    /// all of its labels (with matching dimensions, in any order).
    pub fn embed(&self, full: &LabeledSpace) -> Result<Self> {
        if &self.space == full {
            return Ok(self.clone());
        }
        let labels: Vec<&str> = self.space.labels().collect();
        for sub in self.space.subsystems() {
            let dim = full.dim_of(&sub.label)?;
            if dim != sub.dim {
                return Err(LabError::DimensionMismatch(format!(
                    "label '{}' has dimension {} here but {} in the target space",
                    sub.label, sub.dim, dim
                )));
            }
        }
        // Align to the target's label order before spreading.
        let ordered = full.restrict(&labels)?;
        let local = self.reorder(&ordered)?;
        let (kept_dim, rest_dim, table) = full.split_table(&labels)?;
        let mut entries = CMatrix::zeros(full.dim(), full.dim());
        for r in 0..rest_dim {
            for a in 0..kept_dim {
                for b in 0..kept_dim {
                    entries[(table[a][r], table[b][r])] = local.entries[(a, b)];
                }
            }
        }
        Ok(Self { space: full.clone(), entries })
    }

    /// Re-expresses the operator on a space holding the same subsystems in a
    /// different order.
    pub fn reorder(&self, target: &LabeledSpace) -> Result<Self> {
        if &self.space == target {
            return Ok(self.clone());
        }
        if target.len() != self.space.len() {
            return Err(LabError::SpaceMismatch(format!("{} vs {}", self.space, target)));
        }
        // positions[k] = position in self.space of target's k-th subsystem
        let mut positions = Vec::with_capacity(target.len());
        for sub in target.subsystems() {
            let pos = self.space.index_of(&sub.label)?;
            if self.space.subsystems()[pos].dim != sub.dim {
                return Err(LabError::DimensionMismatch(format!("label '{}'", sub.label)));
            }
            positions.push(pos);
        }
        let dim = target.dim();
        let map: Vec<usize> = (0..dim)
            .map(|t| {
                let digits = target.digits(t);
                let mut source = vec![0; digits.len()];
                for (k, &pos) in positions.iter().enumerate() {
                    source[pos] = digits[k];
                }
                self.space.join(&source)
            })
            .collect();
        let entries = CMatrix::from_fn(dim, dim, |i, j| self.entries[(map[i], map[j])]);
        Ok(Self { space: target.clone(), entries })
    }

    /// Eigen-decomposition of a Hermitian operator, eigenvalues descending.
    pub fn hermitian_eigensystem(&self) -> Result<Eigensystem> {
        let deviation = self.hermitian_deviation();
        if deviation.is_nan() || deviation > HERMITIAN_TOL {
            return Err(LabError::NotHermitian { deviation });
        }
        // Symmetrize so the solver sees an exactly Hermitian matrix.
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let dim = self.dim();
        let (values, vectors) = blockwise_eigen(&herm);

        let lambda = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                ZERO
            }
        });
        let residual = (&vectors * lambda * vectors.adjoint() - &herm)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual.is_nan() || residual > EIGEN_TOL * dim as f64 {
            return Err(LabError::InvariantViolation(format!(
                "eigen-decomposition residual {residual:.3e} exceeds tolerance"
            )));
        }
        Ok(Eigensystem { values, vectors: Self { space: self.space.clone(), entries: vectors } })
    }

    /// Applies `f` to the eigenvalues of a Hermitian operator.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eig = self.hermitian_eigensystem()?;
        let v = eig.vectors.matrix();
        let dim = self.dim();
        let mapped = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(f(eig.values[i]), 0.0)
            } else {
                ZERO
            }
        });
        Ok(Self { space: self.space.clone(), entries: v * mapped * v.adjoint() })
    }

    /// Matrix–vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(LabError::DimensionMismatch(format!(
                "vector of length {} for operator of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok((0..self.dim()).map(|i| (0..self.dim()).map(|j| self.entries[(i, j)] * v[j]).sum()).collect())
    }
}

/// Kronecker product.
pub fn tensor_product(a: &ComplexOperator, b: &ComplexOperator) -> Result<ComplexOperator> {
    a.tensor_product(b)
}

/// Partial trace keeping `keep`.
pub fn partial_trace(op: &ComplexOperator, keep: &[&str]) -> Result<ComplexOperator> {
    op.partial_trace(keep)
}

pub fn adjoint(op: &ComplexOperator) -> ComplexOperator {
    op.adjoint()
}

/// Splits `herm` into the connected components of its nonzero pattern and
/// diagonalizes each one; nalgebra's tridiagonal QR can return NaN on
/// matrices with exactly zero rows, which density operators often have.
fn blockwise_eigen(herm: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = herm.nrows();
    let mut component = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        if component[root] != usize::MAX {
            continue;
        }
        component[root] = blocks.len();
        let mut members = vec![root];
        let mut next = 0;
        while next < members.len() {
            let i = members[next];
            next += 1;
            for j in 0..n {
                if component[j] == usize::MAX && herm[(i, j)] != ZERO {
                    component[j] = blocks.len();
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }

    let mut pairs: Vec<(f64, DVector<Complex64>)> = Vec::with_capacity(n);
    for block in &blocks {
        let sub = CMatrix::from_fn(block.len(), block.len(), |i, j| herm[(block[i], block[j])]);
        let (values, vectors) = if block.len() == 1 {
            (vec![sub[(0, 0)].re], CMatrix::identity(1, 1))
        } else {
            let eig = sub.clone().symmetric_eigen();
            let finite = eig.eigenvalues.iter().all(|v| v.is_finite())
                && eig.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            if finite {
                (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
            } else {
                real_embedding_eigen(&sub)
            }
        };
        for (k, value) in values.into_iter().enumerate() {
            let mut full = DVector::from_element(n, ZERO);
            for (r, &row) in block.iter().enumerate() {
                full[row] = vectors[(r, k)];
            }
            pairs.push((value, full));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let columns: Vec<DVector<Complex64>> = pairs.into_iter().map(|p| p.1).collect();
    (values, CMatrix::from_columns(&columns))
}

/// Eigenpairs of a Hermitian `H = X + iY` from the real symmetric matrix
/// `[[X, -Y], [Y, X]]`, whose spectrum is that of `H` with every value doubled.
fn real_embedding_eigen(herm: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = herm.nrows();
    let big = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = herm[(i % n, j % n)];
        match (i / n, j / n) {
            (0, 1) => -z.im,
            (1, 0) => z.im,
            _ => z.re,
        }
    });
    let eig = big.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let cluster_gap = 1e-8 * scale;

    let mut values = Vec::with_capacity(n);
    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < 2 * n && columns.len() < n {
        let mut end = start + 1;
        while end < 2 * n && eig.eigenvalues[order[end - 1]] - eig.eigenvalues[order[end]] <= cluster_gap {
            end += 1;
        }
        // Each complex eigenvector appears twice, as (x, y) and (-y, x).
        let need = (end - start).div_ceil(2).min(n - columns.len());
        let mut candidates: Vec<(f64, DVector<Complex64>)> = order[start..end]
            .iter()
            .map(|&k| {
                let col = eig.eigenvectors.column(k);
                (eig.eigenvalues[k], DVector::from_fn(n, |r, _| Complex64::new(col[r], col[r + n])))
            })
            .collect();
        for (_, v) in candidates.iter_mut() {
            for u in &columns {
                let proj = u.dotc(v);
                *v -= u * proj;
            }
        }
        for _ in 0..need {
            let (best, _) = candidates
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.norm().total_cmp(&b.1 .1.norm()))
                .expect("cluster is nonempty");
            let (value, v) = candidates.swap_remove(best);
            let u = &v / Complex64::new(v.norm(), 0.0);
            for (_, w) in candidates.iter_mut() {
                let proj = u.dotc(w);
                *w -= &u * proj;
            }
            values.push(value);
            columns.push(u);
        }
        start = end;
    }
    (values, CMatrix::from_columns(&columns))
}

pub fn hermitian_eigensystem(op: &ComplexOperator) -> Result<Eigensystem> {
    op.hermitian_eigensystem()
}

pub fn is_unitary(op: &ComplexOperator, tol: f64) -> bool {
    op.is_unitary(tol)
}

pub fn hilbert_schmidt_inner(a: &ComplexOperator, b: &ComplexOperator) -> Result<Complex64> {
    a.hilbert_schmidt_inner(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn qubit(label: &str) -> LabeledSpace {
        LabeledSpace::single(label, 2).unwrap()
    }

    fn pauli_x(label: &str) -> ComplexOperator {
        ComplexOperator::permutation(qubit(label), &[1, 0]).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        let i = ComplexOperator::identity(qubit("a"));
        let j = ComplexOperator::identity(qubit("b"));
        let k = i.tensor_product(&j).unwrap();
        assert_eq!(k.matrix(), &CMatrix::identity(4, 4));
        assert_eq!(k.space().labels().collect::<Vec<_>>(), vec!["a", "b"]);
    }

    #[test]
    fn x_on_leftmost_flips_most_significant_digit() {
        let op = pauli_x("a").tensor_product(&ComplexOperator::identity(qubit("b"))).unwrap();
        let out = op.apply(&[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(out, vec![c(0.0), c(0.0), c(1.0), c(0.0)]);
    }

    #[test]
    fn diagonal_kronecker() {
        let a = ComplexOperator::real_diagonal(qubit("a"), &[1.0, 2.0]).unwrap();
        let b = ComplexOperator::real_diagonal(qubit("b"), &[3.0, 4.0]).unwrap();
        let k = a.tensor_product(&b).unwrap();
        let expected = ComplexOperator::real_diagonal(k.space().clone(), &[3.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn overlapping_labels_collide() {
        let a = ComplexOperator::identity(qubit("a"));
        assert_eq!(a.tensor_product(&a).unwrap_err(), LabError::LabelCollision("a".into()));
    }

    #[test]
    fn partial_trace_of_bell_projector_is_maximally_mixed() {
        let space = LabeledSpace::new([("S", 2), ("A", 2)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexOperator::outer(space, &[c(h), c(0.0), c(0.0), c(h)]).unwrap();
        let rho = bell.partial_trace(&["S"]).unwrap();
        let half = ComplexOperator::real_diagonal(qubit("S"), &[0.5, 0.5]).unwrap();
        assert!(rho.distance(&half).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_unknown_label() {
        let op = ComplexOperator::identity(qubit("S"));
        assert_eq!(op.partial_trace(&["Q"]).unwrap_err(), LabError::LabelNotFound("Q".into()));
    }

    #[test]
    fn adjoint_identity_and_involution() {
        let i = ComplexOperator::identity(qubit("S"));
        assert_eq!(i.adjoint(), i);
        let u = ComplexOperator::from_fn(qubit("S"), |i, j| Complex64::new(i as f64, j as f64 + 0.5));
        assert_eq!(u.adjoint().adjoint(), u);
    }

    #[test]
    fn eigensystem_sorted_descending() {
        let d = ComplexOperator::real_diagonal(qubit("S"), &[0.25, 0.75]).unwrap();
        let eig = d.hermitian_eigensystem().unwrap();
        assert!((eig.values[0] - 0.75).abs() < 1e-14);
        assert!((eig.values[1] - 0.25).abs() < 1e-14);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = ComplexOperator::outer(qubit("S"), &[c(h), c(h)]).unwrap();
        let eig = p.hermitian_eigensystem().unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!(eig.values[1].abs() < 1e-14);
    }

    fn reconstruct(values: &[f64], vectors: &CMatrix) -> CMatrix {
        let n = values.len();
        let lambda = CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { ZERO });
        vectors * lambda * vectors.adjoint()
    }

    #[test]
    fn real_embedding_handles_complex_degeneracy() {
        // diag(2, 2, -1) rotated by a complex unitary.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = CMatrix::from_row_slice(
            3,
            3,
            &[c(h), Complex64::new(0.0, h), ZERO, Complex64::new(0.0, h), c(h), ZERO, ZERO, ZERO, c(1.0)],
        );
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0), c(-1.0), c(2.0)]));
        let herm = &u * d * u.adjoint();
        let (values, vectors) = real_embedding_eigen(&herm);
        assert_eq!(values.len(), 3);
        for (got, want) in values.iter().zip([2.0, 2.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((&vectors.adjoint() * &vectors - CMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((reconstruct(&values, &vectors) - herm).norm() < 1e-12);
    }

    #[test]
    fn sparse_rank_deficient_matrix() {
        // Rank one with most rows exactly zero, the shape of a copied record state.
        let n = 27;
        let v: Vec<Complex64> =
            (0..n).map(|i| if i % 13 == 0 { Complex64::new(0.3 + i as f64 * 0.01, 0.2) } else { ZERO }).collect();
        let herm = CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
        let (values, vectors) = blockwise_eigen(&herm);
        assert!(values.iter().all(|x| x.is_finite()));
        assert!((reconstruct(&values, &vectors) - &herm).norm() < 1e-12);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((values[0] - norm).abs() < 1e-12);
    }

    #[test]
    fn eigensystem_rejects_non_hermitian() {
        let op = ComplexOperator::from_fn(qubit("S"), |i, j| c((2 * i + j) as f64));
        assert!(matches!(op.hermitian_eigensystem(), Err(LabError::NotHermitian { .. })));
    }

    #[test]
    fn unitarity_checks() {
        let space = LabeledSpace::new([("S", 2), ("A", 2)]).unwrap();
        assert!(ComplexOperator::identity(space).is_unitary(1e-10));
        let d = ComplexOperator::real_diagonal(qubit("S"), &[1.0, 0.5]).unwrap();
        assert!(!d.is_unitary(1e-10));
    }

    #[test]
    fn hilbert_schmidt_basics() {
        let i = ComplexOperator::identity(qubit("S"));
        assert_eq!(i.hilbert_schmidt_inner(&i).unwrap(), c(2.0));
        let p = ComplexOperator::real_diagonal(qubit("S"), &[1.0, 0.0]).unwrap();
        let q = ComplexOperator::real_diagonal(qubit("S"), &[0.0, 1.0]).unwrap();
        assert_eq!(p.hilbert_schmidt_inner(&q).unwrap(), c(0.0));
        assert!(p.hilbert_schmidt_inner(&ComplexOperator::identity(qubit("T"))).is_err());
    }

    #[test]
    fn embed_matches_explicit_kronecker() {
        let x = pauli_x("A");
        let full = LabeledSpace::new([("S", 2), ("A", 2), ("D", 3)]).unwrap();
        let embedded = x.embed(&full).unwrap();
        let explicit = ComplexOperator::identity(qubit("S"))
            .tensor_product(&x)
            .unwrap()
            .tensor_product(&ComplexOperator::identity(LabeledSpace::single("D", 3).unwrap()))
            .unwrap();
        assert_eq!(embedded, explicit);
    }

    #[test]
    fn reorder_swaps_factors() {
        let a = ComplexOperator::real_diagonal(qubit("a"), &[1.0, 2.0]).unwrap();
        let b = ComplexOperator::real_diagonal(LabeledSpace::single("b", 3).unwrap(), &[3.0, 4.0, 5.0]).unwrap();
        let ab = a.tensor_product(&b).unwrap();
        let ba = b.tensor_product(&a).unwrap();
        assert_eq!(ab.reorder(ba.space()).unwrap(), ba);
    }
}
