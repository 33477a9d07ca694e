//! Density operators, pure-state amplitudes and orthonormal bases.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{LabError, Result};
use crate::operator::{ComplexOperator, ZERO};
use crate::space::LabeledSpace;

/// Eigenvalues in `[-NEG_CLIP, 0)` are treated as zero; anything lower is an error.
pub const NEG_CLIP: f64 = 1e-12;
pub const STATE_TOL: f64 = 1e-10;
/// Fidelity at or above `1 - REVERSAL_TOL` counts as an exact restoration.
pub const REVERSAL_TOL: f64 = 1e-9;

/// A density operator, optionally carrying the amplitude vector it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    rho: ComplexOperator,
    amplitudes: Option<Vec<Complex64>>,
}

impl QuantumState {
    /// Validates Hermiticity, unit trace and positivity (with clipping).
    pub fn from_density(rho: ComplexOperator) -> Result<Self> {
        let deviation = rho.hermitian_deviation();
        if deviation > STATE_TOL {
            return Err(LabError::InvalidState(format!("not Hermitian (deviation {deviation:.3e})")));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(LabError::InvalidState(format!("trace {trace} is not 1")));
        }
        let eig = rho.hermitian_eigensystem()?;
        if let Some(min) = eig.values.last() {
            if *min < -NEG_CLIP {
                return Err(LabError::InvalidState(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(Self { rho, amplitudes: None })
    }

    /// Wraps an operator produced by trusted internal arithmetic; checks only
    /// the cheap invariants.
    pub(crate) fn from_density_unchecked(rho: ComplexOperator) -> Result<Self> {
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || rho.hermitian_deviation() > STATE_TOL {
            return Err(LabError::InvariantViolation(format!(
                "derived state lost normalization or Hermiticity (trace {trace})"
            )));
        }
        Ok(Self { rho, amplitudes: None })
    }

    pub fn space(&self) -> &LabeledSpace {
        self.rho.space()
    }

    pub fn density(&self) -> &ComplexOperator {
        &self.rho
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        self.amplitudes.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.matrix().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues with the small-negative clip applied, descending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let eig = self.rho.hermitian_eigensystem()?;
        eig.values
            .into_iter()
            .map(|v| {
                if v >= 0.0 {
                    Ok(v)
                } else if v >= -NEG_CLIP {
                    Ok(0.0)
                } else {
                    Err(LabError::InvariantViolation(format!("negative eigenvalue {v:.3e}")))
                }
            })
            .collect()
    }

    pub fn reduce(&self, keep: &[&str]) -> Result<QuantumState> {
        let rho = self.rho.partial_trace(keep)?;
        let amplitudes = match &self.amplitudes {
            // A pure state stays pure only if nothing was traced out.
            Some(a) if rho.space().len() == self.space().len() => Some(a.clone()),
            _ => None,
        };
        Ok(QuantumState { rho, amplitudes })
    }

    /// Evolution `U ρ U†`. The unitary may live on a subset of the labels.
    pub fn evolve(&self, unitary: &ComplexOperator) -> Result<QuantumState> {
        let full = unitary.embed(self.space())?;
        full.ensure_unitary()?;
        let rho = self.rho.conjugate_by(&full)?;
        let amplitudes = match &self.amplitudes {
            Some(a) => Some(full.apply(a)?),
            None => None,
        };
        Ok(QuantumState { rho, amplitudes })
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let rho = self.rho.tensor_product(&other.rho)?;
        let amplitudes = match (&self.amplitudes, &other.amplitudes) {
            (Some(a), Some(b)) => Some(a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()),
            _ => None,
        };
        Ok(QuantumState { rho, amplitudes })
    }

    /// Frobenius distance between density operators.
    pub fn distance(&self, other: &QuantumState) -> Result<f64> {
        self.rho.distance(&other.rho)
    }

    /// Expectation `Tr(ρ O)` of an operator on (a subset of) the labels.
    pub fn expectation(&self, op: &ComplexOperator) -> Result<Complex64> {
        let full = op.embed(self.space())?;
        Ok(self.rho.compose(&full)?.trace())
    }

    /// The basis state `|index⟩` of a space.
    pub fn basis(space: LabeledSpace, index: usize) -> Result<QuantumState> {
        let dim = space.dim();
        if index >= dim {
            return Err(LabError::DimensionMismatch(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        pure_from_amplitudes(space, &amps)
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(space: LabeledSpace, probabilities: &[f64]) -> Result<QuantumState> {
        check_distribution(probabilities)?;
        QuantumState::from_density(ComplexOperator::real_diagonal(space, probabilities)?)
    }

    /// The maximally mixed state.
    pub fn maximally_mixed(space: LabeledSpace) -> QuantumState {
        let dim = space.dim();
        let rho = ComplexOperator::identity(space).scale_real(1.0 / dim as f64);
        QuantumState { rho, amplitudes: None }
    }

    /// Same state with the subsystems relabeled/reordered to `target`.
    pub fn reorder(&self, target: &LabeledSpace) -> Result<QuantumState> {
        Ok(QuantumState { rho: self.rho.reorder(target)?, amplitudes: None })
    }
}

pub(crate) fn check_distribution(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(LabError::InvalidDistribution("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(LabError::InvalidDistribution(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Normalized pure state `|ψ⟩⟨ψ|` from (possibly unnormalized) amplitudes.
pub fn pure_from_amplitudes(space: LabeledSpace, amplitudes: &[Complex64]) -> Result<QuantumState> {
    if amplitudes.len() != space.dim() {
        return Err(LabError::DimensionMismatch(format!(
            "{} amplitudes for space of dimension {}",
            amplitudes.len(),
            space.dim()
        )));
    }
    if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(LabError::DegenerateInput("non-finite amplitude".into()));
    }
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(LabError::DegenerateInput("zero amplitude vector".into()));
    }
    let psi: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
    let rho = ComplexOperator::outer(space, &psi)?;
    Ok(QuantumState { rho, amplitudes: Some(psi) })
}

/// Convex combination of states on one space.
pub fn mix(states: &[QuantumState], weights: &[f64]) -> Result<QuantumState> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(LabError::InvalidDistribution(format!(
            "{} states with {} weights",
            states.len(),
            weights.len()
        )));
    }
    check_distribution(weights)?;
    let mut rho = ComplexOperator::zeros(states[0].space().clone());
    for (state, &w) in states.iter().zip(weights) {
        rho = rho.add(&state.rho.scale_real(w))?;
    }
    let amplitudes = match weights.iter().filter(|w| **w > 0.0).count() {
        1 => {
            let k = weights.iter().position(|w| *w > 0.0).unwrap_or(0);
            states[k].amplitudes.clone()
        }
        _ => None,
    };
    Ok(QuantumState { rho, amplitudes })
}

/// Uhlmann fidelity `(Tr √(√a b √a))²`, with the pure-state shortcuts.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.space() != b.space() {
        return Err(LabError::SpaceMismatch(format!("{} vs {}", a.space(), b.space())));
    }
    let value = match (pure_vector(a)?, pure_vector(b)?) {
        (Some(psi), Some(phi)) => {
            let overlap: Complex64 = psi.iter().zip(&phi).map(|(x, y)| x.conj() * y).sum();
            overlap.norm_sqr()
        }
        (Some(psi), None) => sandwich(&psi, b.density()),
        (None, Some(phi)) => sandwich(&phi, a.density()),
        (None, None) => {
            let clip = |x: f64| if x > 1e-15 { x.sqrt() } else { 0.0 };
            let root = a.density().hermitian_map(clip)?;
            let inner = root.compose(b.density())?.compose(&root)?;
            let eig = inner.hermitian_eigensystem()?;
            let s: f64 = eig.values.iter().map(|&x| clip(x)).sum();
            s * s
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

fn sandwich(psi: &[Complex64], rho: &ComplexOperator) -> f64 {
    let m = rho.matrix();
    let mut total = ZERO;
    for (i, pi) in psi.iter().enumerate() {
        for (j, pj) in psi.iter().enumerate() {
            total += pi.conj() * m[(i, j)] * pj;
        }
    }
    total.re
}

/// Amplitude vector when the state is (numerically) pure.
fn pure_vector(state: &QuantumState) -> Result<Option<Vec<Complex64>>> {
    if let Some(a) = &state.amplitudes {
        return Ok(Some(a.clone()));
    }
    if (state.purity() - 1.0).abs() > 1e-12 {
        return Ok(None);
    }
    let eig = state.rho.hermitian_eigensystem()?;
    let v = eig.vectors.matrix();
    Ok(Some((0..state.dim()).map(|i| v[(i, 0)]).collect()))
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn random_pure<R: Rng + ?Sized>(space: LabeledSpace, rng: &mut R) -> QuantumState {
    let amps = random_amplitudes(space.dim(), rng);
    pure_from_amplitudes(space, &amps).expect("gaussian vector is nonzero with probability one")
}

/// [`random_pure`] driven by a fresh generator seeded with `seed`.
pub fn random_pure_seeded(space: LabeledSpace, seed: u64) -> QuantumState {
    random_pure(space, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_amplitudes<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.into_iter().map(|a| a / norm).collect()
}

/// Random full-rank mixed state `G G† / Tr(G G†)` with a complex Ginibre `G`.
pub fn random_mixed<R: Rng + ?Sized>(space: LabeledSpace, rng: &mut R) -> QuantumState {
    let dim = space.dim();
    let g = ComplexOperator::from_fn(space, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let gg = g.compose(&g.adjoint()).expect("same space");
    let trace = gg.trace().re;
    let rho = gg.scale_real(1.0 / trace);
    // Symmetrize away rounding so the Hermiticity check is exact.
    let rho = rho.add(&rho.adjoint()).expect("same space").scale_real(0.5);
    debug_assert_eq!(rho.dim(), dim);
    QuantumState { rho, amplitudes: None }
}

/// Random probability vector (uniform on the simplex).
pub fn random_distribution<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// An orthonormal basis of one subsystem, optionally grouped into blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisFamily {
    label: String,
    vectors: Vec<Vec<Complex64>>,
    blocks: Vec<Vec<usize>>,
}

impl BasisFamily {
    /// Each vector is its own block.
    pub fn new(label: &str, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let blocks = (0..vectors.len()).map(|i| vec![i]).collect();
        Self::with_blocks(label, vectors, blocks)
    }

    pub fn with_blocks(label: &str, vectors: Vec<Vec<Complex64>>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let dim = vectors.len();
        if dim < 2 {
            return Err(LabError::InvalidSpace("a basis needs at least two vectors".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(LabError::DimensionMismatch(format!(
                    "basis vector {i} has length {} (expected {dim})",
                    v.len()
                )));
            }
            for (j, w) in vectors.iter().enumerate().take(i + 1) {
                let inner: Complex64 = v.iter().zip(w).map(|(x, y)| x.conj() * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (inner - Complex64::new(target, 0.0)).norm() > STATE_TOL {
                    return Err(LabError::InvalidState(format!(
                        "basis vectors {i},{j} have inner product {inner}"
                    )));
                }
            }
        }
        let mut seen = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(LabError::InvalidState("empty block".into()));
            }
            for &i in block {
                if i >= dim || std::mem::replace(&mut seen[i], true) {
                    return Err(LabError::InvalidState("blocks do not partition the basis".into()));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(LabError::InvalidState("blocks do not cover the basis".into()));
        }
        Ok(Self { label: label.to_string(), vectors, blocks })
    }

    /// The computational basis `{|0⟩, …, |dim−1⟩}`.
    pub fn computational(label: &str, dim: usize) -> Result<Self> {
        let vectors = (0..dim)
            .map(|i| (0..dim).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        Self::new(label, vectors)
    }

    /// Computational basis grouped into the given blocks.
    pub fn computational_blocks(label: &str, dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let basis = Self::computational(label, dim)?;
        Self::with_blocks(label, basis.vectors, blocks)
    }

    /// The Fourier basis, conjugate to the computational one.
    pub fn fourier(label: &str, dim: usize) -> Result<Self> {
        let norm = 1.0 / (dim as f64).sqrt();
        let vectors = (0..dim)
            .map(|k| {
                (0..dim)
                    .map(|j| {
                        Complex64::from_polar(norm, 2.0 * std::f64::consts::PI * (j * k) as f64 / dim as f64)
                    })
                    .collect()
            })
            .collect();
        Self::new(label, vectors)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block index of each basis vector.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                out[i] = b;
            }
        }
        out
    }

    /// Projector onto each block, on the single-subsystem space.
    pub fn block_projectors(&self) -> Result<Vec<ComplexOperator>> {
        let space = LabeledSpace::single(&self.label, self.dim())?;
        self.blocks
            .iter()
            .map(|block| {
                let mut p = ComplexOperator::zeros(space.clone());
                for &i in block {
                    p = p.add(&ComplexOperator::outer(space.clone(), &self.vectors[i])?)?;
                }
                Ok(p)
            })
            .collect()
    }
}
