//! Probability ensembles over discrete configurations with reversible
//! (permutation) dynamics.
//!
//! Joint configurations are indexed with the same mixed-radix convention as
//! quantum basis states, so an ensemble converts losslessly to a diagonal
//! density operator.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::info::shannon_entropy;
use crate::space::LabeledSpace;
use crate::state::QuantumState;

const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability distribution over the joint configurations of labeled registers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEnsemble {
    space: LabeledSpace,
    probabilities: Vec<f64>,
}

impl ClassicalEnsemble {
    pub fn new(space: LabeledSpace, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != space.dim() {
            return Err(LabError::DimensionMismatch(format!(
                "{} probabilities for {} configurations",
                probabilities.len(),
                space.dim()
            )));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(LabError::InvalidDistribution("probabilities must be nonnegative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(LabError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { space, probabilities })
    }

    /// Point mass on one configuration given by per-register digits.
    pub fn point(space: LabeledSpace, digits: &[usize]) -> Result<Self> {
        if digits.len() != space.len() || digits.iter().zip(space.subsystems()).any(|(d, s)| *d >= s.dim) {
            return Err(LabError::DimensionMismatch(format!("configuration {digits:?} outside {space}")));
        }
        let mut probabilities = vec![0.0; space.dim()];
        probabilities[space.join(digits)] = 1.0;
        Self::new(space, probabilities)
    }

    /// `first ⊗ second` for independent ensembles.
    pub fn product(&self, other: &ClassicalEnsemble) -> Result<Self> {
        let space = self.space.concat(&other.space)?;
        let probabilities = self
            .probabilities
            .iter()
            .flat_map(|p| other.probabilities.iter().map(move |q| p * q))
            .collect();
        Ok(Self { space, probabilities })
    }

    pub fn space(&self) -> &LabeledSpace {
        &self.space
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, digits: &[usize]) -> f64 {
        self.probabilities[self.space.join(digits)]
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.probabilities)
    }

    /// Diagonal density operator with the same distribution.
    pub fn to_quantum(&self) -> Result<QuantumState> {
        QuantumState::diagonal(self.space.clone(), &self.probabilities)
    }

    /// Largest absolute difference to another ensemble on the same registers.
    pub fn max_difference(&self, other: &ClassicalEnsemble) -> Result<f64> {
        if self.space != other.space {
            return Err(LabError::SpaceMismatch(format!("{} vs {}", self.space, other.space)));
        }
        Ok(self.probabilities.iter().zip(&other.probabilities).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Sums out every register not in `keep` (kept registers stay in order).
pub fn marginal(ensemble: &ClassicalEnsemble, keep: &[&str]) -> Result<ClassicalEnsemble> {
    let space = ensemble.space.restrict(keep)?;
    let (kept_dim, rest_dim, table) = ensemble.space.split_table(keep)?;
    let probabilities = (0..kept_dim)
        .map(|k| (0..rest_dim).map(|r| ensemble.probabilities[table[k][r]]).sum())
        .collect();
    Ok(ClassicalEnsemble { space, probabilities })
}

/// Shannon mutual information between two registers.
pub fn classical_mutual_information(ensemble: &ClassicalEnsemble, a: &str, b: &str) -> Result<f64> {
    let joint = marginal(ensemble, &[a, b])?;
    let h_a = marginal(&joint, &[a])?.entropy();
    let h_b = marginal(&joint, &[b])?.entropy();
    Ok(h_a + h_b - joint.entropy())
}

/// Classical fidelity `(Σ √(p q))²`.
pub fn classical_fidelity(p: &ClassicalEnsemble, q: &ClassicalEnsemble) -> Result<f64> {
    if p.space != q.space {
        return Err(LabError::SpaceMismatch(format!("{} vs {}", p.space, q.space)));
    }
    let bc: f64 = p.probabilities.iter().zip(&q.probabilities).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((bc * bc).min(1.0))
}

/// A bijection of joint configurations, declared to act only on `support`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversibleMap {
    space: LabeledSpace,
    support: Vec<String>,
    /// `image[c]` is where configuration `c` is sent.
    image: Vec<usize>,
}

impl ReversibleMap {
    /// Builds a map from a rule on support digits; other registers pass through.
    pub fn from_local_rule(
        space: &LabeledSpace,
        support: &[&str],
        rule: impl Fn(&[usize]) -> Vec<usize>,
    ) -> Result<Self> {
        let positions: Vec<usize> = support.iter().map(|l| space.index_of(l)).collect::<Result<_>>()?;
        let image: Vec<usize> = (0..space.dim())
            .map(|c| {
                let mut digits = space.digits(c);
                let local: Vec<usize> = positions.iter().map(|&p| digits[p]).collect();
                let mapped = rule(&local);
                for (&p, v) in positions.iter().zip(mapped) {
                    digits[p] = v;
                }
                space.join(&digits)
            })
            .collect();
        let map = Self { space: space.clone(), support: support.iter().map(|s| s.to_string()).collect(), image };
        map.check_bijection()?;
        Ok(map)
    }

    /// `(s, p) → (s, p + s mod d_p)`: writes the source value into the pointer.
    pub fn controlled_shift(space: &LabeledSpace, source: &str, pointer: &str) -> Result<Self> {
        let d_source = space.dim_of(source)?;
        let d_pointer = space.dim_of(pointer)?;
        if d_pointer < d_source {
            return Err(LabError::RecordCapacity(format!(
                "register '{pointer}' of cardinality {d_pointer} cannot record '{source}' of cardinality {d_source}"
            )));
        }
        Self::from_local_rule(space, &[source, pointer], |d| vec![d[0], (d[1] + d[0]) % d_pointer])
    }

    fn check_bijection(&self) -> Result<()> {
        let mut seen = vec![false; self.image.len()];
        for &i in &self.image {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(LabError::InvalidState("map is not a bijection".into()));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Self {
        let mut image = vec![0; self.image.len()];
        for (from, &to) in self.image.iter().enumerate() {
            image[to] = from;
        }
        Self { space: self.space.clone(), support: self.support.clone(), image }
    }

    pub fn apply(&self, ensemble: &ClassicalEnsemble) -> Result<ClassicalEnsemble> {
        if ensemble.space != self.space {
            return Err(LabError::SpaceMismatch(format!("{} vs {}", ensemble.space, self.space)));
        }
        let mut probabilities = vec![0.0; self.image.len()];
        for (from, &to) in self.image.iter().enumerate() {
            probabilities[to] = ensemble.probabilities[from];
        }
        Ok(ClassicalEnsemble { space: self.space.clone(), probabilities })
    }
}

fn ensure_ready(ensemble: &ClassicalEnsemble, label: &str) -> Result<()> {
    let register = marginal(ensemble, &[label])?;
    if (register.probabilities[0] - 1.0).abs() > NORMALIZATION_TOL {
        return Err(LabError::ProtocolOrder(format!(
            "register '{label}' is not in its ready configuration (P(ready) = {})",
            register.probabilities[0]
        )));
    }
    Ok(())
}

/// Records the system value in the (ready) apparatus.
pub fn classical_measure(ensemble: &ClassicalEnsemble, system: &str, apparatus: &str) -> Result<ClassicalEnsemble> {
    let map = ReversibleMap::controlled_shift(&ensemble.space, system, apparatus)?;
    ensure_ready(ensemble, apparatus)?;
    map.apply(ensemble)
}

/// Adds the apparatus value into the (ready) device register.
pub fn classical_copy(ensemble: &ClassicalEnsemble, apparatus: &str, device: &str) -> Result<ClassicalEnsemble> {
    let map = ReversibleMap::controlled_shift(&ensemble.space, apparatus, device)?;
    ensure_ready(ensemble, device)?;
    map.apply(ensemble)
}

/// Inverse of [`classical_measure`], acting on system and apparatus only.
pub fn classical_reverse(ensemble: &ClassicalEnsemble, system: &str, apparatus: &str) -> Result<ClassicalEnsemble> {
    ReversibleMap::controlled_shift(&ensemble.space, system, apparatus)?.inverse().apply(ensemble)
}
