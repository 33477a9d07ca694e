//! Labeled tensor-product spaces.
//!
//! Basis-index convention used by every module: a joint basis index is the
//! mixed-radix number whose digits are the subsystem basis indices, taken in
//! subsystem order, with the **leftmost subsystem as the most significant
//! digit**. For a space `[S(2), A(3)]` the joint index of `|s⟩|a⟩` is `3*s + a`.
//! This matches the Kronecker product `a ⊗ b` where `b` varies fastest.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// An ordered list of named finite-dimensional subsystems.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSpace {
    subsystems: Vec<Subsystem>,
}

impl LabeledSpace {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .map(|(label, dim)| Subsystem { label: label.into(), dim })
            .collect();
        if subsystems.is_empty() {
            return Err(LabError::InvalidSpace("a space needs at least one subsystem".into()));
        }
        for (i, sub) in subsystems.iter().enumerate() {
            if sub.label.is_empty() {
                return Err(LabError::InvalidSpace("empty subsystem label".into()));
            }
            if sub.dim < 2 {
                return Err(LabError::InvalidSpace(format!(
                    "subsystem '{}' has dimension {} (must be >= 2)",
                    sub.label, sub.dim
                )));
            }
            if subsystems[..i].iter().any(|other| other.label == sub.label) {
                return Err(LabError::InvalidSpace(format!("duplicate label '{}'", sub.label)));
            }
        }
        Ok(Self { subsystems })
    }

    /// Single-subsystem space.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    /// Joint dimension, the product of subsystem dimensions.
    pub fn dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.position(label).ok_or_else(|| LabError::LabelNotFound(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.index_of(label)?].dim)
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &LabeledSpace) -> Result<Self> {
        if let Some(clash) = other.labels().find(|l| self.contains(l)) {
            return Err(LabError::LabelCollision(clash.to_string()));
        }
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        Ok(Self { subsystems })
    }

    /// The subspace made of the given labels, kept in this space's order.
    pub fn restrict(&self, keep: &[&str]) -> Result<Self> {
        for label in keep {
            self.index_of(label)?;
        }
        let subsystems: Vec<Subsystem> =
            self.subsystems.iter().filter(|s| keep.contains(&s.label.as_str())).cloned().collect();
        if subsystems.is_empty() {
            return Err(LabError::InvalidSpace("cannot restrict to an empty label set".into()));
        }
        Ok(Self { subsystems })
    }

    /// Labels of this space that are not in `keep`.
    pub fn complement(&self, keep: &[&str]) -> Vec<&str> {
        self.labels().filter(|l| !keep.contains(l)).collect()
    }

    /// Splits a joint index into per-subsystem digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.subsystems.len()];
        for (slot, sub) in out.iter_mut().zip(&self.subsystems).rev() {
            *slot = index % sub.dim;
            index /= sub.dim;
        }
        out
    }

    /// Joins per-subsystem digits into a joint index.
    pub fn join(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.subsystems.len());
        digits.iter().zip(&self.subsystems).fold(0, |acc, (d, sub)| acc * sub.dim + d)
    }

    /// Table `t` such that `t[kept][rest]` is the joint index whose kept-label
    /// digits encode `kept` and whose remaining digits encode `rest`, both in
    /// this space's order.
    pub(crate) fn split_table(&self, keep: &[&str]) -> Result<(usize, usize, Vec<Vec<usize>>)> {
        for label in keep {
            self.index_of(label)?;
        }
        let kept_mask: Vec<bool> =
            self.subsystems.iter().map(|s| keep.contains(&s.label.as_str())).collect();
        let kept_dim: usize =
            self.subsystems.iter().zip(&kept_mask).filter(|(_, k)| **k).map(|(s, _)| s.dim).product();
        let rest_dim = self.dim() / kept_dim;
        let mut table = vec![vec![0usize; rest_dim]; kept_dim];
        for index in 0..self.dim() {
            let digits = self.digits(index);
            let (mut k, mut r) = (0usize, 0usize);
            for ((d, sub), kept) in digits.iter().zip(&self.subsystems).zip(&kept_mask) {
                if *kept {
                    k = k * sub.dim + d;
                } else {
                    r = r * sub.dim + d;
                }
            }
            table[k][r] = index;
        }
        Ok((kept_dim, rest_dim, table))
    }
}

impl fmt::Display for LabeledSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.subsystems.iter().map(|s| format!("{}({})", s.label, s.dim)).collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_dims_and_duplicates() {
        assert!(LabeledSpace::new([("S", 1)]).is_err());
        assert!(LabeledSpace::new([("S", 2), ("S", 3)]).is_err());
        assert!(LabeledSpace::new(Vec::<(String, usize)>::new()).is_err());
    }

    #[test]
    fn leftmost_label_is_most_significant() {
        let space = LabeledSpace::new([("S", 2), ("A", 3)]).unwrap();
        assert_eq!(space.dim(), 6);
        assert_eq!(space.join(&[1, 2]), 5);
        assert_eq!(space.join(&[1, 0]), 3);
        assert_eq!(space.digits(4), vec![1, 1]);
        for i in 0..6 {
            assert_eq!(space.join(&space.digits(i)), i);
        }
    }

    #[test]
    fn concat_detects_collisions() {
        let a = LabeledSpace::single("S", 2).unwrap();
        let b = LabeledSpace::single("S", 2).unwrap();
        assert_eq!(a.concat(&b), Err(LabError::LabelCollision("S".into())));
    }

    #[test]
    fn restrict_keeps_space_order() {
        let space = LabeledSpace::new([("S", 2), ("A", 3), ("D", 4)]).unwrap();
        let sub = space.restrict(&["D", "S"]).unwrap();
        assert_eq!(sub.labels().collect::<Vec<_>>(), vec!["S", "D"]);
        assert!(matches!(space.restrict(&["X"]), Err(LabError::LabelNotFound(_))));
    }
}
