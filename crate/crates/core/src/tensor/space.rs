use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Subsystem {
            label: label.into(),
            dim,
        }
    }
}

/// Ordered list of labeled subsystems.
///
/// Basis indices are big-endian: the first subsystem is the most significant
/// digit of the flat index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    subsystems: Vec<Subsystem>,
}

impl SpaceDescriptor {
    pub fn new<I, S>(subsystems: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .map(|(l, d)| Subsystem::new(l, d))
            .collect();
        Self::from_subsystems(subsystems)
    }

    pub fn from_subsystems(subsystems: Vec<Subsystem>) -> Result<Self> {
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::ZeroDimension(s.label.clone()));
            }
            if subsystems[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        Ok(SpaceDescriptor { subsystems })
    }

    /// The trivial (one-dimensional, factor-free) space.
    pub fn empty() -> Self {
        SpaceDescriptor::default()
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::from_subsystems(vec![Subsystem::new(label, dim)])
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.subsystems[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Concatenation; fails on a shared label.
    pub fn concat(&self, other: &SpaceDescriptor) -> Result<SpaceDescriptor> {
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        Self::from_subsystems(subsystems)
    }

    /// Subsystems named in `labels`, in the order given.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<SpaceDescriptor> {
        let subsystems = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                self.position(l)
                    .map(|p| self.subsystems[p].clone())
                    .ok_or_else(|| Error::UnknownLabel(l.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_subsystems(subsystems)
    }

    /// Subsystems not named in `labels`, in original order.
    pub fn without<S: AsRef<str>>(&self, labels: &[S]) -> Result<SpaceDescriptor> {
        for l in labels {
            if !self.contains(l.as_ref()) {
                return Err(Error::UnknownLabel(l.as_ref().to_string()));
            }
        }
        Ok(SpaceDescriptor {
            subsystems: self
                .subsystems
                .iter()
                .filter(|s| !labels.iter().any(|l| l.as_ref() == s.label))
                .cloned()
                .collect(),
        })
    }

    /// Renames one subsystem.
    pub fn rename(&self, from: &str, to: &str) -> Result<SpaceDescriptor> {
        let p = self
            .position(from)
            .ok_or_else(|| Error::UnknownLabel(from.to_string()))?;
        let mut subsystems = self.subsystems.clone();
        subsystems[p].label = to.to_string();
        Self::from_subsystems(subsystems)
    }

    /// Replaces a run of adjacent subsystems by a single one of the product
    /// dimension. Under big-endian indexing this leaves matrix entries intact.
    pub fn merge_adjacent<S: AsRef<str>>(
        &self,
        labels: &[S],
        merged: &str,
    ) -> Result<SpaceDescriptor> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("nothing to merge".into()));
        }
        let first = self
            .position(labels[0].as_ref())
            .ok_or_else(|| Error::UnknownLabel(labels[0].as_ref().to_string()))?;
        for (k, l) in labels.iter().enumerate() {
            match self.position(l.as_ref()) {
                Some(p) if p == first + k => {}
                Some(_) => {
                    return Err(Error::InvalidArgument(format!(
                        "subsystems to merge are not adjacent and in order at `{}`",
                        l.as_ref()
                    )))
                }
                None => return Err(Error::UnknownLabel(l.as_ref().to_string())),
            }
        }
        let dim = self.subsystems[first..first + labels.len()]
            .iter()
            .map(|s| s.dim)
            .product();
        let mut subsystems = self.subsystems[..first].to_vec();
        subsystems.push(Subsystem::new(merged, dim));
        subsystems.extend_from_slice(&self.subsystems[first + labels.len()..]);
        Self::from_subsystems(subsystems)
    }

    /// Splits one subsystem into consecutive factors (big-endian).
    pub fn split(&self, label: &str, parts: &[(&str, usize)]) -> Result<SpaceDescriptor> {
        let p = self
            .position(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let prod: usize = parts.iter().map(|(_, d)| *d).product();
        if prod != self.subsystems[p].dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot split `{label}` of dim {} into factors of product {prod}",
                self.subsystems[p].dim
            )));
        }
        let mut subsystems = self.subsystems[..p].to_vec();
        subsystems.extend(parts.iter().map(|(l, d)| Subsystem::new(*l, *d)));
        subsystems.extend_from_slice(&self.subsystems[p + 1..]);
        Self::from_subsystems(subsystems)
    }

    /// `perm[new_flat] = old_flat` for reordering subsystems into `new_order`.
    pub fn basis_permutation<S: AsRef<str>>(&self, new_order: &[S]) -> Result<Vec<usize>> {
        if new_order.len() != self.len() {
            return Err(Error::NotPermutation);
        }
        let positions = new_order
            .iter()
            .map(|l| self.position(l.as_ref()).ok_or(Error::NotPermutation))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = vec![false; self.len()];
        for &p in &positions {
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::NotPermutation);
            }
        }
        let old_strides = self.strides();
        let new_dims: Vec<usize> = positions.iter().map(|&p| self.subsystems[p].dim).collect();
        let total = self.total_dim();
        let mut perm = Vec::with_capacity(total);
        let mut digits = vec![0usize; new_dims.len()];
        for _ in 0..total {
            let old: usize = digits
                .iter()
                .zip(&positions)
                .map(|(&d, &p)| d * old_strides[p])
                .sum();
            perm.push(old);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < new_dims[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        Ok(perm)
    }

    /// Big-endian strides of each subsystem.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.len()];
        for k in (0..self.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.subsystems[k + 1].dim;
        }
        strides
    }
}

impl std::fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .map(|s| format!("{}:{}", s.label, s.dim))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        assert_eq!(
            SpaceDescriptor::new([("a", 2), ("a", 3)]),
            Err(Error::DuplicateLabel("a".into()))
        );
        assert_eq!(
            SpaceDescriptor::new([("a", 0)]),
            Err(Error::ZeroDimension("a".into()))
        );
    }

    #[test]
    fn total_dim_is_product() {
        let s = SpaceDescriptor::new([("a", 2), ("b", 3), ("c", 1)]).unwrap();
        assert_eq!(s.total_dim(), 6);
        assert_eq!(SpaceDescriptor::empty().total_dim(), 1);
        assert_eq!(s.strides(), vec![3, 1, 1]);
    }

    #[test]
    fn basis_permutation_swaps_digits() {
        let s = SpaceDescriptor::new([("a", 2), ("b", 3)]).unwrap();
        let p = s.basis_permutation(&["b", "a"]).unwrap();
        // new index (b, a) = b*2 + a ; old index = a*3 + b
        for b in 0..3 {
            for a in 0..2 {
                assert_eq!(p[b * 2 + a], a * 3 + b);
            }
        }
        assert_eq!(s.basis_permutation(&["a", "a"]), Err(Error::NotPermutation));
        assert_eq!(s.basis_permutation(&["a"]), Err(Error::NotPermutation));
    }

    #[test]
    fn merge_and_split_are_relabelings() {
        let s = SpaceDescriptor::new([("a", 2), ("b", 3), ("c", 5)]).unwrap();
        let m = s.merge_adjacent(&["b", "c"], "bc").unwrap();
        assert_eq!(m.dims(), vec![2, 15]);
        let back = m.split("bc", &[("b", 3), ("c", 5)]).unwrap();
        assert_eq!(back, s);
        assert!(s.merge_adjacent(&["a", "c"], "x").is_err());
    }
}
