//! Multi-index dictionaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered, duplicate-free set of multi-indices.
///
/// Indices are stored in graded order: by total degree, and within a degree
/// with the first component descending, so `total_degree(2, 1)` lists
/// `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    indices: Vec<Vec<u32>>,
    max_degree: usize,
}

/// `C(d + n, d)` with overflow detection.
pub fn total_degree_cardinality(d: usize, n: usize) -> Result<usize> {
    let k = d.min(n) as u128;
    let top = (d + n) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(top - i)
            .ok_or_else(|| Error::Overflow(format!("C({}, {})", d + n, d)))?
            / (i + 1);
    }
    usize::try_from(acc).map_err(|_| Error::Overflow(format!("C({}, {})", d + n, d)))
}

impl MultiIndexSet {
    /// All multi-indices with `|i|_1 <= n`.
    pub fn total_degree(d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let card = total_degree_cardinality(d, n)?;
        let mut indices = Vec::with_capacity(card);
        let mut current = vec![0u32; d];
        for degree in 0..=n {
            compositions(degree as u32, 0, &mut current, &mut indices);
        }
        debug_assert_eq!(indices.len(), card);
        Ok(Self {
            dim: d,
            indices,
            max_degree: n,
        })
    }

    /// Build from an explicit list, rejecting duplicates and ragged tuples.
    pub fn from_indices(dim: usize, indices: Vec<Vec<u32>>) -> Result<Self> {
        if dim == 0 || indices.is_empty() {
            return Err(Error::InvalidParameter("empty index set".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(indices.len());
        for idx in &indices {
            if idx.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: idx.len(),
                });
            }
            if !seen.insert(idx.clone()) {
                return Err(Error::InvalidParameter(format!("duplicate index {idx:?}")));
            }
        }
        let max_degree = indices
            .iter()
            .flat_map(|i| i.iter())
            .copied()
            .max()
            .unwrap_or(0) as usize;
        Ok(Self {
            dim,
            indices,
            max_degree,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cardinality `N`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Maximum univariate degree `n` over all indices.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.indices.iter().map(|v| v.as_slice())
    }

    pub fn contains(&self, idx: &[u32]) -> bool {
        self.indices.iter().any(|i| i == idx)
    }

    /// JSON array of index tuples.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.indices).expect("index tuples serialise")
    }
}

impl Serialize for MultiIndexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiIndexSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let indices: Vec<Vec<u32>> = Vec::deserialize(d)?;
        let dim = indices.first().map(|i| i.len()).unwrap_or(0);
        MultiIndexSet::from_indices(dim, indices).map_err(serde::de::Error::custom)
    }
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let d = current.len();
    if pos == d - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
    current[pos] = 0;
}
