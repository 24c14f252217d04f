//! Coalitions of known features and feature orderings.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest feature count accepted by exhaustive enumeration.
pub const MAX_ENUMERATED_FEATURES: usize = 20;

/// A subset of feature indices, stored as a bitset over `n_features` bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coalition {
    n_features: usize,
    words: Vec<u64>,
}

impl Coalition {
    pub fn empty(n_features: usize) -> Self {
        Self {
            n_features,
            words: vec![0; n_features.div_ceil(64)],
        }
    }

    pub fn full(n_features: usize) -> Self {
        let mut c = Self::empty(n_features);
        for i in 0..n_features {
            c.words[i / 64] |= 1 << (i % 64);
        }
        c
    }

    pub fn from_indices(n_features: usize, indices: &[usize]) -> Result<Self> {
        let mut c = Self::empty(n_features);
        for &i in indices {
            c.try_insert(i)?;
        }
        Ok(c)
    }

    /// Coalition whose members are the set bits of `mask`.
    pub fn from_mask(n_features: usize, mask: u64) -> Result<Self> {
        if n_features < 64 && mask >> n_features != 0 {
            return Err(Error::Index {
                index: 63 - mask.leading_zeros() as usize,
                len: n_features,
            });
        }
        let mut c = Self::empty(n_features);
        if let Some(w) = c.words.first_mut() {
            *w = mask;
        }
        Ok(c)
    }

    /// Low 64 bits of the membership mask.
    pub fn mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n_features && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn try_insert(&mut self, i: usize) -> Result<()> {
        if i >= self.n_features {
            return Err(Error::Index {
                index: i,
                len: self.n_features,
            });
        }
        self.words[i / 64] |= 1 << (i % 64);
        Ok(())
    }

    /// Panics when `i` is out of range.
    pub fn insert(&mut self, i: usize) {
        self.try_insert(i).expect("feature index out of range");
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.n_features {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn with(&self, i: usize) -> Self {
        let mut c = self.clone();
        c.insert(i);
        c
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.n_features
    }

    pub fn complement(&self) -> Self {
        let mut c = Self::full(self.n_features);
        for (w, s) in c.words.iter_mut().zip(&self.words) {
            *w &= !s;
        }
        c
    }

    /// Members in ascending order.
    pub fn members(&self) -> Vec<usize> {
        (0..self.n_features).filter(|&i| self.contains(i)).collect()
    }

    /// Non-members in ascending order.
    pub fn missing(&self) -> Vec<usize> {
        (0..self.n_features).filter(|&i| !self.contains(i)).collect()
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

/// All `2^M` coalitions ordered by cardinality, then by numeric mask.
pub fn enumerate_coalitions(n_features: usize) -> Result<Vec<Coalition>> {
    if n_features == 0 || n_features > MAX_ENUMERATED_FEATURES {
        return Err(Error::Size {
            got: n_features,
            max: MAX_ENUMERATED_FEATURES,
        });
    }
    let mut masks: Vec<u64> = (0..1u64 << n_features).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
        .into_iter()
        .map(|m| Coalition::from_mask(n_features, m))
        .collect()
}

/// An ordering of all features.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn identity(n_features: usize) -> Self {
        Self {
            order: (0..n_features).collect(),
        }
    }

    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || seen[i] {
                return Err(Error::InvalidInput(alloc::format!(
                    "{order:?} is not a permutation of 0..{}",
                    order.len()
                )));
            }
            seen[i] = true;
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn position(&self, i: usize) -> Option<usize> {
        self.order.iter().position(|&j| j == i)
    }

    /// Features strictly before `i`.
    pub fn prefix_set(&self, i: usize) -> Result<Coalition> {
        let pos = self.position(i).ok_or(Error::Index {
            index: i,
            len: self.order.len(),
        })?;
        let mut c = Coalition::empty(self.order.len());
        for &j in &self.order[..pos] {
            c.insert(j);
        }
        Ok(c)
    }

    /// Uniform draw from `stream`.
    pub fn random(n_features: usize, stream: RngStream) -> Self {
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(&mut stream.rng());
        Self { order }
    }
}

pub fn prefix_set(r: &Permutation, i: usize) -> Result<Coalition> {
    r.prefix_set(i)
}

/// Permutation `k` is drawn from `stream.substream(k)`.
pub fn sample_permutations(n_features: usize, count: usize, stream: RngStream) -> Vec<Permutation> {
    (0..count as u64)
        .map(|k| Permutation::random(n_features, stream.substream(k)))
        .collect()
}

/// Every ordering of `0..n` in lexicographic order.
pub fn all_permutations(n_features: usize) -> AllPermutations {
    AllPermutations {
        next: Some((0..n_features).collect()),
    }
}

pub struct AllPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // next lexicographic permutation
        if let Some(k) = (0..succ.len().saturating_sub(1)).rev().find(|&k| succ[k] < succ[k + 1]) {
            let l = (k + 1..succ.len()).rev().find(|&l| succ[k] < succ[l]).unwrap();
            succ.swap(k, l);
            succ[k + 1..].reverse();
            self.next = Some(succ);
        }
        Some(Permutation { order: current })
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Fraction of orderings in which exactly the `size` features of a given
/// coalition precede a given non-member: `size!(M-size-1)!/M!`.
pub fn permutation_weight(n_features: usize, size: usize) -> f64 {
    factorial(size) * factorial(n_features - size - 1) / factorial(n_features)
}
