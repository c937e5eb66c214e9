//! Index sets over the units of a multivariate process.
//!
//! Units are numbered `0..n_vars`. A [`SourceSet`] is a non-owning bitmask
//! over those indices; it is the key type for restricted models, subset
//! mutual informations and lattice atoms. The process dimension is capped
//! well below 32, so a `u32` mask is always sufficient.

use std::fmt;

use crate::error::{PridError, Result};

/// A set of unit indices, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSet(u32);

impl SourceSet {
    /// The empty set.
    pub const EMPTY: SourceSet = SourceSet(0);

    /// Builds a set from a raw bitmask.
    pub fn from_bits(bits: u32) -> SourceSet {
        SourceSet(bits)
    }

    /// Builds a set from zero-based unit indices.
    pub fn from_indices(indices: &[usize]) -> Result<SourceSet> {
        let mut bits = 0u32;
        for &i in indices {
            if i >= 32 {
                return Err(PridError::InvalidInput(format!(
                    "unit index {i} out of range for a source set"
                )));
            }
            bits |= 1 << i;
        }
        Ok(SourceSet(bits))
    }

    /// The singleton set `{i}`.
    pub fn singleton(i: usize) -> SourceSet {
        debug_assert!(i < 32);
        SourceSet(1 << i)
    }

    /// The full set `{0, .., n - 1}`.
    pub fn full(n: usize) -> SourceSet {
        debug_assert!(n <= 32);
        if n == 32 {
            SourceSet(u32::MAX)
        } else {
            SourceSet((1u32 << n) - 1)
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Number of members.
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 & (1 << i) != 0
    }

    pub fn is_subset_of(self, other: SourceSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// True if neither set contains the other.
    pub fn is_incomparable_with(self, other: SourceSet) -> bool {
        !self.is_subset_of(other) && !other.is_subset_of(self)
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Members collected into a vector.
    pub fn indices(self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// Orders sets by cardinality, then lexicographically on the sorted member
/// lists. This is the canonical ordering used for lattice atoms, so that
/// every run enumerates and labels atoms identically.
impl Ord for SourceSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for SourceSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
