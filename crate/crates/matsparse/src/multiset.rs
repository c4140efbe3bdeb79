//! Index multisets: the sampled or searched sub-collections of a
//! decomposition, stored as sorted `(index, multiplicity)` pairs.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Multiset {
    items: Vec<(usize, usize)>,
}

impl Multiset {
    /// Build from a list of drawn indices (any order, repeats allowed).
    pub fn from_draws(draws: &[usize]) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::EmptyInput("multiset with no draws".into()));
        }
        let mut sorted = draws.to_vec();
        sorted.sort_unstable();
        let items = sorted
            .iter()
            .dedup_with_count()
            .map(|(count, &idx)| (idx, count))
            .collect();
        Ok(Self { items })
    }

    /// Sorted `(index, multiplicity)` pairs.
    pub fn items(&self) -> &[(usize, usize)] {
        &self.items
    }

    /// Total count including multiplicities.
    pub fn size(&self) -> usize {
        self.items.iter().map(|(_, m)| m).sum()
    }

    pub fn max_index(&self) -> usize {
        self.items.iter().map(|(i, _)| *i).max().unwrap_or(0)
    }

    /// Indices repeated according to multiplicity, ascending.
    pub fn expanded(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size());
        for &(idx, mult) in &self.items {
            out.extend(std::iter::repeat(idx).take(mult));
        }
        out
    }
}

impl std::fmt::Display for Multiset {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        let mut first = true;
        for &(idx, mult) in &self.items {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if mult == 1 {
                write!(f, "{idx}")?;
            } else {
                write!(f, "{idx}x{mult}")?;
            }
        }
        Ok(())
    }
}

/// All multisets of exactly `size` elements over symbols `0..n_symbols`
/// (combinations with repetition).
pub fn enumerate_multisets(n_symbols: usize, size: usize) -> impl Iterator<Item = Multiset> {
    (0..n_symbols)
        .combinations_with_replacement(size)
        .map(|draws| Multiset::from_draws(&draws).expect("size >= 1"))
}

/// Number of multisets over `n_symbols` symbols with sizes `1..=max_size`,
/// saturating at `u128::MAX`.
pub fn count_multisets(n_symbols: usize, max_size: usize) -> u128 {
    let mut total: u128 = 0;
    for s in 1..=max_size {
        total = total.saturating_add(binomial(n_symbols + s - 1, s));
        if total == u128::MAX {
            break;
        }
    }
    total
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_draws_sorts_and_counts() {
        let m = Multiset::from_draws(&[3, 1, 3, 3, 0]).unwrap();
        assert_eq!(m.items(), &[(0, 1), (1, 1), (3, 3)]);
        assert_eq!(m.size(), 5);
        assert_eq!(m.expanded(), vec![0, 1, 3, 3, 3]);
    }

    #[test]
    fn empty_rejected() {
        assert!(Multiset::from_draws(&[]).is_err());
    }

    #[test]
    fn representation_is_order_invariant() {
        let a = Multiset::from_draws(&[2, 0, 2]).unwrap();
        let b = Multiset::from_draws(&[2, 2, 0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn enumeration_counts_match_formula() {
        for n in 1..=5usize {
            for s in 1..=4usize {
                let listed = enumerate_multisets(n, s).count();
                assert_eq!(listed as u128, binomial(n + s - 1, s), "n={n} s={s}");
            }
        }
        // 5 symbols, sizes 1..=4: 5 + 15 + 35 + 70
        assert_eq!(count_multisets(5, 4), 125);
    }

    #[test]
    fn display_compact() {
        let m = Multiset::from_draws(&[0, 0, 0, 2]).unwrap();
        assert_eq!(m.to_string(), "0x3 2");
    }
}
