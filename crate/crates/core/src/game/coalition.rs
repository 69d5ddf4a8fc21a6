use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The fixed set of players `{0, .., n-1}` a game is defined over.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl PlayerSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("a player set needs at least one player"));
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut set = Self::new(labels.len())?;
        set.labels = Some(labels);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels
            .as_ref()
            .and_then(|l| l.get(i))
            .map(String::as_str)
    }

    pub fn check(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::Index {
                index: i,
                n: self.n,
            })
        }
    }

    pub fn empty(&self) -> Coalition {
        Coalition::empty(self.n)
    }

    pub fn full(&self) -> Coalition {
        Coalition::full(self.n)
    }
}

const WORD: usize = 64;

/// A subset of a player set, stored as a bit mask split over 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    n: usize,
    words: Vec<u64>,
    size: usize,
}

impl Coalition {
    fn word_count(n: usize) -> usize {
        n.div_ceil(WORD).max(1)
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; Self::word_count(n)],
            size: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut c = Self::empty(n);
        for (w, word) in c.words.iter_mut().enumerate() {
            let lo = w * WORD;
            let bits = n.saturating_sub(lo).min(WORD);
            *word = if bits == WORD {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            };
        }
        c.size = n;
        c
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut c = Self::empty(n);
        for &i in indices {
            c.insert(i)?;
        }
        Ok(c)
    }

    /// Builds a coalition from a single-word mask; bit `k` is player `k`.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n < WORD && mask >> n != 0 {
            return Err(Error::Index {
                index: 63 - mask.leading_zeros() as usize,
                n,
            });
        }
        let mut c = Self::empty(n);
        c.words[0] = mask;
        c.size = mask.count_ones() as usize;
        Ok(c)
    }

    /// Low 64 bits of the mask. Only meaningful when `n <= 64`.
    pub fn mask(&self) -> u64 {
        self.words[0]
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) -> Result<bool> {
        if i >= self.n {
            return Err(Error::Index {
                index: i,
                n: self.n,
            });
        }
        let bit = 1u64 << (i % WORD);
        let word = &mut self.words[i / WORD];
        let fresh = *word & bit == 0;
        *word |= bit;
        self.size += fresh as usize;
        Ok(fresh)
    }

    pub fn remove(&mut self, i: usize) -> Result<bool> {
        if i >= self.n {
            return Err(Error::Index {
                index: i,
                n: self.n,
            });
        }
        let bit = 1u64 << (i % WORD);
        let word = &mut self.words[i / WORD];
        let present = *word & bit != 0;
        *word &= !bit;
        self.size -= present as usize;
        Ok(present)
    }

    pub fn with(&self, i: usize) -> Result<Self> {
        let mut c = self.clone();
        c.insert(i)?;
        Ok(c)
    }

    pub fn without(&self, i: usize) -> Result<Self> {
        let mut c = self.clone();
        c.remove(i)?;
        Ok(c)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(
            self.n, other.n,
            "coalitions over different player sets cannot be combined"
        );
        let words: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b))
            .collect();
        let size = words.iter().map(|w| w.count_ones() as usize).sum();
        Self {
            n: self.n,
            words,
            size,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        Self::full(self.n).difference(self)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.n == other.n
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * WORD + k)
            })
        })
    }

    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coalition{}", self)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_out_of_range() {
        let mut c = Coalition::empty(4);
        assert!(matches!(c.insert(4), Err(Error::Index { index: 4, n: 4 })));
        assert!(Coalition::from_mask(3, 0b1000).is_err());
        assert!(PlayerSet::new(0).is_err());
    }

    #[test]
    fn full_covers_multiword() {
        let c = Coalition::full(130);
        assert_eq!(c.len(), 130);
        assert!(c.contains(129));
        assert!(!c.contains(130));
        assert_eq!(c.iter().count(), 130);
        assert!(c.complement().is_empty());
    }

    #[test]
    fn display_lists_members() {
        let c = Coalition::from_indices(5, &[0, 3]).unwrap();
        assert_eq!(c.to_string(), "{0, 3}");
    }

    proptest! {
        #[test]
        fn size_tracks_population(n in 1usize..200, picks in prop::collection::vec(0usize..200, 0..50)) {
            let mut c = Coalition::empty(n);
            let mut reference = std::collections::BTreeSet::new();
            for p in picks {
                if p < n {
                    c.insert(p).unwrap();
                    reference.insert(p);
                } else {
                    prop_assert!(c.insert(p).is_err());
                }
            }
            prop_assert_eq!(c.len(), reference.len());
            prop_assert_eq!(c.members(), reference.into_iter().collect::<Vec<_>>());
            let comp = c.complement();
            prop_assert_eq!(comp.len() + c.len(), n);
            prop_assert!(comp.is_disjoint(&c));
            prop_assert_eq!(comp.union(&c), Coalition::full(n));
        }
    }
}
