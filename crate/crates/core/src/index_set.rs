use std::fmt;

use serde::{Deserialize, Serialize};

/// A sorted set of element indices without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn insert(&mut self, x: usize) -> bool {
        match self.0.binary_search(&x) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, x);
                true
            }
        }
    }

    pub fn remove(&mut self, x: usize) -> bool {
        match self.0.binary_search(&x) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, x: usize) -> Self {
        let mut s = self.clone();
        s.insert(x);
        s
    }

    pub fn without(&self, x: usize) -> Self {
        let mut s = self.clone();
        s.remove(x);
        s
    }

    /// `self - out + inc`
    pub fn exchange(&self, out: usize, inc: usize) -> Self {
        let mut s = self.without(out);
        s.insert(inc);
        s
    }

    pub fn union(&self, other: &IndexSet) -> Self {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersection(&self, other: &IndexSet) -> Self {
        self.iter().filter(|&x| other.contains(x)).collect()
    }

    pub fn difference(&self, other: &IndexSet) -> Self {
        self.iter().filter(|&x| !other.contains(x)).collect()
    }

    pub fn symmetric_difference(&self, other: &IndexSet) -> Self {
        self.difference(other).union(&other.difference(self))
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl From<Vec<usize>> for IndexSet {
    fn from(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Self {
        s.0
    }
}

impl<const N: usize> From<[usize; N]> for IndexSet {
    fn from(a: [usize; N]) -> Self {
        a.to_vec().into()
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().collect::<Vec<_>>().into()
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = usize;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_order_and_duplicates() {
        let s: IndexSet = vec![3, 1, 3, 2].into();
        assert_eq!(s.as_slice(), &[1, 2, 3]);
    }

    #[test]
    fn set_algebra() {
        let a = IndexSet::from([0, 1, 2]);
        let b = IndexSet::from([2, 3]);
        assert_eq!(a.symmetric_difference(&b), IndexSet::from([0, 1, 3]));
        assert_eq!(a.exchange(1, 5), IndexSet::from([0, 2, 5]));
        assert!(IndexSet::from([2]).is_subset(&b));
    }
}
