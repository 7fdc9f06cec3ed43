//! Insertion-ordered sparse vectors.

use indexmap::IndexMap;

/// A sparse real vector keyed by node id.
///
/// Iteration follows insertion order, which keeps every reduction over the
/// vector (norms, dot products) deterministic from run to run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    entries: IndexMap<usize, f64>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(i: usize) -> Self {
        let mut v = Self::new();
        v.set(i, 1.0);
        v
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut v = Self::new();
        for (i, x) in pairs {
            v.add(i, x);
        }
        v
    }

    /// Builds a sparse vector from the nonzero entries of a dense slice.
    pub fn from_dense(dense: &[f64]) -> Self {
        Self::from_pairs(
            dense
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, &x)| (i, x)),
        )
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.entries.get(&i).copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn set(&mut self, i: usize, x: f64) {
        self.entries.insert(i, x);
    }

    /// Adds `x` to entry `i` and returns the updated value.
    #[inline]
    pub fn add(&mut self, i: usize, x: f64) -> f64 {
        let slot = self.entries.entry(i).or_insert(0.0);
        *slot += x;
        *slot
    }

    /// Number of stored entries (some may hold an explicit zero).
    pub fn stored(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries that are exactly nonzero.
    pub fn support_size(&self) -> usize {
        self.entries.values().filter(|&&x| x != 0.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.iter().filter(|&(_, x)| x != 0.0).map(|(i, _)| i).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &x)| (i, x))
    }

    pub fn keys(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.values().map(|x| x.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.values().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.entries.values().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.entries.values_mut() {
            *x *= a;
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SparseVector) {
        for (i, x) in other.iter() {
            self.add(i, a * x);
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, x) in self.iter() {
            out[i] += x;
        }
        out
    }

    /// Entries sorted by node id; convenient for stable output.
    pub fn sorted(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by_key(|&(i, _)| i);
        v
    }
}

impl FromIterator<(usize, f64)> for SparseVector {
    fn from_iter<T: IntoIterator<Item = (usize, f64)>>(iter: T) -> Self {
        Self::from_pairs(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_accumulates_and_norms_agree_with_dense() {
        let mut v = SparseVector::new();
        v.add(3, 1.5);
        v.add(1, -2.0);
        v.add(3, 0.5);
        assert_eq!(v.get(3), 2.0);
        assert_eq!(v.get(0), 0.0);
        assert_eq!(v.l1_norm(), 4.0);
        assert_eq!(v.linf_norm(), 2.0);
        assert_eq!(v.to_dense(4), vec![0.0, -2.0, 0.0, 2.0]);
        assert_eq!(v.sorted(), vec![(1, -2.0), (3, 2.0)]);
    }

    #[test]
    fn support_ignores_explicit_zeros() {
        let mut v = SparseVector::unit(2);
        v.set(5, 0.0);
        assert_eq!(v.stored(), 2);
        assert_eq!(v.support(), vec![2]);
    }
}
