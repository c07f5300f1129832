//! Multi-indices `α ∈ ℤ₊ⁿ` used for monomial weights, derivatives and Hermite profiles.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A multi-index with `n` nonnegative entries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit index `e_j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = vec![0; n];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// `|α| = Σ α_j`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `α! = Π α_j!` as an exact integer.
    pub fn factorial_exact(&self) -> u128 {
        self.0.iter().map(|&a| factorial_u128(a)).product()
    }

    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial_f64(a)).product()
    }

    /// Componentwise partial order `α ≤ β`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `α − β` when `β ≤ α`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn scale(&self, k: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a * k).collect())
    }

    pub fn plus_unit(&self, j: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[j] += 1;
        MultiIndex(v)
    }

    pub fn minus_unit(&self, j: usize) -> Option<MultiIndex> {
        if self.0[j] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(MultiIndex(v))
    }

    /// Lowest axis with a nonzero entry.
    pub fn lowest_nonzero_axis(&self) -> Option<usize> {
        self.0.iter().position(|&a| a > 0)
    }

    /// `binom(α, β) = Π binom(α_j, β_j)`, zero unless `β ≤ α`.
    pub fn binomial(&self, beta: &MultiIndex) -> u128 {
        if !beta.le(self) {
            return 0;
        }
        self.0
            .iter()
            .zip(&beta.0)
            .map(|(&a, &b)| binomial_u128(a, b))
            .product()
    }

    /// Evaluate the monomial `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    /// All indices of dimension `n` with `|α| = k`, in lexicographic order.
    pub fn of_order(n: usize, k: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, k);
        out.sort();
        out
    }

    /// All indices of dimension `n` with `|α| ≤ m`, ordered by order then lexicographically.
    pub fn up_to(n: usize, m: u32) -> Vec<MultiIndex> {
        (0..=m).flat_map(|k| MultiIndex::of_order(n, k)).collect()
    }

    /// All `β ≤ α`.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::new()];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<u32>| {
                    (0..=a).map(move |b| {
                        let mut p = prefix.clone();
                        p.push(b);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(MultiIndex).collect()
    }
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    for a in 0..=remaining {
        cur[pos] = a;
        fill(out, cur, pos + 1, remaining - a);
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

pub fn factorial_u128(k: u32) -> u128 {
    (1..=k as u128).product()
}

pub fn factorial_f64(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn binomial_u128(a: u32, b: u32) -> u128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut r: u128 = 1;
    for i in 0..b {
        r = r * (a - i) as u128 / (i + 1) as u128;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_factorial() {
        let a = MultiIndex::new(vec![2, 3]);
        assert_eq!(a.order(), 5);
        assert_eq!(a.factorial_exact(), 12);
        assert_eq!(MultiIndex::zero(3).factorial_exact(), 1);
    }

    #[test]
    fn binomial_vanishes_off_order() {
        let a = MultiIndex::new(vec![2, 1]);
        assert_eq!(a.binomial(&MultiIndex::new(vec![1, 1])), 2);
        assert_eq!(a.binomial(&MultiIndex::new(vec![0, 2])), 0);
    }

    #[test]
    fn enumeration_counts() {
        // number of α in ℤ₊ⁿ with |α| = k is binom(n+k-1, k)
        for n in 1..4 {
            for k in 0..6 {
                let want = binomial_u128((n + k - 1) as u32, k as u32) as usize;
                assert_eq!(MultiIndex::of_order(n, k as u32).len(), want);
            }
        }
        assert_eq!(MultiIndex::new(vec![2, 1]).below().len(), 6);
    }

    #[test]
    fn partial_order() {
        let a = MultiIndex::new(vec![1, 2]);
        let b = MultiIndex::new(vec![2, 2]);
        assert!(a.le(&b));
        assert!(!b.le(&a));
        assert_eq!(b.checked_sub(&a), Some(MultiIndex::new(vec![1, 0])));
        assert_eq!(a.checked_sub(&b), None);
    }
}
