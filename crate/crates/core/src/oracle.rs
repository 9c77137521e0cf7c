//! Exhaustive ground truth for small games.
//!
//! Partitions are enumerated as restricted-growth strings: `labels[0] = 0`
//! and `labels[i] ≤ 1 + max(labels[..i])`. Each string is one set partition,
//! so the stream has exactly Bell(n) items.

use std::ops::ControlFlow;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::game::{HedonicGame, Partition};
use crate::stability::{check_labels_unchecked, Concept};

pub const DEFAULT_LIMIT: usize = 13;

fn guard(n: usize, k: Option<usize>, limit: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::input("enumeration needs at least one agent"));
    }
    if n > limit {
        return Err(Error::LimitExceeded { n, limit });
    }
    if let Some(k) = k {
        if k == 0 || k > n {
            return Err(Error::input(format!("block count {k} outside [1, {n}]")));
        }
    }
    Ok(())
}

/// Restricted-growth-string cursor. `labels` is mutated in place.
struct Rgs {
    labels: Vec<usize>,
    /// `prefix_max[i] = max(labels[..=i])`.
    prefix_max: Vec<usize>,
    started: bool,
}

impl Rgs {
    fn new(n: usize) -> Self {
        Rgs {
            labels: vec![0; n],
            prefix_max: vec![0; n],
            started: false,
        }
    }

    fn blocks(&self) -> usize {
        self.prefix_max.last().map_or(0, |m| m + 1)
    }

    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return true;
        }
        let n = self.labels.len();
        for i in (1..n).rev() {
            if self.labels[i] <= self.prefix_max[i - 1] {
                self.labels[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return true;
            }
        }
        false
    }
}

/// Iterator over all set partitions of `0..n`, optionally only those with `k` blocks.
pub struct PartitionIter {
    rgs: Rgs,
    k: Option<usize>,
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        while self.rgs.advance() {
            if self.k.is_none_or(|k| k == self.rgs.blocks()) {
                return Some(Partition::from_labels(&self.rgs.labels).expect("valid growth string"));
            }
        }
        None
    }
}

pub fn enumerate_partitions(n: usize, k: Option<usize>) -> Result<PartitionIter> {
    enumerate_partitions_with_limit(n, k, DEFAULT_LIMIT)
}

pub fn enumerate_partitions_with_limit(n: usize, k: Option<usize>, limit: usize) -> Result<PartitionIter> {
    guard(n, k, limit)?;
    Ok(PartitionIter { rgs: Rgs::new(n), k })
}

/// Visits every growth string of length `n` with its block count, without allocating.
pub fn for_each_labels<B>(
    n: usize,
    limit: usize,
    mut visit: impl FnMut(&[usize], usize) -> ControlFlow<B>,
) -> Result<Option<B>> {
    guard(n, None, limit)?;
    let mut rgs = Rgs::new(n);
    while rgs.advance() {
        if let ControlFlow::Break(b) = visit(&rgs.labels, rgs.blocks()) {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// First partition in enumeration order that is stable for `concept`.
pub fn exists_stable(game: &HedonicGame, concept: Concept) -> Result<Option<Partition>> {
    exists_stable_with_limit(game, concept, DEFAULT_LIMIT)
}

pub fn exists_stable_with_limit(game: &HedonicGame, concept: Concept, limit: usize) -> Result<Option<Partition>> {
    let found = for_each_labels(game.n(), limit, |labels, blocks| {
        if check_labels_unchecked(game, labels, blocks, concept).stable {
            ControlFlow::Break(labels.to_vec())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    found.map(|l| Partition::from_labels(&l)).transpose()
}

pub fn count_stable(game: &HedonicGame, concept: Concept) -> Result<BigUint> {
    count_stable_with_limit(game, concept, DEFAULT_LIMIT)
}

pub fn count_stable_with_limit(game: &HedonicGame, concept: Concept, limit: usize) -> Result<BigUint> {
    let mut count: u64 = 0;
    for_each_labels::<()>(game.n(), limit, |labels, blocks| {
        if check_labels_unchecked(game, labels, blocks, concept).stable {
            count += 1;
        }
        ControlFlow::Continue(())
    })?;
    Ok(BigUint::from(count))
}

/// `result[k]` says whether some partition with exactly `k` blocks is stable; index 0 is unused.
pub fn stable_block_counts(game: &HedonicGame, concept: Concept) -> Result<Vec<bool>> {
    stable_block_counts_with_limit(game, concept, DEFAULT_LIMIT)
}

pub fn stable_block_counts_with_limit(game: &HedonicGame, concept: Concept, limit: usize) -> Result<Vec<bool>> {
    let n = game.n();
    let mut found = vec![false; n + 1];
    let mut missing = n;
    for_each_labels(n, limit, |labels, blocks| {
        if !found[blocks] && check_labels_unchecked(game, labels, blocks, concept).stable {
            found[blocks] = true;
            missing -= 1;
            if missing == 0 {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    Ok(found)
}

/// Stirling number of the second kind; 0 when `k > n`.
pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    // Row-by-row recurrence, keeping only columns 0..=k.
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] = &row[j] * BigUint::from(j) + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row.swap_remove(k)
}

pub fn bell(n: usize) -> BigUint {
    (0..=n).map(|k| stirling2(n, k)).sum()
}

/// `C(n, k)`; 0 when `k > n`.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}
