//! Set partitions of `[n] = {1, …, n}` and the operations the transition
//! kernels are built from: enumeration with a block cap, projection to a
//! prefix, one-element extensions, the lattice meet, relabeling, and the
//! prefix metric.
//!
//! A partition is stored in canonical form — every block sorted increasingly
//! and blocks listed in order of their least element — so structural equality
//! is plain value equality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A partition of `{1, …, n}` into disjoint nonempty blocks, canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct SetPartitionWire {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl<'de> Deserialize<'de> for SetPartition {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let wire = SetPartitionWire::deserialize(deserializer)?;
        SetPartition::new(wire.n, wire.blocks).map_err(serde::de::Error::custom)
    }
}

impl SetPartition {
    /// Builds a partition from blocks, validating and canonicalizing.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition("ground set must be nonempty".into()));
        }
        let mut seen = vec![false; n + 1];
        let mut canonical = Vec::with_capacity(blocks.len());
        for mut block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &e in &block {
                if e == 0 || e > n {
                    return Err(Error::InvalidPartition(format!(
                        "element {e} outside 1..={n}"
                    )));
                }
                if seen[e] {
                    return Err(Error::InvalidPartition(format!(
                        "element {e} appears more than once"
                    )));
                }
                seen[e] = true;
            }
            canonical.push(block);
        }
        if let Some(missing) = (1..=n).find(|&e| !seen[e]) {
            return Err(Error::InvalidPartition(format!(
                "element {missing} is not covered"
            )));
        }
        canonical.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n, blocks: canonical })
    }

    /// The one-block partition `1_n`.
    pub fn one_block(n: usize) -> Self {
        assert!(n >= 1);
        Self { n, blocks: vec![(1..=n).collect()] }
    }

    /// The all-singletons partition of `[n]`.
    pub fn singletons(n: usize) -> Self {
        assert!(n >= 1);
        Self { n, blocks: (1..=n).map(|e| vec![e]).collect() }
    }

    /// Partition induced by a labeling: `i` and `j` share a block exactly
    /// when `labels[i-1] == labels[j-1]`.
    pub fn from_labels(labels: &[usize]) -> Self {
        assert!(!labels.is_empty());
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut label_to_block: Vec<(usize, usize)> = Vec::new();
        for (idx, &label) in labels.iter().enumerate() {
            match label_to_block.iter().find(|(l, _)| *l == label) {
                Some(&(_, b)) => blocks[b].push(idx + 1),
                None => {
                    label_to_block.push((label, blocks.len()));
                    blocks.push(vec![idx + 1]);
                }
            }
        }
        // first-appearance order is least-element order, elements ascend
        Self { n: labels.len(), blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block sizes sorted descending. Every probability formula in the crate
    /// is evaluated on this profile so that relabeled partitions produce
    /// bit-identical values.
    pub fn size_profile(&self) -> Vec<usize> {
        let mut sizes = self.block_sizes();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// For each element `1..=n`, the 0-based index of its block.
    pub fn block_assignment(&self) -> Vec<usize> {
        let mut assignment = vec![0usize; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &e in block {
                assignment[e - 1] = b;
            }
        }
        assignment
    }

    /// Projection to `[m]`: intersect every block with `{1, …, m}`.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(Error::RangeError { m, n: self.n });
        }
        let blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .map(|b| b.iter().copied().take_while(|&e| e <= m).collect::<Vec<_>>())
            .filter(|b: &Vec<usize>| !b.is_empty())
            .collect();
        // blocks stay sorted by least element: dropping large elements
        // never changes a block's minimum
        Ok(Self { n: m, blocks })
    }

    /// Restriction to an arbitrary subset, relabeled to `[subset.len()]` by
    /// rank. `subset` must be strictly increasing with elements in `[n]`.
    pub(crate) fn restrict_to(&self, subset: &[usize]) -> Self {
        debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
        let mut rank = vec![0usize; self.n + 1];
        for (i, &e) in subset.iter().enumerate() {
            rank[e] = i + 1;
        }
        let mut blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .filter_map(|b| {
                let relabeled: Vec<usize> =
                    b.iter().filter(|&&e| rank[e] != 0).map(|&e| rank[e]).collect();
                (!relabeled.is_empty()).then_some(relabeled)
            })
            .collect();
        blocks.sort_unstable_by_key(|b| b[0]);
        Self { n: subset.len(), blocks }
    }

    /// All partitions of `[n+1]` with at most `k` blocks projecting to
    /// `self`: the new element joins each existing block, plus the singleton
    /// extension when the block count allows it.
    pub fn extensions(&self, k: usize) -> Vec<Self> {
        let m = self.num_blocks();
        if m > k {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(m + 1);
        for i in 0..m {
            let mut blocks = self.blocks.clone();
            blocks[i].push(self.n + 1);
            out.push(Self { n: self.n + 1, blocks });
        }
        if m < k {
            let mut blocks = self.blocks.clone();
            blocks.push(vec![self.n + 1]);
            out.push(Self { n: self.n + 1, blocks });
        }
        out
    }

    /// Greatest lower bound: blocks are the nonempty pairwise intersections.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let other_assignment = other.block_assignment();
        let mut blocks = Vec::new();
        for block in &self.blocks {
            let mut cells: Vec<Vec<usize>> = vec![Vec::new(); other.num_blocks()];
            for &e in block {
                cells[other_assignment[e - 1]].push(e);
            }
            blocks.extend(cells.into_iter().filter(|c| !c.is_empty()));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n: self.n, blocks })
    }

    /// Sizes of the nonempty pairwise intersections, descending. Same data
    /// as `meet(...).size_profile()` without building the partition.
    pub(crate) fn meet_profile(&self, other: &Self) -> Result<Vec<usize>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let other_assignment = other.block_assignment();
        let mut sizes = Vec::new();
        let mut counts = vec![0usize; other.num_blocks()];
        for block in &self.blocks {
            for &e in block {
                counts[other_assignment[e - 1]] += 1;
            }
            for c in counts.iter_mut() {
                if *c > 0 {
                    sizes.push(*c);
                    *c = 0;
                }
            }
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Ok(sizes)
    }

    /// Relabels the ground set: `i ~ j` in the output iff
    /// `sigma^{-1}(i) ~ sigma^{-1}(j)` here, i.e. blocks map to their images.
    pub fn apply_permutation(&self, sigma: &Permutation) -> Result<Self> {
        if self.n != sigma.n() {
            return Err(Error::DimensionMismatch(self.n, sigma.n()));
        }
        let mut blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .map(|b| {
                let mut image: Vec<usize> = b.iter().map(|&e| sigma.apply(e)).collect();
                image.sort_unstable();
                image
            })
            .collect();
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n: self.n, blocks })
    }

    /// Largest `m` with equal restrictions to `[m]`. Always at least 1.
    pub fn prefix_agreement(&self, other: &Self) -> Result<usize> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let a = self.block_assignment();
        let b = other.block_assignment();
        for m in 2..=self.n {
            for i in 1..m {
                if (a[i - 1] == a[m - 1]) != (b[i - 1] == b[m - 1]) {
                    return Ok(m - 1);
                }
            }
        }
        Ok(self.n)
    }

    /// `1 / prefix_agreement`: the partition metric at resolution `n`.
    /// Equal inputs give `1/n`, the finest observable agreement.
    pub fn prefix_distance(&self, other: &Self) -> Result<f64> {
        Ok(1.0 / self.prefix_agreement(other)? as f64)
    }
}

impl std::fmt::Display for SetPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for block in &self.blocks {
            write!(f, "{{")?;
            for (i, e) in block.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Every partition of `[n]` with at most `k` blocks, in restricted-growth
/// order. The count is `sum_j S(n, j)` over `j <= min(n, k)`.
pub fn enumerate(n: usize, k: usize) -> Vec<SetPartition> {
    assert!(n >= 1 && k >= 1);
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fill(&mut labels, 1, 0, k, &mut out);
    out
}

fn fill(labels: &mut Vec<usize>, pos: usize, max_label: usize, k: usize, out: &mut Vec<SetPartition>) {
    if pos == labels.len() {
        out.push(SetPartition::from_labels(labels));
        return;
    }
    let top = (max_label + 1).min(k - 1);
    for label in 0..=top {
        labels[pos] = label;
        fill(labels, pos + 1, max_label.max(label), k, out);
    }
}

/// `sum_{j<=min(n,k)} S(n, j)`, saturating at `u128::MAX`.
pub fn state_count(n: usize, k: usize) -> u128 {
    // Stirling recurrence S(n, j) = j S(n-1, j) + S(n-1, j-1)
    let cap = k.min(n);
    let mut row = vec![0u128; cap + 1];
    row[0] = 1; // S(0, 0)
    for _ in 1..=n {
        let mut next = vec![0u128; cap + 1];
        for j in 1..=cap {
            next[j] = (j as u128)
                .saturating_mul(row[j])
                .saturating_add(row[j - 1]);
        }
        row = next;
    }
    row.iter().fold(0u128, |acc, &s| acc.saturating_add(s))
}

/// A bijection of `[n]`, stored in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty mapping".into()));
        }
        let mut seen = vec![false; n + 1];
        for &v in &mapping {
            if v == 0 || v > n || seen[v] {
                return Err(Error::InvalidPermutation(format!(
                    "mapping is not a bijection of 1..={n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1);
        Self { mapping: (1..=n).collect() }
    }

    /// Swaps `a` and `b`, fixing everything else.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        if a == 0 || a > n || b == 0 || b > n {
            return Err(Error::InvalidPermutation(format!(
                "transposition ({a} {b}) outside 1..={n}"
            )));
        }
        let mut mapping: Vec<usize> = (1..=n).collect();
        mapping.swap(a - 1, b - 1);
        Ok(Self { mapping })
    }

    /// Fisher–Yates draw of a uniform permutation.
    pub fn sample_uniform(n: usize, rng: &mut RngStream) -> Self {
        use rand::seq::SliceRandom;
        let mut mapping: Vec<usize> = (1..=n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn n(&self) -> usize {
        self.mapping.len()
    }

    pub fn apply(&self, e: usize) -> usize {
        self.mapping[e - 1]
    }

    pub fn inverse(&self) -> Self {
        let mut mapping = vec![0usize; self.mapping.len()];
        for (i, &v) in self.mapping.iter().enumerate() {
            mapping[v - 1] = i + 1;
        }
        Self { mapping }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn p(n: usize, blocks: &[&[usize]]) -> SetPartition {
        SetPartition::new(n, blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn construction_canonicalizes() {
        let a = SetPartition::new(3, vec![vec![3, 1], vec![2]]).unwrap();
        assert_eq!(a.blocks(), &[vec![1, 3], vec![2]]);
        let b = SetPartition::new(3, vec![vec![2], vec![1, 3]]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn construction_rejects_bad_blocks() {
        assert!(SetPartition::new(3, vec![vec![1, 2]]).is_err()); // misses 3
        assert!(SetPartition::new(3, vec![vec![1, 2, 3], vec![2]]).is_err()); // overlap
        assert!(SetPartition::new(3, vec![vec![1, 2, 3], vec![]]).is_err()); // empty block
        assert!(SetPartition::new(3, vec![vec![1, 2, 4]]).is_err()); // out of range
        assert!(SetPartition::new(0, vec![]).is_err());
    }

    #[test]
    fn enumerate_small_cases() {
        assert_eq!(enumerate(1, 3), vec![p(1, &[&[1]])]);
        let got = enumerate(3, 2);
        let want = vec![
            p(3, &[&[1, 2, 3]]),
            p(3, &[&[1, 2], &[3]]),
            p(3, &[&[1, 3], &[2]]),
            p(3, &[&[1], &[2, 3]]),
        ];
        assert_eq!(got.len(), 4);
        for w in &want {
            assert!(got.contains(w));
        }
        assert_eq!(enumerate(4, 2).len(), 8); // S(4,1) + S(4,2) = 1 + 7
    }

    /// Independent oracle: insert elements one at a time into every block or
    /// a new block, no cap, then filter by block count.
    fn brute_force_enumerate(n: usize, k: usize) -> Vec<SetPartition> {
        let mut acc: Vec<Vec<Vec<usize>>> = vec![vec![vec![1]]];
        for e in 2..=n {
            let mut next = Vec::new();
            for blocks in &acc {
                for i in 0..blocks.len() {
                    let mut grown = blocks.clone();
                    grown[i].push(e);
                    next.push(grown);
                }
                let mut grown = blocks.clone();
                grown.push(vec![e]);
                next.push(grown);
            }
            acc = next;
        }
        acc.into_iter()
            .filter(|blocks| blocks.len() <= k)
            .map(|blocks| SetPartition::new(n, blocks).unwrap())
            .collect()
    }

    fn stirling(n: usize, j: usize) -> u128 {
        if n == 0 && j == 0 {
            return 1;
        }
        if n == 0 || j == 0 {
            return 0;
        }
        j as u128 * stirling(n - 1, j) + stirling(n - 1, j - 1)
    }

    #[test]
    fn enumerate_matches_stirling_and_brute_force() {
        for n in 1..=7 {
            for k in 1..=5 {
                let got = enumerate(n, k);
                let want: u128 = (1..=n.min(k)).map(|j| stirling(n, j)).sum();
                assert_eq!(got.len() as u128, want, "count at n={n} k={k}");
                assert_eq!(state_count(n, k), want);
                let brute: HashSet<SetPartition> =
                    brute_force_enumerate(n, k).into_iter().collect();
                let fast: HashSet<SetPartition> = got.into_iter().collect();
                assert_eq!(fast, brute, "sets at n={n} k={k}");
            }
        }
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(p(3, &[&[1, 2], &[3]]).restrict(2).unwrap(), p(2, &[&[1, 2]]));
        assert_eq!(
            p(3, &[&[1, 3], &[2]]).restrict(2).unwrap(),
            p(2, &[&[1], &[2]])
        );
        let b = p(4, &[&[1, 4], &[2, 3]]);
        assert_eq!(b.restrict(4).unwrap(), b);
        assert!(b.restrict(0).is_err());
        assert!(b.restrict(5).is_err());
    }

    #[test]
    fn restrict_composes() {
        for n in 1..=6 {
            for b in enumerate(n, n) {
                for m in 1..=n {
                    for l in 1..=m {
                        assert_eq!(
                            b.restrict(m).unwrap().restrict(l).unwrap(),
                            b.restrict(l).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn extensions_examples() {
        let one = p(2, &[&[1, 2]]);
        let exts = one.extensions(2);
        assert_eq!(exts, vec![p(3, &[&[1, 2, 3]]), p(3, &[&[1, 2], &[3]])]);

        let two = p(2, &[&[1], &[2]]);
        let exts = two.extensions(2);
        assert_eq!(exts.len(), 2); // singleton blocked at the cap
        assert!(exts.contains(&p(3, &[&[1, 3], &[2]])));
        assert!(exts.contains(&p(3, &[&[1], &[2, 3]])));

        assert_eq!(two.extensions(3).len(), 3);
    }

    #[test]
    fn extensions_restrict_adjunction() {
        for n in 1..=5 {
            for k in 1..=4 {
                for b in enumerate(n, k) {
                    for e in b.extensions(k) {
                        assert_eq!(e.restrict(n).unwrap(), b);
                    }
                    // every (n+1)-partition with <= k blocks appears among
                    // the extensions of its own restriction
                }
                for c in enumerate(n + 1, k) {
                    let b = c.restrict(n).unwrap();
                    assert!(b.extensions(k).contains(&c));
                }
            }
        }
    }

    #[test]
    fn meet_examples() {
        let a = p(2, &[&[1, 2]]);
        let b = p(2, &[&[1], &[2]]);
        assert_eq!(a.meet(&b).unwrap(), b);
        assert_eq!(a.meet(&a).unwrap(), a);
        assert_eq!(
            p(4, &[&[1, 2, 3], &[4]]).meet(&p(4, &[&[1, 2], &[3, 4]])).unwrap(),
            p(4, &[&[1, 2], &[3], &[4]])
        );
        assert!(a.meet(&p(3, &[&[1, 2, 3]])).is_err());
    }

    #[test]
    fn meet_laws() {
        let k = 3;
        for b1 in enumerate(4, k) {
            for b2 in enumerate(4, k) {
                let m12 = b1.meet(&b2).unwrap();
                assert_eq!(m12, b2.meet(&b1).unwrap());
                assert!(m12.num_blocks() <= (k * k).min(4));
                assert_eq!(m12.meet(&b1).unwrap(), m12); // refines b1
                for b3 in enumerate(4, k) {
                    assert_eq!(
                        m12.meet(&b3).unwrap(),
                        b1.meet(&b2.meet(&b3).unwrap()).unwrap()
                    );
                }
                assert_eq!(
                    m12.size_profile(),
                    b1.meet_profile(&b2).unwrap()
                );
            }
        }
    }

    #[test]
    fn apply_permutation_examples() {
        let b = p(3, &[&[1, 2], &[3]]);
        assert_eq!(b.apply_permutation(&Permutation::identity(3)).unwrap(), b);
        let swap = Permutation::transposition(3, 2, 3).unwrap();
        assert_eq!(
            b.apply_permutation(&swap).unwrap(),
            p(3, &[&[1, 3], &[2]])
        );
        let sigma = Permutation::from_mapping(vec![2, 3, 1]).unwrap();
        let round_trip = b
            .apply_permutation(&sigma)
            .unwrap()
            .apply_permutation(&sigma.inverse())
            .unwrap();
        assert_eq!(round_trip, b);
        assert!(b.apply_permutation(&Permutation::identity(4)).is_err());
    }

    #[test]
    fn prefix_distance_examples() {
        let a = p(3, &[&[1, 2], &[3]]);
        let b = p(3, &[&[1, 2, 3]]);
        assert_eq!(a.prefix_agreement(&b).unwrap(), 2);
        assert_eq!(a.prefix_distance(&b).unwrap(), 0.5);

        let c = p(2, &[&[1], &[2]]);
        let d = p(2, &[&[1, 2]]);
        assert_eq!(c.prefix_distance(&d).unwrap(), 1.0);

        assert_eq!(a.prefix_distance(&a).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn restrict_to_relabels_by_rank() {
        let b = p(5, &[&[1, 4], &[2, 3, 5]]);
        let r = b.restrict_to(&[2, 4, 5]);
        // 2 -> 1, 4 -> 2, 5 -> 3; blocks {4} and {2,5} become {2} and {1,3}
        assert_eq!(r, p(3, &[&[1, 3], &[2]]));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let b = p(3, &[&[1, 3], &[2]]);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"n":3,"blocks":[[1,3],[2]]}"#);
        let back: SetPartition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<SetPartition>(r#"{"n":3,"blocks":[[1,2]]}"#).is_err());
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::from_mapping(vec![1, 1]).is_err());
        assert!(Permutation::from_mapping(vec![0, 1]).is_err());
        assert!(Permutation::from_mapping(vec![]).is_err());
        assert!(Permutation::transposition(3, 0, 2).is_err());
        let mut rng = RngStream::new(1, 0);
        for _ in 0..50 {
            let s = Permutation::sample_uniform(5, &mut rng);
            Permutation::from_mapping((1..=5).map(|e| s.apply(e)).collect()).unwrap();
        }
    }
}
