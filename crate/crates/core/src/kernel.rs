//! The discrete-time transition kernel on partitions with at most `k`
//! blocks: the matrix-construction sampler, the exact transition
//! probability, alpha-permanents, and the closed form for the
//! Dirichlet-mixing subfamily.
//!
//! One step from `B` places, independently per block `B_i`, a fresh paintbox
//! coloring of the elements of `B_i`, then scatters the color classes of
//! each row into `k` shared columns through an independent uniform
//! permutation. The next state is the set of nonempty column unions. The
//! resulting law is
//!
//! `p(B, B') = (k!/(k-#B')!) * prod_{b in B} (k-#B'_b)!/k! * rho_nu(B'_b)`
//!
//! with `B'_b` the restriction of `B'` to block `b`.

use std::collections::HashMap;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::mass::NuMeasure;
use crate::paintbox::{falling_factorial, rho_nu_sizes, sample_colors};
use crate::partition::{enumerate, state_count, Permutation, SetPartition};
use crate::rng::RngStream;

/// Dense kernels above this many states are rejected.
pub const MAX_STATES: usize = 50_000;
/// Guard for the factorial-cost permanent.
pub const MAX_PERMANENT_DIM: usize = 10;

/// Independent uniform permutations of `[k]`, one per row of the
/// matrix construction.
#[derive(Debug, Clone)]
pub struct BlockPermutationDraw {
    sigmas: Vec<Permutation>,
}

impl BlockPermutationDraw {
    pub fn sample(count: usize, k: usize, rng: &mut RngStream) -> Self {
        let sigmas = (0..count).map(|_| Permutation::sample_uniform(k, rng)).collect();
        Self { sigmas }
    }

    pub fn from_permutations(sigmas: Vec<Permutation>) -> Result<Self> {
        let Some(first) = sigmas.first() else {
            return Err(Error::InvalidPermutation("need at least one permutation".into()));
        };
        let k = first.n();
        if sigmas.iter().any(|s| s.n() != k) {
            return Err(Error::InvalidPermutation("mixed permutation sizes".into()));
        }
        Ok(Self { sigmas })
    }

    pub fn sigmas(&self) -> &[Permutation] {
        &self.sigmas
    }
}

/// One step of the matrix construction from `b`, drawing a paintbox per
/// block of `b` and a uniform column permutation per row.
pub fn step_sample(b: &SetPartition, nu: &NuMeasure, k: usize, rng: &mut RngStream) -> Result<SetPartition> {
    step_sample_with_cells(b, nu, k, rng).map(|(next, _)| next)
}

/// As [`step_sample`], also returning the nonempty matrix cells as a
/// partition; the cells always realize the meet of the old and new states.
pub fn step_sample_with_cells(
    b: &SetPartition,
    nu: &NuMeasure,
    k: usize,
    rng: &mut RngStream,
) -> Result<(SetPartition, SetPartition)> {
    if b.num_blocks() > k {
        return Err(Error::TooManyBlocks { blocks: b.num_blocks(), k });
    }
    if nu.dimension() > k {
        return Err(Error::InvalidParameter(format!(
            "mixing measure lives on a {}-simplex, above k = {k}",
            nu.dimension()
        )));
    }
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for block in b.blocks() {
        let s = nu.sample(rng);
        let colors = sample_colors(&s, block.len(), rng);
        let sigma_inv = Permutation::sample_uniform(k, rng).inverse();
        let mut row_cells: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (&e, &c) in block.iter().zip(&colors) {
            let col = sigma_inv.apply(c);
            columns[col - 1].push(e);
            row_cells[col - 1].push(e);
        }
        cells.extend(row_cells.into_iter().filter(|c| !c.is_empty()));
    }
    let next = SetPartition::new(b.n(), columns.into_iter().filter(|c| !c.is_empty()).collect())?;
    let cells = SetPartition::new(b.n(), cells)?;
    Ok((next, cells))
}

/// Exact transition probability from `b` to `b2` under the mixing
/// measure `nu` with `k` columns.
pub fn transition_exact(b: &SetPartition, b2: &SetPartition, nu: &NuMeasure, k: usize) -> Result<f64> {
    let mut memo = HashMap::new();
    transition_exact_memo(b, b2, nu, k, &mut memo)
}

fn transition_exact_memo(
    b: &SetPartition,
    b2: &SetPartition,
    nu: &NuMeasure,
    k: usize,
    rho_memo: &mut HashMap<Vec<usize>, f64>,
) -> Result<f64> {
    if b.n() != b2.n() {
        return Err(Error::DimensionMismatch(b.n(), b2.n()));
    }
    if b.num_blocks() > k {
        return Err(Error::TooManyBlocks { blocks: b.num_blocks(), k });
    }
    if nu.dimension() > k {
        return Err(Error::InvalidParameter(format!(
            "mixing measure lives on a {}-simplex, above k = {k}",
            nu.dimension()
        )));
    }
    if b2.num_blocks() > k {
        return Ok(0.0); // unreachable under a k-column construction
    }
    let b2_assignment = b2.block_assignment();
    let mut factors: Vec<f64> = Vec::with_capacity(b.num_blocks());
    let mut counts = vec![0usize; b2.num_blocks()];
    for block in b.blocks() {
        for &e in block {
            counts[b2_assignment[e - 1]] += 1;
        }
        let mut sizes: Vec<usize> = Vec::new();
        for c in counts.iter_mut() {
            if *c > 0 {
                sizes.push(*c);
                *c = 0;
            }
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let m_b = sizes.len();
        let rho = match rho_memo.entry(sizes) {
            std::collections::hash_map::Entry::Occupied(e) => *e.get(),
            std::collections::hash_map::Entry::Vacant(v) => {
                let value = rho_nu_sizes(nu, v.key());
                *v.insert(value)
            }
        };
        factors.push(rho / falling_factorial(k, m_b));
    }
    // multiply in a size-independent order so relabeled inputs agree exactly
    factors.sort_unstable_by(|a, b| a.total_cmp(b));
    let product: f64 = factors.iter().product();
    Ok(falling_factorial(k, b2.num_blocks()) * product)
}

/// Permutation-sum alpha-permanent: `sum_sigma alpha^{#cycles} prod M[i][sigma(i)]`.
pub fn alpha_permanent(matrix: &[Vec<f64>], alpha: f64) -> Result<f64> {
    let n = matrix.len();
    if n > MAX_PERMANENT_DIM {
        return Err(Error::MatrixTooLarge { n, limit: MAX_PERMANENT_DIM });
    }
    if matrix.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("matrix is not square".into()));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    loop {
        let mut product = 1.0;
        for (i, &j) in perm.iter().enumerate() {
            product *= matrix[i][j];
        }
        total += alpha.powi(cycle_count(&perm) as i32) * product;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(total)
}

fn cycle_count(perm: &[usize]) -> usize {
    let mut visited = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if visited[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            i = perm[i];
        }
    }
    cycles
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Boolean block matrix of a partition: `M[i][j] = 1` iff `i+1 ~ j+1`.
pub fn partition_matrix(b: &SetPartition) -> Vec<Vec<f64>> {
    let assignment = b.block_assignment();
    let n = b.n();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                matrix[i][j] = 1.0;
            }
        }
    }
    matrix
}

fn ln_rising(base: f64, size: usize) -> f64 {
    ln_gamma(base + size as f64) - ln_gamma(base)
}

fn ln_permanent_sizes(alpha: f64, sizes: &[usize]) -> f64 {
    sizes.iter().map(|&sz| ln_rising(alpha, sz)).sum()
}

/// Alpha-permanent of the block matrix of `b`, which factorizes into a
/// product of rising factorials over block sizes; evaluated in log space.
pub fn alpha_permanent_partition(b: &SetPartition, alpha: f64) -> f64 {
    assert!(alpha > 0.0);
    ln_permanent_sizes(alpha, &b.size_profile()).exp()
}

/// Closed-form transition probability of the `(alpha, k)` chain:
/// `(k!/(k-#B')!) per_{alpha/k}(B meet B') / per_alpha(B)`.
pub fn transition_alpha_k(b: &SetPartition, b2: &SetPartition, alpha: f64, k: usize) -> Result<f64> {
    if b.n() != b2.n() {
        return Err(Error::DimensionMismatch(b.n(), b2.n()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    if b.num_blocks() > k {
        return Err(Error::TooManyBlocks { blocks: b.num_blocks(), k });
    }
    if b2.num_blocks() > k {
        return Ok(0.0);
    }
    let meet_sizes = b.meet_profile(b2)?;
    let ln_ratio = ln_permanent_sizes(alpha / k as f64, &meet_sizes)
        - ln_permanent_sizes(alpha, &b.size_profile());
    Ok(falling_factorial(k, b2.num_blocks()) * ln_ratio.exp())
}

/// The dense transition matrix over the enumerated state space.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    n: usize,
    k: usize,
    states: Vec<SetPartition>,
    probs: Vec<Vec<f64>>,
}

impl TransitionKernel {
    /// Full matrix of exact transition probabilities under `nu`.
    pub fn build(n: usize, k: usize, nu: &NuMeasure) -> Result<Self> {
        Self::build_with(n, k, |b, b2, memo| transition_exact_memo(b, b2, nu, k, memo))
    }

    /// Full matrix of the `(alpha, k)` closed form.
    pub fn build_alpha(n: usize, k: usize, alpha: f64) -> Result<Self> {
        Self::build_with(n, k, |b, b2, _| transition_alpha_k(b, b2, alpha, k))
    }

    fn build_with(
        n: usize,
        k: usize,
        mut entry: impl FnMut(&SetPartition, &SetPartition, &mut HashMap<Vec<usize>, f64>) -> Result<f64>,
    ) -> Result<Self> {
        let count = state_count(n, k);
        if count > MAX_STATES as u128 {
            return Err(Error::StateSpaceTooLarge { states: count, limit: MAX_STATES });
        }
        let states = enumerate(n, k);
        let mut memo = HashMap::new();
        let mut probs = Vec::with_capacity(states.len());
        for b in &states {
            let mut row = Vec::with_capacity(states.len());
            for b2 in &states {
                row.push(entry(b, b2, &mut memo)?);
            }
            probs.push(row);
        }
        Ok(Self { n, k, states, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn states(&self) -> &[SetPartition] {
        &self.states
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from][to]
    }

    pub fn index_map(&self) -> HashMap<SetPartition, usize> {
        self.states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect()
    }

    /// Largest deviation of any row sum from 1.
    pub fn row_sum_defect(&self) -> f64 {
        self.probs
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest change of any entry under a simultaneous relabeling of the
    /// ground set by an adjacent transposition. The evaluators are built to
    /// make this exactly zero.
    pub fn exchangeability_defect(&self) -> f64 {
        let index = self.index_map();
        let mut defect = 0.0f64;
        for t in 1..self.n {
            let sigma = Permutation::transposition(self.n, t, t + 1).expect("valid transposition");
            let image: Vec<usize> = self
                .states
                .iter()
                .map(|b| index[&b.apply_permutation(&sigma).expect("same n")])
                .collect();
            for i in 0..self.states.len() {
                for j in 0..self.states.len() {
                    let d = (self.probs[image[i]][image[j]] - self.probs[i][j]).abs();
                    defect = defect.max(d);
                }
            }
        }
        defect
    }
}

/// Largest violation of the projection identity between levels `n` and
/// `n+1`: the probability of a transition equals the total probability of
/// its one-element extensions.
pub fn check_consistency(n: usize, k: usize, nu: &NuMeasure) -> Result<f64> {
    let lower = TransitionKernel::build(n, k, nu)?;
    let upper = TransitionKernel::build(n + 1, k, nu)?;
    consistency_defect(&lower, &upper)
}

pub(crate) fn consistency_defect(lower: &TransitionKernel, upper: &TransitionKernel) -> Result<f64> {
    if upper.n() != lower.n() + 1 || upper.k() != lower.k() {
        return Err(Error::DimensionMismatch(lower.n() + 1, upper.n()));
    }
    let k = lower.k();
    let upper_index = upper.index_map();
    let extension_rows: Vec<Vec<usize>> = lower
        .states()
        .iter()
        .map(|b| b.extensions(k).iter().map(|e| upper_index[e]).collect())
        .collect();
    let mut defect = 0.0f64;
    for (i, _) in lower.states().iter().enumerate() {
        for &star in &extension_rows[i] {
            for (j, _) in lower.states().iter().enumerate() {
                let total: f64 = extension_rows[j].iter().map(|&e| upper.prob(star, e)).sum();
                defect = defect.max((lower.prob(i, j) - total).abs());
            }
        }
    }
    Ok(defect)
}
