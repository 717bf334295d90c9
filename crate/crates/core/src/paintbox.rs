//! The paintbox map: color integers i.i.d. by a mass partition, read off the
//! induced set partition, and evaluate the resulting partition probabilities
//! exactly for both mixing-measure variants.
//!
//! Every formula here depends on a partition only through its block sizes.
//! Evaluation always runs over the descending size profile so relabeled
//! partitions produce bit-identical values.

use statrs::function::gamma::ln_gamma;

use crate::mass::{MassPartition, NuMeasure};
use crate::partition::SetPartition;
use crate::rng::RngStream;

/// The i.i.d. colors behind one paintbox draw, 1-indexed in `[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorSequence {
    colors: Vec<usize>,
}

impl ColorSequence {
    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    /// The partition whose blocks are the equal-color classes.
    pub fn partition(&self) -> SetPartition {
        SetPartition::from_labels(&self.colors)
    }
}

/// Draws `n` i.i.d. colors with `P(color = j) = s_j` and the induced
/// partition (equal colors share a block).
pub fn paintbox_sample(s: &MassPartition, n: usize, rng: &mut RngStream) -> (SetPartition, ColorSequence) {
    let colors = sample_colors(s, n, rng);
    let seq = ColorSequence { colors };
    (seq.partition(), seq)
}

/// A partition of `[n]` distributed as the `nu`-mixture of paintboxes:
/// draw `s` from `nu`, then color.
pub fn paintbox_sample_nu(nu: &NuMeasure, n: usize, rng: &mut RngStream) -> SetPartition {
    let s = nu.sample(rng);
    paintbox_sample(&s, n, rng).0
}

pub(crate) fn sample_colors(s: &MassPartition, n: usize, rng: &mut RngStream) -> Vec<usize> {
    use rand::Rng;
    assert!(n >= 1);
    let cumulative: Vec<f64> = s
        .masses()
        .iter()
        .scan(0.0, |acc, &m| {
            *acc += m;
            Some(*acc)
        })
        .collect();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative
                .iter()
                .position(|&c| u < c)
                .map(|j| j + 1)
                .unwrap_or(s.len())
        })
        .collect()
}

/// Probability of `b` under a single paintbox `s`: the sum over injective
/// color assignments of the blocks of the products `s_c^{#block}`.
pub fn rho_point(s: &MassPartition, b: &SetPartition) -> f64 {
    rho_point_sizes(s.masses(), &b.size_profile())
}

/// Probability of `b` under a discrete mixture of paintboxes.
pub fn rho_discrete(b: &SetPartition, atoms: &[(f64, MassPartition)]) -> f64 {
    let sizes = b.size_profile();
    atoms
        .iter()
        .map(|(w, s)| w * rho_point_sizes(s.masses(), &sizes))
        .sum()
}

fn rho_point_sizes(masses: &[f64], sizes: &[usize]) -> f64 {
    if sizes.len() > masses.len() {
        return 0.0; // no injective assignment exists
    }
    let mut used = vec![false; masses.len()];
    injective_sum(masses, sizes, &mut used)
}

fn injective_sum(masses: &[f64], sizes: &[usize], used: &mut [bool]) -> f64 {
    let Some((&size, rest)) = sizes.split_first() else {
        return 1.0;
    };
    let mut total = 0.0;
    for c in 0..masses.len() {
        if used[c] || masses[c] == 0.0 {
            continue;
        }
        used[c] = true;
        total += masses[c].powi(size as i32) * injective_sum(masses, rest, used);
        used[c] = false;
    }
    total
}

/// `k! / (k - m)!` as a float; exact for the small `k` in scope.
pub(crate) fn falling_factorial(k: usize, m: usize) -> f64 {
    debug_assert!(m <= k);
    ((k - m + 1)..=k).map(|v| v as f64).product()
}

fn ln_rising(base: f64, size: usize) -> f64 {
    ln_gamma(base + size as f64) - ln_gamma(base)
}

/// Paintbox probability of `b` when the mixing measure is the ranked
/// symmetric Dirichlet with `k` coordinates of concentration `alpha/k`:
/// `(k!/(k-#B)!) * prod_b (alpha/k)^{rising #b} / alpha^{rising n}`.
pub fn eppf_alpha_k(b: &SetPartition, alpha: f64, k: usize) -> f64 {
    assert!(alpha > 0.0 && k >= 1);
    let m = b.num_blocks();
    if m > k {
        return 0.0;
    }
    let beta = alpha / k as f64;
    let ln_num: f64 = b.size_profile().iter().map(|&sz| ln_rising(beta, sz)).sum();
    falling_factorial(k, m) * (ln_num - ln_rising(alpha, b.n())).exp()
}

/// The Dirichlet-multinomial partition law with parameter `(alpha, k)`:
/// `(k!/(k-#B)!) * prod_b alpha^{rising #b} / (k alpha)^{rising n}`.
/// This is the stationary and reversible law of the `(alpha, k)` chain.
pub fn eppf_dirichlet_multinomial(b: &SetPartition, alpha: f64, k: usize) -> f64 {
    assert!(alpha > 0.0 && k >= 1);
    let m = b.num_blocks();
    if m > k {
        return 0.0;
    }
    let ln_num: f64 = b.size_profile().iter().map(|&sz| ln_rising(alpha, sz)).sum();
    falling_factorial(k, m) * (ln_num - ln_rising(k as f64 * alpha, b.n())).exp()
}

/// Probability of `b` under the paintbox mixture `nu`.
pub fn rho_nu(b: &SetPartition, nu: &NuMeasure) -> f64 {
    rho_nu_sizes(nu, &b.size_profile())
}

/// Same as [`rho_nu`] on a descending block-size profile; the profile is all
/// the formulas need, which lets kernel construction memoize on it.
pub(crate) fn rho_nu_sizes(nu: &NuMeasure, sizes: &[usize]) -> f64 {
    match nu {
        NuMeasure::Discrete(atoms) => atoms
            .iter()
            .map(|(w, s)| w * rho_point_sizes(s.masses(), sizes))
            .sum(),
        NuMeasure::PitmanDirichlet { alpha, k } => {
            if sizes.len() > *k {
                return 0.0;
            }
            let beta = alpha / *k as f64;
            let n: usize = sizes.iter().sum();
            let ln_num: f64 = sizes.iter().map(|&sz| ln_rising(beta, sz)).sum();
            falling_factorial(*k, sizes.len()) * (ln_num - ln_rising(*alpha, n)).exp()
        }
    }
}
