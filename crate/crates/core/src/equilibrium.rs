//! Stationary distributions of the finite-level kernels: dense linear
//! solve with a power-iteration cross-check, plus the verification suite
//! for projection consistency, exchangeability, and the reversibility of
//! the `(alpha, k)` family.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{transition_alpha_k, TransitionKernel};
use crate::paintbox::eppf_dirichlet_multinomial;
use crate::partition::{Permutation, SetPartition};
use crate::tol;

/// A probability vector over the enumerated state space, fixed by its kernel.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    n: usize,
    k: usize,
    states: Vec<SetPartition>,
    weights: Vec<f64>,
}

impl StationaryDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn states(&self) -> &[SetPartition] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, b: &SetPartition) -> Option<f64> {
        self.states.iter().position(|s| s == b).map(|i| self.weights[i])
    }

    /// `max_i |(theta P)_i - theta_i|` for a kernel over the same states.
    pub fn fixed_point_residual(&self, kernel: &TransitionKernel) -> f64 {
        let mut residual = 0.0f64;
        for j in 0..self.weights.len() {
            let image: f64 = (0..self.weights.len())
                .map(|i| self.weights[i] * kernel.prob(i, j))
                .sum();
            residual = residual.max((image - self.weights[j]).abs());
        }
        residual
    }
}

/// True when the kernel's transition graph is one aperiodic communicating
/// class, the regime in which the fixed point is unique.
fn is_uniquely_ergodic(kernel: &TransitionKernel) -> bool {
    let size = kernel.states().len();
    let forward = reachable(size, |i, j| kernel.prob(i, j) > 0.0);
    let backward = reachable(size, |i, j| kernel.prob(j, i) > 0.0);
    let connected = forward.iter().all(|&r| r) && backward.iter().all(|&r| r);
    let lazy = (0..size).any(|i| kernel.prob(i, i) > 0.0);
    connected && lazy
}

fn reachable(size: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; size];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..size {
            if !seen[j] && edge(i, j) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// The unique left fixed vector of the kernel, by dense LU solve of
/// `(P^T - I) theta = 0` with one row replaced by the normalization.
///
/// Fails when unique ergodicity cannot be established from the kernel
/// (a mixing measure degenerate at `(1, 0, …, 0)` produces an absorbing
/// chain); [`power_iteration`] still applies there.
pub fn solve_stationary(kernel: &TransitionKernel) -> Result<StationaryDistribution> {
    let size = kernel.states().len();
    if !is_uniquely_ergodic(kernel) {
        return Err(Error::UniquenessNotGuaranteed(
            "kernel is not irreducible and aperiodic; the mixing measure may be degenerate".into(),
        ));
    }
    let mut a = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            a[(i, j)] = kernel.prob(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    let mut rhs = DVector::<f64>::zeros(size);
    for j in 0..size {
        a[(size - 1, j)] = 1.0;
    }
    rhs[size - 1] = 1.0;
    let theta = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular stationary system".into()))?;
    let mut weights: Vec<f64> = theta.iter().map(|&w| w.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let dist = StationaryDistribution {
        n: kernel.n(),
        k: kernel.k(),
        states: kernel.states().to_vec(),
        weights,
    };
    let residual = dist.fixed_point_residual(kernel);
    if residual > tol::STATIONARY_RESIDUAL {
        return Err(Error::NumericalFailure(format!(
            "stationary residual {residual} above {}",
            tol::STATIONARY_RESIDUAL
        )));
    }
    Ok(dist)
}

/// Left fixed vector by repeated application of the kernel from the uniform
/// start; the independent cross-check for [`solve_stationary`], and the
/// fallback a caller may use on a kernel that fails the uniqueness test.
pub fn power_iteration(kernel: &TransitionKernel, max_steps: usize, tolerance: f64) -> StationaryDistribution {
    let size = kernel.states().len();
    let mut theta = vec![1.0 / size as f64; size];
    for _ in 0..max_steps {
        let mut next = vec![0.0f64; size];
        for i in 0..size {
            let w = theta[i];
            if w == 0.0 {
                continue;
            }
            for j in 0..size {
                next[j] += w * kernel.prob(i, j);
            }
        }
        let total: f64 = next.iter().sum();
        for v in &mut next {
            *v /= total;
        }
        let delta = theta
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = next;
        if delta < tolerance {
            break;
        }
    }
    StationaryDistribution {
        n: kernel.n(),
        k: kernel.k(),
        states: kernel.states().to_vec(),
        weights: theta,
    }
}

/// Largest violation of `theta_n(B) = sum over extensions of theta_{n+1}`.
pub fn check_projection_consistency(
    theta_np1: &StationaryDistribution,
    theta_n: &StationaryDistribution,
) -> Result<f64> {
    if theta_np1.n() != theta_n.n() + 1 {
        return Err(Error::DimensionMismatch(theta_n.n() + 1, theta_np1.n()));
    }
    if theta_np1.k() != theta_n.k() {
        return Err(Error::DimensionMismatch(theta_n.k(), theta_np1.k()));
    }
    let index: std::collections::HashMap<&SetPartition, usize> = theta_np1
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut defect = 0.0f64;
    for (i, b) in theta_n.states().iter().enumerate() {
        let total: f64 = b
            .extensions(theta_n.k())
            .iter()
            .map(|e| theta_np1.weights()[index[e]])
            .sum();
        defect = defect.max((theta_n.weights()[i] - total).abs());
    }
    Ok(defect)
}

/// Largest relative violation of detailed balance for the `(alpha, k)`
/// family against its Dirichlet-multinomial law:
/// `rho(B) p(B, B') = rho(B') p(B', B)`.
pub fn check_detailed_balance(n: usize, k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    let states = crate::partition::enumerate(n, k);
    let mut defect = 0.0f64;
    for b in &states {
        for b2 in &states {
            let lhs = eppf_dirichlet_multinomial(b, alpha, k) * transition_alpha_k(b, b2, alpha, k)?;
            let rhs = eppf_dirichlet_multinomial(b2, alpha, k) * transition_alpha_k(b2, b, alpha, k)?;
            let scale = lhs.abs().max(rhs.abs());
            if scale > 0.0 {
                defect = defect.max((lhs - rhs).abs() / scale);
            }
        }
    }
    Ok(defect)
}

/// Largest change of any weight under an adjacent transposition of the
/// ground set; transpositions generate the full symmetric group.
pub fn check_exchangeability(theta: &StationaryDistribution) -> f64 {
    let index: std::collections::HashMap<&SetPartition, usize> = theta
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut defect = 0.0f64;
    for t in 1..theta.n() {
        let sigma = Permutation::transposition(theta.n(), t, t + 1).expect("valid transposition");
        for (i, b) in theta.states().iter().enumerate() {
            let image = b.apply_permutation(&sigma).expect("same n");
            let j = index[&image];
            defect = defect.max((theta.weights()[i] - theta.weights()[j]).abs());
        }
    }
    defect
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass::{MassPartition, NuMeasure};
    use crate::paintbox::eppf_dirichlet_multinomial;

    fn pd(alpha: f64, k: usize) -> NuMeasure {
        NuMeasure::pitman_dirichlet(alpha, k).unwrap()
    }

    #[test]
    fn single_state_chain() {
        let kernel = TransitionKernel::build_alpha(1, 2, 1.0).unwrap();
        let theta = solve_stationary(&kernel).unwrap();
        assert_eq!(theta.weights(), &[1.0]);
    }

    #[test]
    fn two_state_alpha_chain_fixed_point() {
        let kernel = TransitionKernel::build_alpha(2, 2, 1.0).unwrap();
        let theta = solve_stationary(&kernel).unwrap();
        assert!((theta.weights()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((theta.weights()[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(theta.fixed_point_residual(&kernel) < 1e-10);
    }

    #[test]
    fn power_iteration_agrees_with_linear_solve() {
        for &(n, k, alpha) in &[(2usize, 2usize, 1.0), (3, 2, 0.5), (4, 3, 2.0)] {
            let kernel = TransitionKernel::build_alpha(n, k, alpha).unwrap();
            let solved = solve_stationary(&kernel).unwrap();
            let powered = power_iteration(&kernel, 100_000, 1e-14);
            for (a, b) in solved.weights().iter().zip(powered.weights()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_measure_is_rejected() {
        let point = NuMeasure::discrete(vec![(1.0, MassPartition::new(vec![1.0, 0.0]).unwrap())])
            .unwrap();
        let kernel = TransitionKernel::build(3, 2, &point).unwrap();
        assert!(matches!(
            solve_stationary(&kernel),
            Err(Error::UniquenessNotGuaranteed(_))
        ));
        // power iteration still finds the absorbing fixed point
        let theta = power_iteration(&kernel, 10_000, 1e-14);
        let index = kernel.index_map();
        let one = index[&SetPartition::one_block(3)];
        assert!((theta.weights()[one] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solved_weights_match_the_dirichlet_multinomial_law() {
        for &(n, k, alpha) in &[(2usize, 2usize, 1.0), (3, 2, 1.0), (4, 2, 0.5), (3, 3, 2.0)] {
            let kernel = TransitionKernel::build_alpha(n, k, alpha).unwrap();
            let theta = solve_stationary(&kernel).unwrap();
            for (i, b) in theta.states().iter().enumerate() {
                let expect = eppf_dirichlet_multinomial(b, alpha, k);
                assert!(
                    (theta.weights()[i] - expect).abs() < 1e-8,
                    "n={n} k={k} alpha={alpha} b={b}"
                );
            }
        }
    }

    #[test]
    fn projection_consistency_examples() {
        let k2 = TransitionKernel::build_alpha(2, 2, 1.0).unwrap();
        let k3 = TransitionKernel::build_alpha(3, 2, 1.0).unwrap();
        let t2 = solve_stationary(&k2).unwrap();
        let t3 = solve_stationary(&k3).unwrap();
        assert!(check_projection_consistency(&t3, &t2).unwrap() < 1e-8);

        let mix = NuMeasure::discrete(vec![
            (0.5, MassPartition::new(vec![0.6, 0.4]).unwrap()),
            (0.5, MassPartition::new(vec![1.0, 0.0]).unwrap()),
        ])
        .unwrap();
        for n in 1..=3 {
            let lo = solve_stationary(&TransitionKernel::build(n, 2, &mix).unwrap()).unwrap();
            let hi = solve_stationary(&TransitionKernel::build(n + 1, 2, &mix).unwrap()).unwrap();
            assert!(check_projection_consistency(&hi, &lo).unwrap() < 1e-8);
        }

        assert!(check_projection_consistency(&t3, &t3).is_err());
    }

    #[test]
    fn detailed_balance_examples() {
        // (2/3)(1/4) = (1/3)(1/2)
        assert!(check_detailed_balance(2, 2, 1.0).unwrap() < 1e-14);
        for &(n, k) in &[(3usize, 2usize), (4, 3), (5, 3)] {
            for alpha in [0.5, 1.0, 2.0] {
                let defect = check_detailed_balance(n, k, alpha).unwrap();
                assert!(defect < 1e-12, "n={n} k={k} alpha={alpha} defect={defect}");
            }
        }
        assert!(check_detailed_balance(2, 2, -1.0).is_err());
    }

    #[test]
    fn exchangeability_of_solved_distributions() {
        let kernel = TransitionKernel::build_alpha(3, 2, 1.0).unwrap();
        let theta = solve_stationary(&kernel).unwrap();
        assert!(check_exchangeability(&theta) < 1e-12);
        // the three two-one splits carry equal weight
        let splits: Vec<f64> = theta
            .states()
            .iter()
            .zip(theta.weights())
            .filter(|(b, _)| b.num_blocks() == 2)
            .map(|(_, w)| *w)
            .collect();
        assert_eq!(splits.len(), 3);
        assert!(splits.iter().all(|w| (w - splits[0]).abs() < 1e-12));

        let trivial = solve_stationary(&TransitionKernel::build_alpha(1, 2, 1.0).unwrap()).unwrap();
        assert_eq!(check_exchangeability(&trivial), 0.0);
    }

    /// Total-variation convergence from every start within 200 steps.
    #[test]
    fn ergodic_convergence_on_the_small_chain() {
        let kernel = TransitionKernel::build(3, 2, &pd(1.0, 2)).unwrap();
        let theta = solve_stationary(&kernel).unwrap();
        let size = kernel.states().len();
        for start in 0..size {
            let mut dist = vec![0.0f64; size];
            dist[start] = 1.0;
            for _ in 0..200 {
                let mut next = vec![0.0f64; size];
                for i in 0..size {
                    for j in 0..size {
                        next[j] += dist[i] * kernel.prob(i, j);
                    }
                }
                dist = next;
            }
            let tv: f64 = dist
                .iter()
                .zip(theta.weights())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 1e-6, "start {start}: tv = {tv}");
        }
    }
}
