//! The continuous-time process: jump rates `lambda * p(B, B')` off the
//! diagonal, and two path-equivalent simulation drivers — the embedded
//! chain with exponential holds, and a literal event-stream driver in which
//! a rate-`lambda` Poisson clock delivers `k` fresh paintbox partitions and
//! `k` uniform column permutations per event.
//!
//! The event-stream driver is the one that couples: two chains replaying
//! one shared [`EventStream`] preserve agreement of their restrictions to
//! any prefix on which their starts agree.

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;
use crate::mass::NuMeasure;
use crate::paintbox::sample_colors;
use crate::partition::{Permutation, SetPartition};
use crate::rng::RngStream;

/// The generator of the finite-level process: `lambda * p(B, B')` off the
/// diagonal, `lambda * (p(B, B) - 1)` on it.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    n: usize,
    k: usize,
    lambda: f64,
    states: Vec<SetPartition>,
    rates: Vec<Vec<f64>>,
}

impl RateMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn states(&self) -> &[SetPartition] {
        &self.states
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.rates
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    /// Largest deviation of any row sum from 0.
    pub fn row_sum_defect(&self) -> f64 {
        self.rates
            .iter()
            .map(|row| row.iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Scales a transition kernel into a rate matrix with overall intensity
/// `lambda`.
pub fn build_rate_matrix(kernel: &TransitionKernel, lambda: f64) -> Result<RateMatrix> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    let rates = kernel
        .probs()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &p)| if i == j { lambda * (p - 1.0) } else { lambda * p })
                .collect()
        })
        .collect();
    Ok(RateMatrix {
        n: kernel.n(),
        k: kernel.k(),
        lambda,
        states: kernel.states().to_vec(),
        rates,
    })
}

/// A càdlàg path restricted to `[n]`: the initial state plus the effective
/// jumps. `total_events` counts every atom the driver processed, including
/// those whose construction reproduced the current state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: SetPartition,
    pub jumps: Vec<(f64, SetPartition)>,
    #[serde(skip, default)]
    pub total_events: usize,
}

impl Trajectory {
    /// State at time `t` (the path is right-continuous).
    pub fn state_at(&self, t: f64) -> &SetPartition {
        let mut current = &self.initial;
        for (time, state) in &self.jumps {
            if *time > t {
                break;
            }
            current = state;
        }
        current
    }

    pub fn final_state(&self) -> &SetPartition {
        self.jumps.last().map(|(_, s)| s).unwrap_or(&self.initial)
    }
}

/// One atom of the driving point process: `k` paintbox color sequences over
/// the window `[n]` and `k` uniform permutations of `[k]`.
#[derive(Debug, Clone)]
pub struct Event {
    time: f64,
    colorings: Vec<Vec<usize>>,
    column_of_color: Vec<Permutation>,
}

impl Event {
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Applies the matrix construction to `state`: the element `e` of block
    /// `i` moves to the column its row's permutation assigns to its color,
    /// and the nonempty columns form the next state.
    pub fn apply(&self, state: &SetPartition) -> SetPartition {
        let k = self.column_of_color.len();
        debug_assert!(state.num_blocks() <= k);
        let mut columns: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, block) in state.blocks().iter().enumerate() {
            let coloring = &self.colorings[i];
            let to_column = &self.column_of_color[i];
            for &e in block {
                let col = to_column.apply(coloring[e - 1]);
                columns[col - 1].push(e);
            }
        }
        let mut columns: Vec<Vec<usize>> = columns.into_iter().filter(|c| !c.is_empty()).collect();
        for c in &mut columns {
            c.sort_unstable();
        }
        columns.sort_unstable_by_key(|c| c[0]);
        SetPartition::new(state.n(), columns).expect("columns partition the ground set")
    }
}

/// The materialized randomness of a run: Poisson atom times and, per atom,
/// the `k` colorings and `k` permutations. Generated once and read-only, so
/// several chains can replay the same stream.
#[derive(Debug, Clone)]
pub struct EventStream {
    n: usize,
    k: usize,
    horizon: f64,
    events: Vec<Event>,
}

impl EventStream {
    pub fn generate(
        nu: &NuMeasure,
        k: usize,
        n: usize,
        lambda: f64,
        horizon: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter("n and k must be positive".into()));
        }
        if nu.dimension() > k {
            return Err(Error::InvalidParameter(format!(
                "mixing measure lives on a {}-simplex, above k = {k}",
                nu.dimension()
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() || !(horizon > 0.0) {
            return Err(Error::InvalidParameter(
                "need lambda >= 0 and horizon > 0".into(),
            ));
        }
        let mut events = Vec::new();
        if lambda > 0.0 {
            let exp = Exp::new(lambda).expect("positive rate");
            let mut t = exp.sample(rng);
            while t <= horizon {
                let colorings: Vec<Vec<usize>> = (0..k)
                    .map(|_| {
                        let s = nu.sample(rng);
                        sample_colors(&s, n, rng)
                    })
                    .collect();
                // the stored permutation maps a color to its column; its
                // inverse is the paper-facing column relabeling
                let column_of_color = (0..k)
                    .map(|_| Permutation::sample_uniform(k, rng).inverse())
                    .collect();
                events.push(Event { time: t, colorings, column_of_color });
                t += exp.sample(rng);
            }
        }
        Ok(Self { n, k, horizon, events })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Replays the stream from `initial`, recording effective jumps only.
    pub fn replay(&self, initial: &SetPartition) -> Result<Trajectory> {
        if initial.n() != self.n {
            return Err(Error::DimensionMismatch(initial.n(), self.n));
        }
        if initial.num_blocks() > self.k {
            return Err(Error::TooManyBlocks { blocks: initial.num_blocks(), k: self.k });
        }
        let mut jumps = Vec::new();
        let mut state = initial.clone();
        for event in &self.events {
            let next = event.apply(&state);
            if next != state {
                jumps.push((event.time, next.clone()));
                state = next;
            }
        }
        Ok(Trajectory { initial: initial.clone(), jumps, total_events: self.events.len() })
    }
}

/// Simulates the embedded jump chain with exponential holds: the hold rate
/// at `B` is `lambda (1 - p(B, B))` and the jump target is drawn from the
/// kernel row conditioned on leaving.
pub fn simulate_embedded(
    initial: &SetPartition,
    rates: &RateMatrix,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    use rand::Rng;
    if initial.n() != rates.n() {
        return Err(Error::DimensionMismatch(initial.n(), rates.n()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let mut current = rates
        .states()
        .iter()
        .position(|s| s == initial)
        .ok_or_else(|| Error::InvalidParameter("initial state not in the state space".into()))?;
    let mut t = 0.0;
    let mut jumps = Vec::new();
    loop {
        let exit = -rates.rate(current, current);
        if exit <= 0.0 {
            break; // absorbing: hold to the horizon
        }
        t += Exp::new(exit).expect("positive rate").sample(rng);
        if t > horizon {
            break;
        }
        let u: f64 = rng.random::<f64>() * exit;
        let mut acc = 0.0;
        let mut target = usize::MAX;
        for j in 0..rates.states().len() {
            if j == current {
                continue;
            }
            acc += rates.rate(current, j);
            if u < acc {
                target = j;
                break;
            }
        }
        if target == usize::MAX {
            // floating-point edge at the top of the cumulative scan
            target = (0..rates.states().len())
                .rev()
                .find(|&j| j != current && rates.rate(current, j) > 0.0)
                .expect("positive exit rate implies a target");
        }
        current = target;
        jumps.push((t, rates.states()[current].clone()));
    }
    let total_events = jumps.len();
    Ok(Trajectory { initial: initial.clone(), jumps, total_events })
}

/// Simulates by the literal event-stream construction: a rate-`lambda`
/// Poisson clock delivers `k` paintboxes and `k` permutations per atom, and
/// the matrix construction decides whether the state moves.
pub fn simulate_poissonian(
    initial: &SetPartition,
    nu: &NuMeasure,
    k: usize,
    lambda: f64,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    let stream = EventStream::generate(nu, k, initial.n(), lambda, horizon, rng)?;
    stream.replay(initial)
}

/// Two chains driven by one shared event stream. Starts that agree on a
/// prefix `[j]` keep their restrictions to `[j]` equal at every event time.
pub fn coupled_pair(
    first: &SetPartition,
    second: &SetPartition,
    nu: &NuMeasure,
    k: usize,
    lambda: f64,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<(Trajectory, Trajectory)> {
    if first.n() != second.n() {
        return Err(Error::DimensionMismatch(first.n(), second.n()));
    }
    let stream = EventStream::generate(nu, k, first.n(), lambda, horizon, rng)?;
    Ok((stream.replay(first)?, stream.replay(second)?))
}

/// Largest violation of the projection identity for the generator entries,
/// including the diagonal: `Q_n(B, B') = sum over extensions of B' of
/// Q_{n+1}(B*, B'')` for every extension `B*` of `B`.
pub fn check_rate_consistency(n: usize, k: usize, nu: &NuMeasure, lambda: f64) -> Result<f64> {
    let lower = build_rate_matrix(&TransitionKernel::build(n, k, nu)?, lambda)?;
    let upper = build_rate_matrix(&TransitionKernel::build(n + 1, k, nu)?, lambda)?;
    let upper_index: std::collections::HashMap<&SetPartition, usize> = upper
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let extension_rows: Vec<Vec<usize>> = lower
        .states()
        .iter()
        .map(|b| b.extensions(k).iter().map(|e| upper_index[e]).collect())
        .collect();
    let mut defect = 0.0f64;
    for i in 0..lower.states().len() {
        for &star in &extension_rows[i] {
            for j in 0..lower.states().len() {
                let total: f64 = extension_rows[j].iter().map(|&e| upper.rate(star, e)).sum();
                defect = defect.max((lower.rate(i, j) - total).abs());
            }
        }
    }
    Ok(defect)
}
