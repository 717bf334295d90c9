//! Block frequencies and the measure-valued companion process on the
//! ranked `k`-simplex: at each Poisson atom the current masses are split
//! through `k` fresh simplex draws and reassembled from the permuted
//! column totals, mirroring the set-valued construction. A joint driver
//! couples both processes through one event stream and reports how far the
//! finite-`n` block frequencies drift from the mass coordinates.

use rand_distr::{Distribution, Exp};

use crate::ctmc::Trajectory;
use crate::error::{Error, Result};
use crate::kernel::BlockPermutationDraw;
use crate::mass::{MassPartition, NuMeasure};
use crate::partition::{Permutation, SetPartition};
use crate::rng::RngStream;

/// A càdlàg path on the ranked simplex; every event is recorded.
#[derive(Debug, Clone)]
pub struct MassTrajectory {
    pub initial: MassPartition,
    pub jumps: Vec<(f64, MassPartition)>,
}

impl MassTrajectory {
    pub fn state_at(&self, t: f64) -> &MassPartition {
        let mut current = &self.initial;
        for (time, state) in &self.jumps {
            if *time > t {
                break;
            }
            current = state;
        }
        current
    }

    /// Jump-chain states over `[from, to]` weighted by their holding times,
    /// the occupation measure a time average integrates against.
    pub fn time_weighted_states(&self, from: f64, to: f64) -> Vec<(&MassPartition, f64)> {
        assert!(from <= to);
        let mut out = Vec::new();
        let mut state = &self.initial;
        let mut start = 0.0f64;
        for (time, next) in &self.jumps {
            let seg_start = start.max(from);
            let seg_end = time.min(to);
            if seg_end > seg_start {
                out.push((state, seg_end - seg_start));
            }
            state = next;
            start = *time;
        }
        let seg_start = start.max(from);
        if to > seg_start {
            out.push((state, to - seg_start));
        }
        out
    }
}

/// One event of the mass process: scale row `i` of the draw array by `x_i`,
/// take permuted column totals, and rank. Mass is conserved exactly up to
/// rounding because every draw has unit sum.
pub fn mass_step(
    x: &MassPartition,
    draws: &[MassPartition],
    sigmas: &BlockPermutationDraw,
) -> Result<MassPartition> {
    let k = draws.len();
    if k == 0 || sigmas.sigmas().len() != k {
        return Err(Error::InvalidParameter(
            "need one draw and one permutation per row".into(),
        ));
    }
    if x.len() > k || draws.iter().any(|d| d.len() > k) {
        return Err(Error::InvalidParameter(
            "states and draws must live on a simplex of dimension at most k".into(),
        ));
    }
    if sigmas.sigmas().iter().any(|s| s.n() != k) {
        return Err(Error::InvalidPermutation(format!("permutations must act on 1..={k}")));
    }
    let mut columns = vec![0.0f64; k];
    for i in 0..k {
        let weight = x.mass(i + 1);
        if weight == 0.0 {
            continue;
        }
        let sigma = &sigmas.sigmas()[i];
        for (j, column) in columns.iter_mut().enumerate() {
            *column += weight * draws[i].mass(sigma.apply(j + 1));
        }
    }
    MassPartition::rank(&columns)
}

/// The measure-valued process: exponential event times at rate `lambda`,
/// `k` i.i.d. draws from `nu` and `k` uniform permutations per event.
pub fn simulate_mass_process(
    x0: &MassPartition,
    nu: &NuMeasure,
    k: usize,
    lambda: f64,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<MassTrajectory> {
    if x0.len() > k || nu.dimension() > k {
        return Err(Error::InvalidParameter(
            "start and mixing measure must fit the k-simplex".into(),
        ));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() || !(horizon > 0.0) {
        return Err(Error::InvalidParameter("need lambda >= 0 and horizon > 0".into()));
    }
    let mut jumps = Vec::new();
    let mut state = x0.padded(k);
    if lambda > 0.0 {
        let exp = Exp::new(lambda).expect("positive rate");
        let mut t = exp.sample(rng);
        while t <= horizon {
            let draws: Vec<MassPartition> = (0..k).map(|_| nu.sample(rng)).collect();
            let sigmas = BlockPermutationDraw::sample(k, k, rng);
            state = mass_step(&state, &draws, &sigmas)?;
            jumps.push((t, state.clone()));
            t += exp.sample(rng);
        }
    }
    Ok(MassTrajectory { initial: x0.padded(k), jumps })
}

/// Ranked block sizes divided by `n`, zero-padded to `k` coordinates: the
/// finite-resolution estimate of the block frequencies.
pub fn empirical_frequencies(b: &SetPartition, k: usize) -> Result<MassPartition> {
    if b.num_blocks() > k {
        return Err(Error::TooManyBlocks { blocks: b.num_blocks(), k });
    }
    let n = b.n() as f64;
    let mut freqs: Vec<f64> = b.blocks().iter().map(|block| block.len() as f64 / n).collect();
    freqs.resize(k, 0.0);
    MassPartition::rank(&freqs)
}

/// The joint run of the set-valued and mass-valued processes plus the
/// per-event sup distance between empirical block frequencies and mass
/// coordinates.
#[derive(Debug, Clone)]
pub struct CoupledSetMass {
    pub set: Trajectory,
    pub mass: MassTrajectory,
    /// `(event time, sup |empirical - mass|)`, with a row at time zero for
    /// the sampled start.
    pub event_errors: Vec<(f64, f64)>,
}

/// Drives both processes with one Poisson stream: the same simplex draws
/// feed the mass update and, through i.i.d. coloring, the set update, and
/// the same permutations scatter both into columns. Cells stay paired with
/// their mass coordinates across the joint ranking, so the block holding a
/// coordinate's mass keeps tracking it.
///
/// The set process starts from a paintbox sample of `x0` on `[n]`.
pub fn coupled_set_mass(
    n: usize,
    x0: &MassPartition,
    nu: &NuMeasure,
    k: usize,
    lambda: f64,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<CoupledSetMass> {
    use rand::Rng;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if x0.len() > k || nu.dimension() > k {
        return Err(Error::InvalidParameter(
            "start and mixing measure must fit the k-simplex".into(),
        ));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() || !(horizon > 0.0) {
        return Err(Error::InvalidParameter("need lambda >= 0 and horizon > 0".into()));
    }

    // paired state: cell i holds mass `masses[i]` and the elements whose
    // empirical frequency tracks it; cells are kept ranked by mass
    let mut masses: Vec<f64> = x0.padded(k).masses().to_vec();
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); k];
    {
        let cumulative: Vec<f64> = masses
            .iter()
            .scan(0.0, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        for e in 1..=n {
            let u: f64 = rng.random();
            let cell = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
            cells[cell].push(e);
        }
    }

    let initial_set = partition_of_cells(n, &cells)?;
    let initial_mass = MassPartition::new(masses.clone())
        .expect("padded start is ranked with unit sum");
    let mut event_errors = vec![(0.0, sup_error(&initial_set, &initial_mass, k)?)];
    let mut set_jumps: Vec<(f64, SetPartition)> = Vec::new();
    let mut mass_jumps: Vec<(f64, MassPartition)> = Vec::new();
    let mut set_state = initial_set.clone();
    let mut total_events = 0usize;

    if lambda > 0.0 {
        let exp = Exp::new(lambda).expect("positive rate");
        let mut t = exp.sample(rng);
        while t <= horizon {
            total_events += 1;
            let mut next_masses = vec![0.0f64; k];
            let mut next_cells: Vec<Vec<usize>> = vec![Vec::new(); k];
            for i in 0..k {
                if masses[i] == 0.0 && cells[i].is_empty() {
                    continue;
                }
                let draw = nu.sample(rng);
                let sigma = Permutation::sample_uniform(k, rng);
                for (j, column) in next_masses.iter_mut().enumerate() {
                    *column += masses[i] * draw.mass(sigma.apply(j + 1));
                }
                let sigma_inv = sigma.inverse();
                let cumulative: Vec<f64> = draw
                    .masses()
                    .iter()
                    .scan(0.0, |acc, &m| {
                        *acc += m;
                        Some(*acc)
                    })
                    .collect();
                for &e in &cells[i] {
                    let u: f64 = rng.random();
                    let color = cumulative
                        .iter()
                        .position(|&c| u < c)
                        .map(|idx| idx + 1)
                        .unwrap_or(draw.len());
                    next_cells[sigma_inv.apply(color) - 1].push(e);
                }
            }

            // joint ranking keeps each element cell attached to its mass
            let total: f64 = next_masses.iter().sum();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| next_masses[b].total_cmp(&next_masses[a]));
            masses = order.iter().map(|&j| next_masses[j] / total).collect();
            cells = order.iter().map(|&j| std::mem::take(&mut next_cells[j])).collect();

            let mass_state = MassPartition::new(masses.clone()).map_err(|e| {
                Error::NumericalFailure(format!("mass column totals left the simplex: {e}"))
            })?;
            let next_set = partition_of_cells(n, &cells)?;
            event_errors.push((t, sup_error(&next_set, &mass_state, k)?));
            mass_jumps.push((t, mass_state));
            if next_set != set_state {
                set_jumps.push((t, next_set.clone()));
                set_state = next_set;
            }
            t += exp.sample(rng);
        }
    }

    Ok(CoupledSetMass {
        set: Trajectory { initial: initial_set, jumps: set_jumps, total_events },
        mass: MassTrajectory { initial: initial_mass, jumps: mass_jumps },
        event_errors,
    })
}

fn partition_of_cells(n: usize, cells: &[Vec<usize>]) -> Result<SetPartition> {
    SetPartition::new(
        n,
        cells.iter().filter(|c| !c.is_empty()).cloned().collect(),
    )
}

fn sup_error(set_state: &SetPartition, mass_state: &MassPartition, k: usize) -> Result<f64> {
    let empirical = empirical_frequencies(set_state, k)?;
    Ok(empirical
        .masses()
        .iter()
        .zip(mass_state.masses())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
