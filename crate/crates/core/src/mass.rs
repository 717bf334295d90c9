//! Points of the ranked `k`-simplex and mixing measures over it.
//!
//! A [`MassPartition`] is a nonincreasing vector of `k` nonnegative
//! frequencies summing to one. A [`NuMeasure`] mixes paintboxes: either a
//! finite discrete mixture of simplex points, or the parametric family
//! realized by ranking a symmetric Dirichlet vector with `k` coordinates of
//! concentration `alpha/k` each.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Sum tolerance enforced on exact input.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;
/// Looser sum tolerance for vectors produced by floating-point arithmetic;
/// such vectors are renormalized on entry.
pub const SIMPLEX_ARITH_TOL: f64 = 1e-9;

/// Ranked frequencies `s_1 >= s_2 >= ... >= s_k >= 0` with `sum s_i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassPartition {
    masses: Vec<f64>,
}

#[derive(Deserialize)]
struct MassPartitionWire {
    masses: Vec<f64>,
}

impl<'de> Deserialize<'de> for MassPartition {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let wire = MassPartitionWire::deserialize(deserializer)?;
        MassPartition::new(wire.masses).map_err(serde::de::Error::custom)
    }
}

impl MassPartition {
    /// Validates ranking, nonnegativity, and unit sum (within `1e-12`).
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidMassPartition("empty vector".into()));
        }
        for &m in &masses {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidMassPartition(format!(
                    "entry {m} is not a nonnegative real"
                )));
            }
        }
        if masses.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidMassPartition("entries must be nonincreasing".into()));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidMassPartition(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self { masses })
    }

    /// Ranks an arbitrary frequency vector: validates nonnegativity and a
    /// unit sum within `1e-9`, sorts descending, and renormalizes so the
    /// strict constructor invariant holds again.
    pub fn rank(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMassPartition("empty vector".into()));
        }
        for &v in values {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidMassPartition(format!(
                    "entry {v} is not a nonnegative real"
                )));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_ARITH_TOL {
            return Err(Error::InvalidMassPartition(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        let mut masses: Vec<f64> = values.iter().map(|&v| v / sum).collect();
        masses.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(Self { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Number of stored coordinates.
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Mass of color `j` (1-indexed); zero beyond the stored coordinates,
    /// which embeds a point of a smaller simplex into a larger one.
    pub fn mass(&self, j: usize) -> f64 {
        debug_assert!(j >= 1);
        self.masses.get(j - 1).copied().unwrap_or(0.0)
    }

    /// Pads with trailing zeros to `k` coordinates.
    pub fn padded(&self, k: usize) -> Self {
        debug_assert!(k >= self.masses.len());
        let mut masses = self.masses.clone();
        masses.resize(k, 0.0);
        Self { masses }
    }
}

/// A mixing measure on the ranked `k`-simplex.
#[derive(Debug, Clone, PartialEq)]
pub enum NuMeasure {
    /// Finite mixture of point masses: `(weight, point)` pairs.
    Discrete(Vec<(f64, MassPartition)>),
    /// The ranked symmetric Dirichlet law with `k` coordinates of
    /// concentration `alpha/k`; the mixing measure of the `(alpha, k)` chain.
    PitmanDirichlet { alpha: f64, k: usize },
}

impl NuMeasure {
    pub fn discrete(atoms: Vec<(f64, MassPartition)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("discrete measure needs atoms".into()));
        }
        let dim = atoms[0].1.len();
        let mut total = 0.0;
        for (w, point) in &atoms {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "atom weight {w} must be positive"
                )));
            }
            if point.len() != dim {
                return Err(Error::InvalidParameter(
                    "atoms must share one simplex dimension".into(),
                ));
            }
            total += w;
        }
        if (total - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "atom weights sum to {total}, not 1"
            )));
        }
        Ok(Self::Discrete(atoms))
    }

    pub fn pitman_dirichlet(alpha: f64, k: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(Self::PitmanDirichlet { alpha, k })
    }

    /// Dimension of the simplex the measure lives on.
    pub fn dimension(&self) -> usize {
        match self {
            Self::Discrete(atoms) => atoms[0].1.len(),
            Self::PitmanDirichlet { k, .. } => *k,
        }
    }

    /// True when all mass sits on `(1, 0, …, 0)`, the one hypothesis under
    /// which the chain loses irreducibility.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::Discrete(atoms) => atoms.iter().all(|(_, p)| p.mass(1) == 1.0),
            Self::PitmanDirichlet { .. } => false,
        }
    }

    /// One draw from the measure.
    pub fn sample(&self, rng: &mut RngStream) -> MassPartition {
        match self {
            Self::Discrete(atoms) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, point) in atoms {
                    acc += w;
                    if u < acc {
                        return point.clone();
                    }
                }
                atoms.last().expect("validated nonempty").1.clone()
            }
            Self::PitmanDirichlet { alpha, k } => {
                let raw = symmetric_dirichlet(alpha / *k as f64, *k, rng);
                MassPartition::rank(&raw).expect("Dirichlet draw is on the simplex")
            }
        }
    }
}

/// An unranked symmetric Dirichlet draw: `k` i.i.d. Gamma(concentration, 1)
/// variables, normalized.
pub fn symmetric_dirichlet(concentration: f64, k: usize, rng: &mut RngStream) -> Vec<f64> {
    assert!(concentration > 0.0 && k >= 1);
    let gamma = Gamma::new(concentration, 1.0).expect("valid shape");
    loop {
        let raw: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = raw.iter().sum();
        // all-zero underflow is possible at tiny concentrations; redraw
        if sum > 0.0 && sum.is_finite() {
            return raw.into_iter().map(|v| v / sum).collect();
        }
    }
}

/// Wire form of a mixing measure, as read from CLI config files:
/// `{"type": "discrete", "atoms": [{"weight": w, "masses": [...]}, ...]}` or
/// `{"type": "pd", "alpha": a, "k": k}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum NuWire {
    Discrete { atoms: Vec<AtomWire> },
    Pd { alpha: f64, k: usize },
}

#[derive(Serialize, Deserialize)]
struct AtomWire {
    weight: f64,
    masses: Vec<f64>,
}

impl Serialize for NuMeasure {
    fn serialize<S>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error>
    where
        S: serde::Serializer,
    {
        let wire = match self {
            Self::Discrete(atoms) => NuWire::Discrete {
                atoms: atoms
                    .iter()
                    .map(|(w, p)| AtomWire { weight: *w, masses: p.masses().to_vec() })
                    .collect(),
            },
            Self::PitmanDirichlet { alpha, k } => NuWire::Pd { alpha: *alpha, k: *k },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NuMeasure {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as DeError;
        match NuWire::deserialize(deserializer)? {
            NuWire::Discrete { atoms } => {
                let atoms = atoms
                    .into_iter()
                    .map(|a| Ok((a.weight, MassPartition::new(a.masses).map_err(DeError::custom)?)))
                    .collect::<std::result::Result<Vec<_>, D::Error>>()?;
                NuMeasure::discrete(atoms).map_err(DeError::custom)
            }
            NuWire::Pd { alpha, k } => NuMeasure::pitman_dirichlet(alpha, k).map_err(DeError::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates() {
        assert!(MassPartition::new(vec![0.6, 0.4]).is_ok());
        assert!(MassPartition::new(vec![0.4, 0.6]).is_err()); // not ranked
        assert!(MassPartition::new(vec![0.7, 0.4]).is_err()); // bad sum
        assert!(MassPartition::new(vec![1.2, -0.2]).is_err());
        assert!(MassPartition::new(vec![]).is_err());
        assert!(MassPartition::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn rank_examples() {
        let r = MassPartition::rank(&[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(r.masses(), &[0.5, 0.3, 0.2]);
        let sorted = MassPartition::rank(&[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(sorted.masses(), &[0.5, 0.3, 0.2]);
        let ties = MassPartition::rank(&[0.5, 0.5]).unwrap();
        assert_eq!(ties.masses(), &[0.5, 0.5]);
        assert!(MassPartition::rank(&[0.5, -0.5]).is_err());
        assert!(MassPartition::rank(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn padding_and_color_mass() {
        let s = MassPartition::new(vec![0.7, 0.3]).unwrap();
        assert_eq!(s.mass(1), 0.7);
        assert_eq!(s.mass(3), 0.0);
        assert_eq!(s.padded(4).masses(), &[0.7, 0.3, 0.0, 0.0]);
    }

    #[test]
    fn discrete_sampling_hits_single_atom() {
        let s = MassPartition::new(vec![0.6, 0.4]).unwrap();
        let nu = NuMeasure::discrete(vec![(1.0, s.clone())]).unwrap();
        let mut rng = RngStream::new(3, 0);
        for _ in 0..20 {
            assert_eq!(nu.sample(&mut rng), s);
        }
    }

    #[test]
    fn discrete_validation() {
        let s = MassPartition::new(vec![1.0]).unwrap();
        assert!(NuMeasure::discrete(vec![]).is_err());
        assert!(NuMeasure::discrete(vec![(0.5, s.clone())]).is_err()); // weights sum != 1
        assert!(NuMeasure::discrete(vec![(-1.0, s.clone()), (2.0, s)]).is_err());
        let a = MassPartition::new(vec![1.0]).unwrap();
        let b = MassPartition::new(vec![0.6, 0.4]).unwrap();
        assert!(NuMeasure::discrete(vec![(0.5, a), (0.5, b)]).is_err()); // mixed dims
    }

    #[test]
    fn pitman_dirichlet_draws_are_valid_mass_partitions() {
        for &(alpha, k) in &[(0.5, 3usize), (1.0, 2), (2.0, 2), (0.25, 4)] {
            let nu = NuMeasure::pitman_dirichlet(alpha, k).unwrap();
            let mut rng = RngStream::new(11, 0);
            for _ in 0..10_000 {
                let s = nu.sample(&mut rng);
                assert_eq!(s.len(), k);
                assert!(s.masses().windows(2).all(|w| w[0] >= w[1]));
                let sum: f64 = s.masses().iter().sum();
                assert!((sum - 1.0).abs() <= SIMPLEX_SUM_TOL);
            }
        }
    }

    #[test]
    fn degeneracy_detection() {
        let point = MassPartition::new(vec![1.0, 0.0]).unwrap();
        let spread = MassPartition::new(vec![0.6, 0.4]).unwrap();
        assert!(NuMeasure::discrete(vec![(1.0, point.clone())]).unwrap().is_degenerate());
        assert!(!NuMeasure::discrete(vec![(0.5, point), (0.5, spread)])
            .unwrap()
            .is_degenerate());
        assert!(!NuMeasure::pitman_dirichlet(1.0, 2).unwrap().is_degenerate());
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let nu = NuMeasure::pitman_dirichlet(1.0, 3).unwrap();
        let mut a = RngStream::new(99, 5);
        let mut b = RngStream::new(99, 5);
        for _ in 0..100 {
            assert_eq!(nu.sample(&mut a), nu.sample(&mut b));
        }
    }

    #[test]
    fn nu_config_round_trip() {
        let nu = NuMeasure::pitman_dirichlet(1.5, 2).unwrap();
        let s = serde_json::to_string(&nu).unwrap();
        assert_eq!(s, r#"{"type":"pd","alpha":1.5,"k":2}"#);
        assert_eq!(serde_json::from_str::<NuMeasure>(&s).unwrap(), nu);

        let discrete: NuMeasure = serde_json::from_str(
            r#"{"type":"discrete","atoms":[{"weight":0.5,"masses":[0.6,0.4]},{"weight":0.5,"masses":[1.0,0.0]}]}"#,
        )
        .unwrap();
        assert_eq!(discrete.dimension(), 2);
        assert!(serde_json::from_str::<NuMeasure>(r#"{"type":"pd","alpha":-1.0,"k":2}"#).is_err());
    }
}
