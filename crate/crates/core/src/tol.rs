//! Central verification tolerances, one per error class. Commands that run
//! the verification suites accept overrides for these defaults.

/// Algebraic identities evaluated in closed form: row sums, projection
/// consistency of kernels and generators, the stationarity of the solved
/// vector under the generator.
pub const ALGEBRAIC: f64 = 1e-10;

/// Quantities that pass through a dense linear solve: stationary weights
/// and their projection/exchangeability checks.
pub const LINEAR_SOLVE: f64 = 1e-8;

/// Residual required of the stationary solver itself.
pub const STATIONARY_RESIDUAL: f64 = 1e-10;

/// Relative agreement between the two algebraic routes to the same
/// transition probability.
pub const CLOSED_FORM_REL: f64 = 1e-10;

/// Relative detailed-balance defect for the reversible family.
pub const DETAILED_BALANCE_REL: f64 = 1e-12;

/// Relative agreement between the factored and permutation-sum permanents.
pub const PERMANENT_REL: f64 = 1e-12;

/// Width of Monte Carlo acceptance bands, in standard errors.
pub const MC_SIGMAS: f64 = 4.0;
