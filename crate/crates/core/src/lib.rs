//! N-continued fractions `x = N/(a_1 + N/(a_2 + ...))` with digits `a_k >= N`:
//! the map `T_N(x) = N/x − floor(N/x)`, its invariant measure `G_N`, the
//! transfer operator, the Gauss–Kuzmin convergence experiment, and a small
//! framework for random systems with complete connections.

pub mod budget;
pub mod error;
pub mod expansion;
pub mod gauss_kuzmin;
pub mod measure;
pub mod operator;
pub mod quad;
pub mod rng;
pub mod rscc;

pub use budget::Budget;
pub use error::{NcfError, Result};
pub use expansion::{
    convergents, digits, digits_exact, evaluate, fixed_point, gauss_map, gauss_map_rational,
    DigitSequence, NcfParams, Rational,
};
pub use gauss_kuzmin::{
    distribution_at, limit_cdf, pushforward_density, run_experiment, GkConfig, GkReport,
    InitialMeasure, Method, MethodAgreement,
};
pub use measure::{gn_cdf, DensityFunction, GaussMeasure};
pub use operator::{
    apply_transfer, cesaro_operator, estimate_gap, lipschitz_norm, transfer_at, GapEstimate,
    GridFunction, LipschitzNormEstimate,
};
pub use rng::{MeanAcc, SeedStream, Uniform};
pub use rscc::{
    act, contraction_coefficients, path_probability, path_probability_set, ContractionConfig,
    ContractionReport, EventWord, MealySystem, NcfRscc, RsccSystem, WordSet,
};
