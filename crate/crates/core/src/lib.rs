//! Forward-rate fields driven by Lévy noise with linear volatility.

// `!(x > 0.0)` rejects NaN as well; quadrature nodes are quoted to full published precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod grid;
pub mod path;
pub mod levy;
pub mod market;
pub mod norms;
pub mod pipeline;
pub mod quadrature;
pub mod residual;
pub mod solver;
pub mod uniqueness;
pub mod volatility;

pub use path::{field_a, field_b, integrate_against_path, path_seed, simulate_path, JumpPath, PathError};
pub use grid::{Field, GridError, GridSpec, RateField};
pub use levy::{
    check_assumptions, classify_growth, AssumptionReport, Derivative, GrowthClassification, LevyError,
    LevyExponent, LevyModelSpec, MeasureFamily, Rule, TabulatedExponent, Verdict,
};
pub use volatility::{InitialCurve, ScalarFn, VolTerm, VolatilityError, VolatilitySpec};
pub use norms::{slice_norms, timeline_norms, weighted_norms, SliceNorms};
pub use solver::{apply_k, solve_fixed_point, FixedPointProblem, SolverReport, SolverSettings, SolverStatus};
pub use market::{
    bond_surface, default_checkpoints, drift_identity_check, martingale_test, BondSurface, CheckpointStat, DriftResidual,
    MarketError, MartingaleReport,
};
pub use pipeline::{ModelConfig, ModelError, PathRun};
pub use uniqueness::{
    gronwall_bound, gronwall_iterates, uniqueness_contraction_check, GronwallDomain, UniquenessError, UniquenessReport,
    UniquenessSettings,
};
pub use residual::{strong_residual, ResidualError, StrongResidual};
