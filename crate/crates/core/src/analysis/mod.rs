//! Working-set approximation, its continuum limits and variance tools.

pub mod asymptotic;
pub mod quad;
pub mod variance;
pub mod working_set;

pub use asymptotic::{
    asymptotic_hit_theorem1, asymptotic_hit_theorem2, ContinuumLimit, ContinuumScalingModel,
    LayerMass, LayeredLimit, LayeredScalingModel, Shape, DEFAULT_QUAD_TOL,
};
pub use variance::{sample_working_set_variance, variance_bound, WorkingSetSample};
pub use working_set::{
    expected_working_set, fmt_g, miss_probability, mr_approximation, per_unit_characteristic_time,
    solve_characteristic_time, ApproxSolution, ClockMode, PerUnitSolution, DEFAULT_TOL,
};
