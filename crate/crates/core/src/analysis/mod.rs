//! Turning traces into verdicts: Monte Carlo dual values, ergodic averages,
//! feasibility gaps, theorem constants and grid reference oracles.

pub mod bruteforce;
pub mod dual;
pub mod estimate;
pub mod metrics;
pub mod theory;

pub use bruteforce::{
    brute_force_num, brute_force_quadratic, dual_grid_min, min_power_for_rate, BruteForce, WaterFill,
};
pub use dual::{
    checkpoints, dual_track, estimate_dual, estimate_dual_difference, mean_gradient, DualPoint,
    Estimate, SampledDual,
};
pub use estimate::{estimate_v_b_l, ConstantEstimates, V_INFLATION};
pub use metrics::{
    dual_norm_halves, feasibility_curve, feasibility_gap, first_within, fit_inverse_t,
    max_dual_norm, mean_ci95, running_average, running_primal_average, PrimalAverage,
};
pub use theory::{
    dual_gap_bound, theorem1_bound, theorem2_bound, theory_constants_c, DualConstants,
    TheoryConstants,
};
