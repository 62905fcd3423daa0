//! Built-in problems with closed-form best responses.

pub mod num;
pub mod quadratic;

pub use num::{
    num_best_response, num_gradient, num_problem, slater_check, ChannelModel, NumNode, NumSpec,
    SlaterReport,
};
pub use quadratic::{
    quad_analytic_solution, quad_best_response, quad_dual_value, quadratic_problem,
    QuadSolution, QuadraticNode, QuadraticSpec,
};
