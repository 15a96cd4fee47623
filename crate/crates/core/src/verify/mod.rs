//! Numerical experiments behind the stability, a-priori and regularity
//! estimates, the monodomain limit, convergence orders and the gradient.

mod gradcheck;

pub use gradcheck::{gradient_check, smooth_direction, DirectionCheck, GradientCheck, GRADCHECK_STEPS};
mod apriori;
mod convergence;
mod limit;
mod regularity;
mod stability;

pub use apriori::{adjoint_apriori_check, apriori_check, AprioriResult};
pub use convergence::{
    convergence_study, heat_problem, heat_spatial_study, inject, observed_orders, spatial_self_convergence,
    temporal_self_convergence, ConvergenceStudy, ProblemBuilder, Verdict,
};
pub use limit::monodomain_limit_check;
pub use regularity::{l4_h1, regularity_monitor, RegularityReport, REGULARITY_GROWTH};
pub use stability::{difference_bundle, stability_experiment, StabilityPoint, StabilityReport};
