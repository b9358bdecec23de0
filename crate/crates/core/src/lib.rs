//! Numerical solution of state-dependent maximal monotone differential inclusions
//!
//! ```text
//! ẋ(t) ∈ f(t, x(t)) − A_{t,x(t)}(x(t))
//! ```
//!
//! by an implicit catching-up scheme, with tools for checking nonsmooth Lyapunov pairs along
//! computed trajectories and front-ends for sweeping processes and Lur'e systems.
//!
//! ```
//! use sdmi::prelude::*;
//! use nalgebra::dvector;
//! use std::sync::Arc;
//!
//! let op = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(-1.0, 1.0)?);
//! let problem = InclusionProblem::new(Arc::new(|_, _| dvector![1.0]), op, 1.0, 2.0)?;
//! let traj = solve(&problem, 0.0, &dvector![0.0], 0.1, SolveOptions::default())?;
//! assert_eq!(traj.last()[0], 1.0);
//! # Ok::<(), sdmi::Error>(())
//! ```

pub mod error;
pub mod feedback;
pub mod linalg;
pub mod lure;
pub mod lyapunov;
pub mod metrics;
pub mod operator;
pub mod scenarios;
pub mod sets;
pub mod solver;
pub mod sweeping;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/lyapunov.md")]
    mod lyapunov {}
    #[doc = include_str!("../../../book/src/applications.md")]
    mod applications {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::feedback::{FeedbackOptions, Phi0Method, Phi0Result};
    pub use crate::linalg::{Matrix, Vector};
    pub use crate::lure::{check_assumptions, lure_problem, phi0_solve, LureSystem};
    pub use crate::lyapunov::{evaluate_pair_decay, proximal_criterion, truncated_velocity_set, LyapunovPair};
    pub use crate::metrics::{dis_estimate, hausdorff, resolvent_gap_bound, DisOptions};
    pub use crate::operator::{GraphPoint, MonotoneOperator, ValueSet};
    pub use crate::scenarios::{builtin, builtin_scenarios, Scenario};
    pub use crate::sets::ConvexSet;
    pub use crate::solver::{
        apriori_bounds, convergence_study, hypo_probe, solve, InclusionProblem, SolveOptions, Trajectory,
    };
    pub use crate::sweeping::{catching_up, sweeping_problem, SweepingScenario};
}
