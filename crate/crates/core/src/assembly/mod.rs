//! Global tangent systems and residual evaluation for the direct, composed
//! and hybrid discretizations.

mod config;
mod discretization;

pub use config::{alpha_d_max, shifted_eval_point, Approach, ApproachConfig, ResidualNorm};
pub use discretization::{
    BcFn, Discretization, EvalPoint, Evaluation, PointRole, Problem, Row, RowLoad, StressTerm,
};
