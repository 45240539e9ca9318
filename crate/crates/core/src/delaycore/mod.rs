//! Direct integration of the state-dependent delay system by the method of steps.

pub mod dopri;
mod history;
mod integrate;
pub mod io;
mod model;
mod trajectory;

pub use dopri::{solve_ode, OdeOptions, PiecewiseQuartic, Segment};
pub use history::HistoryFunction;
pub use integrate::{
    check_monotone_delay, integrate_dde, integrate_dde_with, DdeOptions, MonotoneDelayReport,
    RESIDUAL_CONSTANT,
};
pub use model::{ModelFunctions, ModelSpec, StripBox};
pub use trajectory::{Breakpoint, HistoryRepr, Trajectory, TrajectoryMeta};
