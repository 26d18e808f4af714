//! Warm starts, battery dispatch and local search over schedules.

pub mod dispatch;
pub mod exact;
pub mod optimize;
pub(crate) mod placement;
pub mod policy;
pub mod warm;

use thiserror::Error;

use crate::evaluator::{EvalError, ScheduleViolation};
use crate::ppoi::InstanceViolation;

pub use dispatch::{dispatch_battery_heuristic, plan_cost, repair_plan, DispatchError, DispatchInput};
pub use exact::{dispatch_battery_exact, EXACT_MAX_HORIZON};
pub use optimize::{evaluate_against_actual, optimize, OptimizeResult, OptimizerConfig, RunReport};
pub use placement::candidate_slots;
pub use policy::{check_plan_policy, policy_check, BatteryPolicy, PolicyViolation};
pub use warm::conservative_warm_starts;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("invalid instance: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidInstance(Vec<InstanceViolation>),
    #[error("no feasible placement of the recurring activities was found")]
    NoFeasiblePlacement,
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("optimiser produced an infeasible schedule: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Infeasible(Vec<ScheduleViolation>),
}
