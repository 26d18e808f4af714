//! Predict-and-optimise energy scheduling.
//!
//! Instances describe buildings, batteries and weekly recurring activities.
//! A schedule places every activity in a weekly slot and gives each battery
//! an action per 15-minute period; its cost is the energy bill plus a
//! quadratic charge on the monthly peak. The crate builds schedules against
//! a forecast of the base load, measures forecast error, and fits an
//! asymmetric error model to realised costs.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below cover the usual case.

pub mod cli;
pub mod correction;
pub mod evaluator;
pub mod metrics;
pub mod num;
pub mod ppoi;
pub mod scheduler;
pub mod series;

pub use num::Scalar;

pub type Instance64 = ppoi::Instance<f64>;
pub type NetLoad64 = series::NetLoadSeries<f64>;
pub type Prices64 = series::PriceSeries<f64>;
pub type ErrorReport64 = metrics::ErrorReport<f64>;
pub type OptimizeResult64 = scheduler::OptimizeResult<f64>;
pub type CostModel64 = correction::CostModelParams<f64>;
pub type Correction64 = correction::LinearCorrection<f64>;

pub type Instance32 = ppoi::Instance<f32>;
pub type NetLoad32 = series::NetLoadSeries<f32>;
pub type Prices32 = series::PriceSeries<f32>;
