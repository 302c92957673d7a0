//! Model predictive path integral (MPPI) motion planning for car-like
//! vehicles.
//!
//! The crate provides a kinematic bicycle model, circle-based obstacle
//! modelling, a waypoint-following cost stack, the sampling planner itself
//! and a closed-loop simulator with three built-in driving scenarios.
//!
//! Rollouts run on rayon when the `parallel` feature is enabled (default);
//! results are bit-identical for any worker count.

pub mod config;
pub mod cost;
pub mod dynamics;
pub mod error;
pub mod parallel;
pub mod planner;
pub mod report;
pub mod scene;
pub mod sim;

pub use config::PlannerConfig;
pub use dynamics::{ControlInput, VehicleParams, VehicleState};
pub use error::{Error, Result};
pub use parallel::Backend;
pub use planner::{InputSequence, PlannedTrajectory, Planner};
pub use scene::{CircleObstacle, ObstacleTrack, ReferencePath, Scene};
