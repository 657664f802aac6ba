//! Per-fiducial Kalman filtering for optical tracking of rigid surgical
//! arrays.
//!
//! Each fiducial on an array is tracked by its own nine-state linear filter
//! (position, velocity and acceleration per axis). Tracking fiducials one by
//! one keeps the per-frame cost tiny and exposes per-fiducial anomalies
//! through the innovation statistics.
//!
//! Modules:
//!
//! - [`kalman`]: the single-fiducial filter.
//! - [`bank`]: one filter per fiducial plus innovation gating.
//! - [`sim`]: synthetic rigid-array trajectories with seeded noise.
//! - [`metrics`]: MSE and error variance against ground truth.
//! - [`io`]: configuration and recording file formats.

pub mod bank;
pub mod error;
pub mod io;
pub mod kalman;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod session;
pub mod sim;

pub use bank::{FiducialEstimate, FilteredFrame, Frame, GateConfig, TrackerBank};
pub use error::{Error, Result};
pub use kalman::{FilterConfig, FilterParams, FilterState, ProcessNoiseModel, StateVector, StepOutput};
pub use linalg::{Mat3, Mat3x9, Mat9, Mat9x3, Vec3};
pub use metrics::{Axis, MetricsReport, MetricsRow};
pub use session::{FiducialRecord, SessionData, SessionStep};
pub use sim::{OcclusionBias, Pose, SimConfig};
