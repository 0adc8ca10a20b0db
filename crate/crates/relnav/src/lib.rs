//! Relative pose and velocity estimation for landing a UAV on a moving
//! platform, from bearing-only vision and inertial measurements.
//!
//! The stack is a cascade: a complementary filter on the rotation group
//! aligns the estimated platform normal with the observed one, and its
//! attitude estimate parameterizes a deterministic Riccati observer that
//! reconstructs relative position and velocity from the line-of-sight
//! direction alone. When the platform normal carries no excitation (an
//! upright, spinning deck), a coupled 7-state variant recovers the remaining
//! yaw angle from the platform's lateral specific acceleration. An
//! observability toolkit — windowed Gramians, persistence-of-excitation
//! scans, and a sufficient-condition checker for the yaw coupling — audits
//! when each of those loops is entitled to converge.
//!
//! Start with the runnable examples; each is a self-contained tour:
//!
//! - `cascade_run` — one seeded run of the full cascade, error table plus
//!   trace/trajectory export.
//! - `coupled_run` — yaw recovery when the normal is blind to it.
//! - `monte_carlo` — 50-run batches of both scenarios with percentile bands.
//! - `observability_audit` — Gramians, PE scans, and the coupling checker on
//!   both scenarios' trajectories.
//! - `attitude_filter` — the complementary filter in isolation, showing the
//!   Lyapunov descent of the alignment error.
//! - `noisy_sensors` — the same benchmark with IMU and camera noise, and
//!   what that does to the error floors.
//!
//! Module map: [`geom3`] (rotation-group and unit-vector primitives),
//! [`truthsim`] (rigid-body truth and the two benchmark scenarios),
//! [`sensors`] (measurement synthesis and noise), [`att_observer`] (the
//! SO(3) complementary filter), [`pv_observer`] (the Riccati observers, 6-
//! and 7-state), [`observability`] (Gramian/PE/coupling audits), and
//! [`harness`] (configs, seeded runs, Monte Carlo, trace export — everything
//! the `relnav` binary exposes).

pub mod att_observer;
pub mod error;
pub mod geom3;
pub mod harness;
pub mod observability;
pub mod pv_observer;
pub mod sensors;
pub mod truthsim;

pub use error::{Error, Result};
pub use geom3::{Mat3, Rot3, UnitVec3, Vec3};
