//! Complementary attitude filter on the rotation group.
//!
//! The filter propagates an estimate `Rhat` of the relative attitude
//! `R = Q_T^T Q_B` through `Rhat_dot = -w_T^x Rhat + Rhat w_B^x + sigma^x Rhat`
//! and corrects it with the innovation `sigma_R = 2 k_R ((Rhat eta) x e3)`,
//! which compares the estimated platform normal against the measured one. A
//! second, coupled form subtracts a scalar yaw-channel innovation
//! `sigma_theta e3` supplied by the translational observer; that channel
//! restores the yaw information the normal alone cannot provide.
//!
//! One step integrates the frozen-coefficient ODE exactly as a product of
//! exponentials: with the inputs held over `[t, t+dt]`,
//! `Rhat+ = exp(dt (sigma - w_T)^x) Rhat exp(dt w_B^x)`, followed by a polar
//! re-projection that keeps the estimate orthonormal over arbitrarily long
//! runs. Callers that want higher time resolution of time-varying inputs
//! average them across the step (see the harness) — the primitive itself is
//! exact for whatever values it is handed.

use crate::geom3::{exp_so3, nearest_rotation, Rot3, UnitVec3, Vec3};

/// Attitude filter state: the current estimate of `R = Q_T^T Q_B`.
#[derive(Clone, Copy, Debug)]
pub struct AttEstimate {
    pub rhat: Rot3,
}

/// Attitude filter tuning.
#[derive(Clone, Copy, Debug)]
pub struct AttConfig {
    /// Innovation gain; must be positive.
    pub k_r: f64,
}

impl Default for AttConfig {
    fn default() -> Self {
        AttConfig { k_r: 1.5 }
    }
}

/// Normal-alignment innovation `2 k_R ((Rhat eta) x e3)`.
///
/// Zero exactly when the estimated normal `Rhat eta` points along `e3`; its
/// norm never exceeds `2 k_R`.
pub fn sigma_r(rhat: &Rot3, eta: &UnitVec3, k_r: f64) -> Vec3 {
    2.0 * k_r * (*rhat * eta.into_inner()).cross(&Vec3::z())
}

/// Advances the estimate one step with all inputs held constant, then
/// re-projects onto the rotation group.
///
/// The held-input ODE `Rhat_dot = (sigma - w_T)^x Rhat + Rhat w_B^x` has the
/// exact solution applied here, so the only per-step error is the hold itself.
pub fn step_attitude(
    est: &AttEstimate,
    omega_b: &Vec3,
    omega_t: &Vec3,
    sigma: &Vec3,
    dt: f64,
) -> AttEstimate {
    assert!(
        dt > 0.0
            && omega_b.iter().all(|x| x.is_finite())
            && omega_t.iter().all(|x| x.is_finite())
            && sigma.iter().all(|x| x.is_finite()),
        "attitude step requires finite inputs and dt > 0"
    );
    let left = exp_so3(&(dt * (sigma - omega_t)));
    let right = exp_so3(&(dt * omega_b));
    let product = left.matrix() * est.rhat.matrix() * right.matrix();
    AttEstimate {
        rhat: nearest_rotation(&product).expect("attitude left the rotation group"),
    }
}

/// Coupled-mode step: same as [`step_attitude`] with the total innovation
/// `sigma_r - sigma_theta e3`.
pub fn step_attitude_coupled(
    est: &AttEstimate,
    omega_b: &Vec3,
    omega_t: &Vec3,
    sigma_r: &Vec3,
    sigma_theta: f64,
    dt: f64,
) -> AttEstimate {
    let total = sigma_r - sigma_theta * Vec3::z();
    step_attitude(est, omega_b, omega_t, &total, dt)
}

/// Normal-alignment error `1 - e3^T (Rhat eta)`, in `[0, 2]`.
pub fn normal_error(rhat: &Rot3, eta: &UnitVec3) -> f64 {
    1.0 - Vec3::z().dot(&(*rhat * eta.into_inner()))
}

/// Rotation angle about `e3` of the twist factor of `r` — the yaw component
/// of an attitude error `Rhat R^T`.
///
/// Diagnostic only: meaningful once the normal has converged (the error is
/// then close to a pure `e3` twist); far from convergence it is just the
/// angle of the in-plane block.
pub fn e3_twist_angle(r: &Rot3) -> f64 {
    let m = r.matrix();
    (m[(1, 0)] - m[(0, 1)]).atan2(m[(0, 0)] + m[(1, 1)])
}
