//! Riccati observer for the relative position and velocity, in the 6-state
//! cascade form and the 7-state coupled form that adds a constant-yaw error
//! channel.
//!
//! The estimator integrates
//! `xi_hat_dot = -w_B^x xi_hat + v_hat + sigma_xi`,
//! `v_hat_dot  = -w_B^x v_hat + a_B - Rhat^T a_T + sigma_v`,
//! with innovations `sigma = K y`, `K = P C^T D`, `y = -pi_{y_xi} xi_hat`,
//! where `P` solves the continuous Riccati equation
//! `P_dot = A P + P A^T - P C^T D C P + S`. In coupled mode the state matrix
//! gains a column coupling the yaw error into the velocity error through
//! `Rhat^T (a_T x e3)`, and the seventh gain row yields the scalar yaw
//! innovation `sigma_theta` consumed by the attitude filter.
//!
//! Gains are recomputed from the current bearing every integration step and
//! held for the step. A Riccati iterate that loses positive definiteness is a
//! hard fault, reported rather than clamped.

use nalgebra::{DMatrix, SMatrix};

use crate::error::{Error, Result};
use crate::geom3::{projector, skew, Mat3, Rot3, UnitVec3, Vec3};
use crate::sensors::VisionReading;

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat7 = SMatrix<f64, 7, 7>;
pub type Mat3x6 = SMatrix<f64, 3, 6>;
pub type Mat3x7 = SMatrix<f64, 3, 7>;

/// Translational estimate, plus the integrated yaw channel in coupled mode.
///
/// `theta_channel` accumulates `-integral(sigma_theta dt)`; it is a diagnostic
/// readout of how much yaw the coupled observer has absorbed, and never feeds
/// back into the translational propagation.
#[derive(Clone, Copy, Debug)]
pub struct PvEstimate {
    pub xi_hat: Vec3,
    pub v_hat: Vec3,
    pub theta_channel: Option<f64>,
}

/// Innovations applied over one step.
#[derive(Clone, Copy, Debug, Default)]
pub struct InnovationSet {
    pub sigma_xi: Vec3,
    pub sigma_v: Vec3,
    pub sigma_theta: Option<f64>,
}

/// Riccati covariance-like state, `N = 6` (cascade) or `N = 7` (coupled).
#[derive(Clone, Copy, Debug)]
pub struct RiccatiState<const N: usize> {
    p: SMatrix<f64, N, N>,
}

impl<const N: usize> RiccatiState<N> {
    /// Wraps a matrix after checking symmetry and positive definiteness.
    pub fn new(p: SMatrix<f64, N, N>) -> Result<Self> {
        let defect = (p - p.transpose()).norm();
        if defect > 1e-9 {
            return Err(Error::Config(format!(
                "Riccati initial state is not symmetric (defect {defect:.3e})"
            )));
        }
        if nalgebra::Cholesky::new(p).is_none() {
            return Err(Error::Config(
                "Riccati initial state is not positive definite".into(),
            ));
        }
        Ok(RiccatiState { p })
    }

    /// `alpha * I`, the usual initialization (`alpha > 0`).
    pub fn scaled_identity(alpha: f64) -> Self {
        RiccatiState { p: SMatrix::identity() * alpha }
    }

    pub fn matrix(&self) -> &SMatrix<f64, N, N> {
        &self.p
    }

    pub fn symmetry_defect(&self) -> f64 {
        (self.p - self.p.transpose()).norm()
    }

    /// Smallest eigenvalue; exact symmetric solve, for diagnostics and trace
    /// sampling (the per-step positivity guard uses a Cholesky test instead).
    pub fn min_eigenvalue(&self) -> f64 {
        let dm = DMatrix::from_column_slice(N, N, self.p.as_slice());
        dm.symmetric_eigen().eigenvalues.min()
    }
}

/// Riccati tuning: output weight, state-noise template scales, and the floor
/// of the gamma schedule.
#[derive(Clone, Copy, Debug)]
pub struct RiccatiConfig {
    /// Output weight `D` (SPD).
    pub d: Mat3,
    /// Scale of the position block of `S`.
    pub s_position: f64,
    /// Scale of the velocity block of `S`; multiplied by `gamma`.
    pub s_velocity: f64,
    /// Scale of the yaw-channel entry of `S` (coupled mode only).
    pub s_theta: f64,
    /// Additive floor in the gamma schedule (the `1e-2` term).
    pub gamma_floor: f64,
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        RiccatiConfig {
            d: Mat3::identity() * 10.0,
            s_position: 0.05,
            s_velocity: 0.05,
            s_theta: 0.05,
            gamma_floor: 1e-2,
        }
    }
}

/// State matrix of the relative-translation error system,
/// `[[-w_B^x, I], [0, -w_B^x]]`.
pub fn build_a(omega_b: &Vec3) -> Mat6 {
    let mut a = Mat6::zeros();
    let w = skew(omega_b);
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-w));
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&Mat3::identity());
    a.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-w));
    a
}

/// Output matrix `[pi_{y_xi}, 0]`.
pub fn build_c(y_xi: &UnitVec3) -> Mat3x6 {
    let mut c = Mat3x6::zeros();
    c.fixed_view_mut::<3, 3>(0, 0).copy_from(&projector(y_xi));
    c
}

/// Measured output `y = -pi_{y_xi} xi_hat`: the visible part of the position
/// error, since the projector annihilates the true separation.
pub fn output_y(y_xi: &UnitVec3, xi_hat: &Vec3) -> Vec3 {
    -(projector(y_xi) * xi_hat)
}

/// Velocity-noise schedule `gamma = |a_T|^2 (1 - eta_hat^T eta + floor)`:
/// large while the attitude disagrees with the measured normal, decaying to
/// `|a_T|^2 floor` as it converges.
pub fn gamma_schedule(a_t: &Vec3, eta_hat: &UnitVec3, eta: &UnitVec3, floor: f64) -> f64 {
    a_t.norm_squared() * (1.0 - eta_hat.dot(eta) + floor)
}

/// Cascade state-noise matrix `diag(s_p I3, s_v gamma I3)`.
pub fn build_s_cascade(cfg: &RiccatiConfig, gamma: f64) -> Mat6 {
    let mut s = Mat6::zeros();
    for i in 0..3 {
        s[(i, i)] = cfg.s_position;
        s[(i + 3, i + 3)] = cfg.s_velocity * gamma;
    }
    s
}

/// Coupled state-noise matrix `diag(s_p I3, s_v gamma I3, s_theta)`.
pub fn build_s_coupled(cfg: &RiccatiConfig, gamma: f64) -> Mat7 {
    let mut s = Mat7::zeros();
    for i in 0..3 {
        s[(i, i)] = cfg.s_position;
        s[(i + 3, i + 3)] = cfg.s_velocity * gamma;
    }
    s[(6, 6)] = cfg.s_theta;
    s
}

/// One fixed step of `P_dot = A P + P A^T - P C^T D C P + S` (classical RK4
/// with the coefficients held), followed by symmetrization.
///
/// `t` only labels the fault diagnostic. Loss of positive definiteness
/// (detected by a Cholesky test on the symmetrized iterate) is a hard fault.
pub fn riccati_step<const N: usize>(
    state: &RiccatiState<N>,
    a: &SMatrix<f64, N, N>,
    c: &SMatrix<f64, 3, N>,
    d: &Mat3,
    s: &SMatrix<f64, N, N>,
    dt: f64,
    t: f64,
) -> Result<RiccatiState<N>> {
    let q = c.transpose() * d * c; // C^T D C, constant over the step
    let f = |p: &SMatrix<f64, N, N>| a * p + p * a.transpose() - p * q * p + s;

    let p0 = state.p;
    let k1 = f(&p0);
    let k2 = f(&(p0 + k1 * (dt / 2.0)));
    let k3 = f(&(p0 + k2 * (dt / 2.0)));
    let k4 = f(&(p0 + k3 * dt));
    let p1 = p0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    let sym = (p1 + p1.transpose()) * 0.5;

    if nalgebra::Cholesky::new(sym).is_none() {
        let lambda_min = RiccatiState { p: sym }.min_eigenvalue();
        return Err(Error::RiccatiNotPositiveDefinite { t, lambda_min });
    }
    Ok(RiccatiState { p: sym })
}

/// Riccati gain `K = P C^T D`, rows partitioned as `(K_xi; K_v[; K_theta])`.
pub fn compute_gains<const N: usize>(
    state: &RiccatiState<N>,
    c: &SMatrix<f64, 3, N>,
    d: &Mat3,
) -> SMatrix<f64, N, 3> {
    state.p * c.transpose() * d
}

/// One RK4 step of the translational estimator with all inputs and
/// innovations held constant. Exact for these linear constant-coefficient
/// dynamics up to the integrator's order; the yaw channel integrates
/// `-sigma_theta` exactly.
pub fn step_pv(
    est: &PvEstimate,
    omega_b: &Vec3,
    a_b: &Vec3,
    a_t: &Vec3,
    rhat: &Rot3,
    sigma: &InnovationSet,
    dt: f64,
) -> PvEstimate {
    let forcing = a_b - rhat.transpose() * *a_t;
    let deriv = |xi: &Vec3, v: &Vec3| -> (Vec3, Vec3) {
        (
            -omega_b.cross(xi) + v + sigma.sigma_xi,
            -omega_b.cross(v) + forcing + sigma.sigma_v,
        )
    };
    let (xi0, v0) = (est.xi_hat, est.v_hat);
    let (kx1, kv1) = deriv(&xi0, &v0);
    let (kx2, kv2) = deriv(&(xi0 + kx1 * (dt / 2.0)), &(v0 + kv1 * (dt / 2.0)));
    let (kx3, kv3) = deriv(&(xi0 + kx2 * (dt / 2.0)), &(v0 + kv2 * (dt / 2.0)));
    let (kx4, kv4) = deriv(&(xi0 + kx3 * dt), &(v0 + kv3 * dt));
    PvEstimate {
        xi_hat: xi0 + (kx1 + kx2 * 2.0 + kx3 * 2.0 + kx4) * (dt / 6.0),
        v_hat: v0 + (kv1 + kv2 * 2.0 + kv3 * 2.0 + kv4) * (dt / 6.0),
        theta_channel: match (est.theta_channel, sigma.sigma_theta) {
            (Some(th), Some(s_th)) => Some(th - s_th * dt),
            (other, _) => other,
        },
    }
}

/// 7x7 state matrix of the coupled error system: [`build_a`] plus the column
/// `(0_3; Rhat^T (a_T x e3))` coupling the constant yaw error into the
/// velocity error, and a zero last row.
pub fn build_a_theta(omega_b: &Vec3, rhat: &Rot3, a_t: &Vec3) -> Mat7 {
    let mut a = Mat7::zeros();
    a.fixed_view_mut::<6, 6>(0, 0).copy_from(&build_a(omega_b));
    let coupling = rhat.transpose() * a_t.cross(&Vec3::z());
    a.fixed_view_mut::<3, 1>(3, 6).copy_from(&coupling);
    a
}

/// Output matrix `[pi_{y_xi}, 0_{3x4}]` of the coupled system.
pub fn build_c_theta(y_xi: &UnitVec3) -> Mat3x7 {
    let mut c = Mat3x7::zeros();
    c.fixed_view_mut::<3, 3>(0, 0).copy_from(&projector(y_xi));
    c
}

/// One coupled-mode step: builds the 7-state matrices from the current
/// bearing/normal and attitude estimate, forms `sigma = K y` with
/// `K = P C_theta^T D`, advances the translational estimate and the 7x7
/// Riccati state, and returns the scalar yaw innovation for the attitude
/// filter. All coefficients are frozen at the step start; `t` labels faults.
#[allow(clippy::too_many_arguments)]
pub fn step_coupled(
    est: &PvEstimate,
    riccati: &RiccatiState<7>,
    cfg: &RiccatiConfig,
    rhat: &Rot3,
    omega_b: &Vec3,
    a_b: &Vec3,
    a_t: &Vec3,
    vision: &VisionReading,
    dt: f64,
    t: f64,
) -> Result<(PvEstimate, RiccatiState<7>, f64)> {
    let a = build_a_theta(omega_b, rhat, a_t);
    let c = build_c_theta(&vision.bearing);
    let eta_hat = UnitVec3::new_normalize(rhat.transpose() * Vec3::z());
    let gamma = gamma_schedule(a_t, &eta_hat, &vision.normal, cfg.gamma_floor);
    let s = build_s_coupled(cfg, gamma);

    let k = compute_gains(riccati, &c, &cfg.d);
    let y = output_y(&vision.bearing, &est.xi_hat);
    let full = k * y;
    let sigma = InnovationSet {
        sigma_xi: Vec3::new(full[0], full[1], full[2]),
        sigma_v: Vec3::new(full[3], full[4], full[5]),
        sigma_theta: Some(full[6]),
    };

    let next_est = step_pv(est, omega_b, a_b, a_t, rhat, &sigma, dt);
    let next_riccati = riccati_step(riccati, &a, &c, &cfg.d, &s, dt, t)?;
    Ok((next_est, next_riccati, full[6]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom3::{exp_so3, random_rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(v: Vec3) -> UnitVec3 {
        UnitVec3::new_normalize(v)
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> UnitVec3 {
        loop {
            let v = Vec3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            if v.norm() > 1e-2 {
                return unit(v);
            }
        }
    }

    fn random_spd<const N: usize>(rng: &mut ChaCha8Rng) -> SMatrix<f64, N, N> {
        let m = SMatrix::<f64, N, N>::from_fn(|_, _| rng.random::<f64>() - 0.5);
        m * m.transpose() + SMatrix::identity() * 0.5
    }

    #[test]
    fn state_matrix_blocks() {
        let a = build_a(&Vec3::zeros());
        let mut expected = Mat6::zeros();
        expected.fixed_view_mut::<3, 3>(0, 3).copy_from(&Mat3::identity());
        assert_eq!(a, expected);

        let a = build_a(&Vec3::new(0.0, 0.0, 0.5));
        assert_eq!(
            Mat3::from(a.fixed_view::<3, 3>(0, 0)),
            -skew(&Vec3::new(0.0, 0.0, 0.5))
        );
        assert_eq!(Mat3::from(a.fixed_view::<3, 3>(3, 0)), Mat3::zeros());

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let w = Vec3::new(rng.random(), rng.random(), rng.random());
            assert_eq!(build_a(&w).trace(), 0.0);
        }
    }

    #[test]
    fn output_matrix_is_the_bearing_projector() {
        let c = build_c(&unit(Vec3::z()));
        let mut expected = Mat3x6::zeros();
        expected[(0, 0)] = 1.0;
        expected[(1, 1)] = 1.0;
        assert_eq!(c, expected);

        // The projector annihilates the bearing direction, so any state whose
        // position part is parallel to the bearing is in the kernel.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let y = random_unit(&mut rng);
            let c = build_c(&y);
            let mut x = SMatrix::<f64, 6, 1>::zeros();
            x.fixed_view_mut::<3, 1>(0, 0).copy_from(&(y.into_inner() * 3.7));
            x.fixed_view_mut::<3, 1>(3, 0)
                .copy_from(&Vec3::new(rng.random(), rng.random(), rng.random()));
            assert!((c * x).norm() <= 1e-14);

            // Rank 2: two singular values near 1, one at zero.
            let svd = c.svd(false, false);
            let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
            sv.sort_by(|p, q| q.partial_cmp(p).unwrap());
            assert!(sv[1] > 0.99 && sv[2] <= 1e-12);
        }
    }

    #[test]
    fn output_examples() {
        let y = unit(Vec3::z());
        assert_eq!(output_y(&y, &Vec3::new(1.0, 2.0, 3.0)), Vec3::new(-1.0, -2.0, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let y = random_unit(&mut rng);
            let xi = y.into_inner() * (rng.random::<f64>() * 10.0);
            assert!(output_y(&y, &xi).norm() <= 1e-13);

            let xi_hat = Vec3::new(rng.random(), rng.random(), rng.random());
            assert!(y.dot(&output_y(&y, &xi_hat)).abs() <= 1e-14);
        }
    }

    #[test]
    fn gamma_examples() {
        let e3 = unit(Vec3::z());
        let g = gamma_schedule(&(9.81 * Vec3::z()), &e3, &e3, 1e-2);
        assert!((g - 0.962361).abs() <= 1e-12);

        let g = gamma_schedule(&Vec3::x(), &unit(-Vec3::z()), &e3, 1e-2);
        assert!((g - 2.01).abs() <= 1e-15);

        assert_eq!(gamma_schedule(&Vec3::zeros(), &e3, &e3, 1e-2), 0.0);

        // Floor: gamma >= |a_T|^2 * floor, with equality at agreement.
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..20 {
            let a_t = Vec3::new(rng.random(), rng.random(), rng.random());
            let eta = random_unit(&mut rng);
            let eta_hat = random_unit(&mut rng);
            assert!(gamma_schedule(&a_t, &eta_hat, &eta, 1e-2) >= a_t.norm_squared() * 1e-2 - 1e-12);
        }
    }

    #[test]
    fn state_noise_blocks() {
        let cfg = RiccatiConfig::default();
        assert_eq!(build_s_cascade(&cfg, 1.0), Mat6::identity() * 0.05);

        let s = build_s_coupled(&cfg, 2.0);
        let mut expected = Mat7::zeros();
        for i in 0..3 {
            expected[(i, i)] = 0.05;
            expected[(i + 3, i + 3)] = 0.1;
        }
        expected[(6, 6)] = 0.05;
        assert_eq!(s, expected);

        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..10 {
            let gamma = rng.random::<f64>() * 5.0 + 1e-6;
            let s = build_s_coupled(&cfg, gamma);
            assert!((0..7).all(|i| s[(i, i)] > 0.0));
        }
    }

    #[test]
    fn riccati_grows_linearly_without_dynamics() {
        // A = 0, C = 0, S = 0.05 I: P(t) = P(0) + 0.05 t I, exact for RK4.
        let mut p = RiccatiState::<6>::scaled_identity(2.0);
        let a = Mat6::zeros();
        let c = Mat3x6::zeros();
        let d = Mat3::identity() * 10.0;
        let s = Mat6::identity() * 0.05;
        let dt = 1e-2;
        for k in 0..1000 {
            p = riccati_step(&p, &a, &c, &d, &s, dt, k as f64 * dt).unwrap();
        }
        let expected = Mat6::identity() * 2.5;
        assert!((p.matrix() - expected).norm() <= 1e-12);
    }

    #[test]
    fn riccati_stays_symmetric_over_long_runs() {
        let mut p = RiccatiState::<6>::scaled_identity(2.0);
        let d = Mat3::identity() * 10.0;
        let s = Mat6::identity() * 0.05;
        let dt = 1e-3;
        for k in 0..10_000 {
            let t = k as f64 * dt;
            let a = build_a(&Vec3::new(0.2 * t.sin(), 0.0, 0.5));
            let y = unit(Vec3::new(t.cos(), t.sin(), -1.0));
            let c = build_c(&y);
            p = riccati_step(&p, &a, &c, &d, &s, dt, t).unwrap();
        }
        assert!(p.symmetry_defect() <= 1e-12);
        assert!(p.min_eigenvalue() > 0.0);
    }

    #[test]
    fn riccati_reports_loss_of_positivity() {
        // An absurdly large output weight makes the quadratic decay term
        // overshoot at this step size, driving the iterate indefinite.
        let p = RiccatiState::<6>::scaled_identity(2.0);
        let a = Mat6::zeros();
        let c = build_c(&unit(Vec3::z()));
        let d = Mat3::identity() * 1e6;
        let s = Mat6::zeros();
        let result = riccati_step(&p, &a, &c, &d, &s, 0.1, 3.25);
        match result {
            Err(Error::RiccatiNotPositiveDefinite { t, lambda_min }) => {
                assert_eq!(t, 3.25);
                assert!(lambda_min <= 0.0);
            }
            other => panic!("expected positivity fault, got {other:?}"),
        }
    }

    #[test]
    fn gain_examples() {
        let p = RiccatiState::<6>::scaled_identity(1.0);
        let c = build_c(&unit(Vec3::z()));
        let d = Mat3::identity() * 10.0;
        let k = compute_gains(&p, &c, &d);
        let k_xi = Mat3::from(k.fixed_view::<3, 3>(0, 0).transpose()).transpose();
        let k_v = Mat3::from(k.fixed_view::<3, 3>(3, 0).transpose()).transpose();
        let mut pi = Mat3::identity();
        pi[(2, 2)] = 0.0;
        assert_eq!(k_xi, pi * 10.0);
        assert_eq!(k_v, Mat3::zeros());

        // Linearity in D (alpha = 2 is exact in floating point).
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let p = RiccatiState::<6>::new(random_spd(&mut rng)).unwrap();
        let c = build_c(&random_unit(&mut rng));
        let k1 = compute_gains(&p, &c, &d);
        let k2 = compute_gains(&p, &c, &(d * 2.0));
        assert_eq!(k2, k1 * 2.0);
    }

    #[test]
    fn gains_never_push_along_the_bearing() {
        // With an isotropic D the gain annihilates the bearing direction, so the
        // innovation cannot move the estimate along the unobservable range axis.
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let d = Mat3::identity() * 10.0;
        for _ in 0..50 {
            let p = RiccatiState::<6>::new(random_spd(&mut rng)).unwrap();
            let y = random_unit(&mut rng);
            let k = compute_gains(&p, &build_c(&y), &d);
            assert!((k * y.into_inner()).norm() <= 1e-12);
        }
    }

    #[test]
    fn drift_step_is_exact() {
        let est = PvEstimate {
            xi_hat: Vec3::zeros(),
            v_hat: Vec3::new(1.0, 0.0, 0.0),
            theta_channel: None,
        };
        let next = step_pv(
            &est,
            &Vec3::zeros(),
            &Vec3::zeros(),
            &Vec3::zeros(),
            &Rot3::identity(),
            &InnovationSet::default(),
            0.01,
        );
        assert!((next.xi_hat - Vec3::new(0.01, 0.0, 0.0)).norm() <= 1e-16);
        assert_eq!(next.v_hat, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(next.theta_channel, None);
    }

    #[test]
    fn theta_channel_integrates_the_yaw_innovation() {
        let mut est = PvEstimate {
            xi_hat: Vec3::zeros(),
            v_hat: Vec3::zeros(),
            theta_channel: Some(0.0),
        };
        let sigma = InnovationSet { sigma_theta: Some(0.5), ..InnovationSet::default() };
        for _ in 0..100 {
            est = step_pv(
                &est,
                &Vec3::zeros(),
                &Vec3::zeros(),
                &Vec3::zeros(),
                &Rot3::identity(),
                &sigma,
                0.01,
            );
        }
        assert!((est.theta_channel.unwrap() + 0.5).abs() <= 1e-12);
    }

    #[test]
    fn coupled_state_matrix_examples() {
        // a_T parallel to e3: no coupling.
        let a = build_a_theta(&Vec3::zeros(), &Rot3::identity(), &(9.81 * Vec3::z()));
        assert_eq!(a.fixed_view::<7, 1>(0, 6).clone_owned(), SMatrix::<f64, 7, 1>::zeros());

        // Hand-computed coupling: (1,0,0) x e3 = (0,-1,0).
        let a = build_a_theta(&Vec3::zeros(), &Rot3::identity(), &Vec3::x());
        let col = a.fixed_view::<7, 1>(0, 6).clone_owned();
        let mut expected = SMatrix::<f64, 7, 1>::zeros();
        expected[4] = -1.0;
        assert_eq!(col, expected);

        // Last row identically zero for random inputs.
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for _ in 0..20 {
            let a = build_a_theta(
                &Vec3::new(rng.random(), rng.random(), rng.random()),
                &random_rotation(30.0, 30.0, &mut rng),
                &Vec3::new(rng.random(), rng.random(), rng.random()),
            );
            assert_eq!(a.fixed_view::<1, 7>(6, 0).clone_owned(), SMatrix::<f64, 1, 7>::zeros());
            // Upper-left 6x6 block is the cascade matrix.
        }
    }

    #[test]
    fn coupled_output_matrix_mirrors_the_cascade_one() {
        let c = build_c_theta(&unit(Vec3::z()));
        let mut expected = Mat3x7::zeros();
        expected[(0, 0)] = 1.0;
        expected[(1, 1)] = 1.0;
        assert_eq!(c, expected);

        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let y = random_unit(&mut rng);
            let c = build_c_theta(&y);
            let mut x = SMatrix::<f64, 7, 1>::zeros();
            x.fixed_view_mut::<3, 1>(0, 0).copy_from(&(y.into_inner() * -2.2));
            x[6] = rng.random();
            assert!((c * x).norm() <= 1e-14);

            let svd = c.svd(false, false);
            let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
            sv.sort_by(|p, q| q.partial_cmp(p).unwrap());
            assert!(sv[1] > 0.99 && sv[2] <= 1e-12);
        }
    }

    #[test]
    fn coupled_step_with_aligned_estimate_gives_zero_innovations() {
        // xi_hat parallel to the bearing means y = 0, so sigma = K y = 0 and the
        // yaw innovation vanishes.
        let est = PvEstimate {
            xi_hat: Vec3::new(0.0, 0.0, 5.0),
            v_hat: Vec3::zeros(),
            theta_channel: Some(0.0),
        };
        let riccati = RiccatiState::<7>::scaled_identity(2.0);
        let cfg = RiccatiConfig::default();
        let vision = VisionReading { bearing: unit(Vec3::z()), normal: unit(Vec3::z()) };
        let (next, _, sigma_theta) = step_coupled(
            &est,
            &riccati,
            &cfg,
            &Rot3::identity(),
            &Vec3::zeros(),
            &Vec3::zeros(),
            &Vec3::zeros(),
            &vision,
            1e-3,
            0.0,
        )
        .unwrap();
        assert_eq!(sigma_theta, 0.0);
        assert_eq!(next.theta_channel, Some(0.0));
        assert_eq!(next.xi_hat, est.xi_hat);
    }

    #[test]
    fn unobservable_yaw_receives_no_correction() {
        // With a_T parallel to e3 and Rhat = I the coupling column is zero; the
        // theta block of P stays decoupled (its cross terms remain exactly zero,
        // the diagonal grows linearly with S) and sigma_theta stays zero even
        // though y != 0.
        let mut est = PvEstimate {
            xi_hat: Vec3::new(0.3, -0.2, 4.0),
            v_hat: Vec3::new(0.1, 0.0, -0.1),
            theta_channel: Some(0.0),
        };
        let mut riccati = RiccatiState::<7>::scaled_identity(2.0);
        let cfg = RiccatiConfig::default();
        let vision = VisionReading { bearing: unit(Vec3::z()), normal: unit(Vec3::z()) };
        let a_t = 9.81 * Vec3::z();
        let dt = 1e-3;
        let n = 200;
        for k in 0..n {
            let (next, rnext, sigma_theta) = step_coupled(
                &est,
                &riccati,
                &cfg,
                &Rot3::identity(),
                &Vec3::zeros(),
                &Vec3::zeros(),
                &a_t,
                &vision,
                dt,
                k as f64 * dt,
            )
            .unwrap();
            assert_eq!(sigma_theta, 0.0);
            est = next;
            riccati = rnext;
        }
        let p = riccati.matrix();
        for i in 0..6 {
            assert_eq!(p[(6, i)], 0.0);
            assert_eq!(p[(i, 6)], 0.0);
        }
        // gamma = |a_T|^2 * floor here (eta_hat = eta), so the theta diagonal
        // integrates s_theta exactly.
        let expected = 2.0 + cfg.s_theta * n as f64 * dt;
        assert!((p[(6, 6)] - expected).abs() <= 1e-12);
        assert_eq!(est.theta_channel, Some(0.0));
    }

    #[test]
    fn first_order_yaw_expansion_bound() {
        // |exp(theta e3^x) - I - theta skew(e3)|_F <= theta^2 for |theta| <= 0.5:
        // the small-angle linearization the coupled design rests on.
        for i in 0..=100 {
            let theta = -0.5 + i as f64 * 0.01;
            let lin = Mat3::identity() + skew(&Vec3::z()) * theta;
            let err = (exp_so3(&(Vec3::z() * theta)).matrix() - lin).norm();
            assert!(err <= theta * theta + 1e-15, "theta {theta}: {err:.3e}");
        }
    }

    #[test]
    fn riccati_state_validation() {
        let mut m = Mat6::identity();
        m[(0, 1)] = 0.5; // asymmetric
        assert!(RiccatiState::<6>::new(m).is_err());

        let m = Mat6::identity() * -1.0;
        assert!(RiccatiState::<6>::new(m).is_err());

        assert!(RiccatiState::<6>::new(Mat6::identity() * 2.0).is_ok());
    }
}
