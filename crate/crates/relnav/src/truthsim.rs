//! Ground-truth rigid-body simulation for the UAV ("body") and the landing
//! platform ("target").
//!
//! Both vehicles follow `Q_dot = Q w^x`, `p_dot = v`, `v_dot = Q a + g e3`,
//! driven by body-frame rate and specific-force inputs. The two benchmark
//! input programs ([`Scenario::Cascade`] and [`Scenario::Coupled`]) are
//! evaluated at every integrator stage, so the classical RK4 step keeps its
//! full order even though the inputs depend on time and state. Attitudes are
//! re-projected onto the rotation group after every step.

use serde::{Deserialize, Serialize};

use crate::geom3::{nearest_rotation, skew, Mat3, Rot3, Vec3};

/// Gravitational acceleration (m/s^2) along `+e3`.
pub const GRAVITY: f64 = 9.81;

/// Attitude, position, and velocity of one rigid body (world frame, except
/// where noted).
#[derive(Clone, Copy, Debug)]
pub struct RigidState {
    pub attitude: Rot3,
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Truth state of both vehicles at time `t`.
#[derive(Clone, Copy, Debug)]
pub struct WorldTruth {
    pub t: f64,
    pub body: RigidState,
    pub target: RigidState,
}

/// Body-frame angular rates and specific forces for both vehicles at one instant.
#[derive(Clone, Copy, Debug)]
pub struct ScenarioInputs {
    pub omega_b: Vec3,
    pub a_b: Vec3,
    pub omega_t: Vec3,
    pub a_t: Vec3,
}

/// Benchmark input programs.
///
/// `Cascade`: the UAV flies a horizontal circle (constant yaw rate 0.5 rad/s,
/// level thrust) while the platform stays put but rolls with rate
/// `(-1.5 sin t, 0, 0)`. `Coupled`: the platform also translates on a circle
/// (yaw rate -0.8 rad/s), so its normal stays vertical and yaw recovery must
/// come from the translational coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Cascade,
    Coupled,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Cascade => "cascade",
            Scenario::Coupled => "coupled",
        })
    }
}

impl Scenario {
    /// Evaluates the scenario's input program at `(t, w)`.
    pub fn inputs(&self, t: f64, w: &WorldTruth) -> ScenarioInputs {
        inputs_raw(*self, t, &RawWorld::from_world(w))
    }
}

/// Cascade-benchmark inputs; see [`Scenario`].
pub fn cascade_inputs(t: f64, w: &WorldTruth) -> ScenarioInputs {
    Scenario::Cascade.inputs(t, w)
}

/// Coupled-benchmark inputs; see [`Scenario`].
pub fn coupled_inputs(t: f64, w: &WorldTruth) -> ScenarioInputs {
    Scenario::Coupled.inputs(t, w)
}

/// Relative state of the body with respect to the target, expressed per the
/// estimator convention: `xi = Q_B^T (p_B - p_T)`, `v = Q_B^T (v_B - v_T)`,
/// `R = Q_T^T Q_B`.
#[derive(Clone, Copy, Debug)]
pub struct RelativeState {
    pub rotation: Rot3,
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Computes the relative state from the two truth states.
pub fn relative_state(w: &WorldTruth) -> RelativeState {
    let qb_t = w.body.attitude.transpose();
    RelativeState {
        rotation: w.target.attitude.transpose() * w.body.attitude,
        position: qb_t * (w.body.position - w.target.position),
        velocity: qb_t * (w.body.velocity - w.target.velocity),
    }
}

/// Raw (unprojected) copy of the world state used inside integrator stages.
#[derive(Clone, Copy)]
struct RawWorld {
    qb: Mat3,
    pb: Vec3,
    vb: Vec3,
    qt: Mat3,
    pt: Vec3,
    vt: Vec3,
}

impl RawWorld {
    fn from_world(w: &WorldTruth) -> Self {
        RawWorld {
            qb: *w.body.attitude.matrix(),
            pb: w.body.position,
            vb: w.body.velocity,
            qt: *w.target.attitude.matrix(),
            pt: w.target.position,
            vt: w.target.velocity,
        }
    }

    fn axpy(&self, h: f64, d: &RawWorld) -> RawWorld {
        RawWorld {
            qb: self.qb + h * d.qb,
            pb: self.pb + h * d.pb,
            vb: self.vb + h * d.vb,
            qt: self.qt + h * d.qt,
            pt: self.pt + h * d.pt,
            vt: self.vt + h * d.vt,
        }
    }
}

fn inputs_raw(scenario: Scenario, t: f64, w: &RawWorld) -> ScenarioInputs {
    let e3 = Vec3::z();
    let omega_b = Vec3::new(0.0, 0.0, 0.5);
    let v_b_body = w.qb.transpose() * w.vb;
    let a_b = omega_b.cross(&v_b_body) - GRAVITY * (w.qb.transpose() * e3);
    let (omega_t, a_t) = match scenario {
        Scenario::Cascade => {
            let omega_t = Vec3::new(-1.5 * t.sin(), 0.0, 0.0);
            let a_t = -GRAVITY * (w.qt.transpose() * e3);
            (omega_t, a_t)
        }
        Scenario::Coupled => {
            let omega_t = Vec3::new(0.0, 0.0, -0.8);
            let v_t_body = w.qt.transpose() * w.vt;
            let a_t = omega_t.cross(&v_t_body) - GRAVITY * (w.qt.transpose() * e3);
            (omega_t, a_t)
        }
    };
    ScenarioInputs { omega_b, a_b, omega_t, a_t }
}

fn world_deriv(scenario: Scenario, t: f64, w: &RawWorld) -> RawWorld {
    let u = inputs_raw(scenario, t, w);
    let g = GRAVITY * Vec3::z();
    RawWorld {
        qb: w.qb * skew(&u.omega_b),
        pb: w.vb,
        vb: w.qb * u.a_b + g,
        qt: w.qt * skew(&u.omega_t),
        pt: w.vt,
        vt: w.qt * u.a_t + g,
    }
}

/// Advances both vehicles one RK4 step under the scenario's input program,
/// evaluating the inputs at every stage, then re-projects both attitudes.
pub fn step_world(w: &WorldTruth, scenario: Scenario, dt: f64) -> WorldTruth {
    let y0 = RawWorld::from_world(w);
    let t = w.t;
    let k1 = world_deriv(scenario, t, &y0);
    let k2 = world_deriv(scenario, t + dt / 2.0, &y0.axpy(dt / 2.0, &k1));
    let k3 = world_deriv(scenario, t + dt / 2.0, &y0.axpy(dt / 2.0, &k2));
    let k4 = world_deriv(scenario, t + dt, &y0.axpy(dt, &k3));
    let sum = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    let y1 = y0.axpy(dt / 6.0, &sum);
    WorldTruth {
        t: t + dt,
        body: RigidState {
            attitude: nearest_rotation(&y1.qb).expect("body attitude left the rotation group"),
            position: y1.pb,
            velocity: y1.vb,
        },
        target: RigidState {
            attitude: nearest_rotation(&y1.qt).expect("target attitude left the rotation group"),
            position: y1.pt,
            velocity: y1.vt,
        },
    }
}

/// Advances a single rigid body one RK4 step with the inputs held constant,
/// then re-projects the attitude. The constant-input primitive used by tests
/// and by callers that manage their own input sampling.
pub fn step_rigid(s: &RigidState, omega: &Vec3, a: &Vec3, dt: f64) -> RigidState {
    let deriv = |q: &Mat3, v: &Vec3| -> (Mat3, Vec3, Vec3) {
        (q * skew(omega), *v, q * a + GRAVITY * Vec3::z())
    };
    let q0 = *s.attitude.matrix();
    let (p0, v0) = (s.position, s.velocity);

    let (kq1, kp1, kv1) = deriv(&q0, &v0);
    let (kq2, kp2, kv2) = deriv(&(q0 + dt / 2.0 * kq1), &(v0 + dt / 2.0 * kv1));
    let (kq3, kp3, kv3) = deriv(&(q0 + dt / 2.0 * kq2), &(v0 + dt / 2.0 * kv2));
    let (kq4, kp4, kv4) = deriv(&(q0 + dt * kq3), &(v0 + dt * kv3));

    let q1 = q0 + dt / 6.0 * (kq1 + 2.0 * kq2 + 2.0 * kq3 + kq4);
    let p1 = p0 + dt / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    let v1 = v0 + dt / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
    RigidState {
        attitude: nearest_rotation(&q1).expect("attitude left the rotation group"),
        position: p1,
        velocity: v1,
    }
}
