//! The complementary attitude filter in isolation: propagate with both
//! angular velocities, correct toward the measured platform normal, and watch
//! the alignment error decay monotonically.
//!
//! The filter only observes the normal, so it can only align `Rhat eta` with
//! the vertical: the reduced (normal) error converges exponentially while the
//! twist about e3 is left wherever the initial error put it. Recovering that
//! last angle is the coupled observer's job.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relnav::att_observer::{normal_error, sigma_r, step_attitude, AttConfig, AttEstimate};
use relnav::geom3::{random_rotation, Vec3};
use relnav::sensors::measure_normal;
use relnav::truthsim::{relative_state, step_world, RigidState, Scenario, WorldTruth};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let scenario = Scenario::Cascade;
    let cfg = AttConfig::default();
    let dt = 1e-3;

    let mut world = WorldTruth {
        t: 0.0,
        body: RigidState {
            attitude: relnav::geom3::Rot3::identity(),
            position: Vec3::new(0.0, 0.0, 8.0),
            velocity: Vec3::new(2.0, 0.0, 0.0),
        },
        target: RigidState {
            attitude: relnav::geom3::Rot3::identity(),
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
        },
    };
    let r0 = relative_state(&world).rotation;
    let mut est = AttEstimate { rhat: random_rotation(45.0, 30.0, &mut rng) * r0 };

    println!("{:>6}  {:>12}  {:>14}", "t [s]", "normal err", "lyapunov value");
    let mut last_v = 3.0 - (est.rhat * r0.transpose()).matrix().trace();
    let mut worst_increase = f64::NEG_INFINITY;
    for k in 0..20_000u64 {
        let t = k as f64 * dt;
        let rel = relative_state(&world);
        let inputs = scenario.inputs(t, &world);
        let eta = measure_normal(&rel);
        if k % 2000 == 0 {
            let v = 3.0 - (est.rhat * rel.rotation.transpose()).matrix().trace();
            println!("{:>6.1}  {:>12.3e}  {:>14.3e}", t, normal_error(&est.rhat, &eta), v);
        }

        // One filter step: innovation from the current normal, exact
        // held-input propagation with both angular rates.
        let sigma = sigma_r(&est.rhat, &eta, cfg.k_r);
        est = step_attitude(&est, &inputs.omega_b, &inputs.omega_t, &sigma, dt);

        world = step_world(&world, scenario, dt);
        world.t = (k + 1) as f64 * dt;
        let v = 3.0 - (est.rhat * relative_state(&world).rotation.transpose()).matrix().trace();
        worst_increase = worst_increase.max(v - last_v);
        last_v = v;
    }
    println!("largest single-step Lyapunov increase: {worst_increase:.3e}");
    println!("(the held-input step tracks the continuous descent to second order in dt;");
    println!("the run harness tightens this to rounding level with a trapezoid correction)");
}
