//! Measurement synthesis: body-frame IMU packaging and the two monocular-vision
//! directions (bearing to the platform and platform normal), with optional
//! additive/cone noise.
//!
//! All functions are pure; randomness comes from caller-owned generators, so a
//! fixed seed reproduces the exact byte-for-byte measurement stream.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom3::{UnitVec3, Vec3};
use crate::truthsim::RelativeState;

/// Below this separation (m) the bearing direction is no longer well defined and
/// the encounter is treated as "landed".
pub const MIN_RANGE: f64 = 1e-3;

/// Gyro and accelerometer rates packaged as one reading (body frame).
#[derive(Clone, Copy, Debug)]
pub struct ImuReading {
    pub omega: Vec3,
    pub a: Vec3,
}

/// One camera frame: unit bearing toward the platform and unit platform normal,
/// both expressed in the UAV body frame.
#[derive(Clone, Copy, Debug)]
pub struct VisionReading {
    pub bearing: UnitVec3,
    pub normal: UnitVec3,
}

/// Sensor noise levels. Zero everywhere (the default) reproduces the ideal
/// noise-free measurements bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Per-axis additive Gaussian std on angular rate (rad/s).
    pub gyro_std: f64,
    /// Per-axis additive Gaussian std on specific acceleration (m/s^2).
    pub accel_std: f64,
    /// Cone-angle std (deg) of the bearing perturbation.
    pub bearing_cone_std_deg: f64,
    /// Cone-angle std (deg) of the normal perturbation.
    pub normal_cone_std_deg: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            gyro_std: 0.0,
            accel_std: 0.0,
            bearing_cone_std_deg: 0.0,
            normal_cone_std_deg: 0.0,
        }
    }
}

impl NoiseSpec {
    /// All-zero noise: measurements pass through exactly.
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gyro_std", self.gyro_std),
            ("accel_std", self.accel_std),
            ("bearing_cone_std_deg", self.bearing_cone_std_deg),
            ("normal_cone_std_deg", self.normal_cone_std_deg),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Config(format!(
                    "noise.{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Unit bearing from the UAV to the platform, `xi / |xi|`.
///
/// Fails with [`Error::BearingUndefined`] once the separation drops below
/// `min_range`; callers treat that as touchdown rather than a defect.
pub fn measure_bearing(rel: &RelativeState, min_range: f64) -> Result<UnitVec3> {
    let range = rel.position.norm();
    if range < min_range {
        return Err(Error::BearingUndefined { range, min: min_range });
    }
    Ok(UnitVec3::new_normalize(rel.position))
}

/// Platform normal seen from the UAV body frame, `R^T e3`.
pub fn measure_normal(rel: &RelativeState) -> UnitVec3 {
    UnitVec3::new_normalize(rel.rotation.transpose() * Vec3::z())
}

/// Packages one vehicle's true rates as an IMU reading, adding per-axis
/// Gaussian noise where the spec is nonzero. Zero-std channels draw nothing
/// from the generator, so turning one channel's noise on leaves the others'
/// streams untouched.
pub fn measure_imu(
    omega: &Vec3,
    a: &Vec3,
    gyro_std: f64,
    accel_std: f64,
    rng: &mut impl Rng,
) -> ImuReading {
    ImuReading {
        omega: omega + gauss3(gyro_std, rng),
        a: a + gauss3(accel_std, rng),
    }
}

/// Tilts `u` by a random angle about a random tangent direction: the
/// perturbation is drawn in the tangent plane at `u` (direction uniform,
/// magnitude `N(0, cone_std)`) and the sum is renormalized. A zero std returns
/// `u` unchanged without consuming randomness.
pub fn perturb_direction(u: &UnitVec3, cone_std_deg: f64, rng: &mut impl Rng) -> UnitVec3 {
    if cone_std_deg == 0.0 {
        return *u;
    }
    let (t1, t2) = tangent_basis(u);
    let alpha = Uniform::new(0.0, std::f64::consts::TAU)
        .expect("valid uniform range")
        .sample(rng);
    let phi = Normal::new(0.0, cone_std_deg.to_radians())
        .expect("validated std")
        .sample(rng);
    let dir = alpha.cos() * t1 + alpha.sin() * t2;
    UnitVec3::new_normalize(u.into_inner() + phi * dir)
}

/// One camera frame from the relative state: bearing and normal, perturbed per
/// `noise` (bearing first, then normal).
pub fn measure_vision(
    rel: &RelativeState,
    noise: &NoiseSpec,
    min_range: f64,
    rng: &mut impl Rng,
) -> Result<VisionReading> {
    let bearing = measure_bearing(rel, min_range)?;
    let normal = measure_normal(rel);
    Ok(VisionReading {
        bearing: perturb_direction(&bearing, noise.bearing_cone_std_deg, rng),
        normal: perturb_direction(&normal, noise.normal_cone_std_deg, rng),
    })
}

fn gauss3(std: f64, rng: &mut impl Rng) -> Vec3 {
    if std == 0.0 {
        return Vec3::zeros();
    }
    let dist = Normal::new(0.0, std).expect("validated std");
    Vec3::new(dist.sample(rng), dist.sample(rng), dist.sample(rng))
}

/// Deterministic orthonormal basis of the tangent plane at `u`.
fn tangent_basis(u: &UnitVec3) -> (Vec3, Vec3) {
    let ax = u.x.abs();
    let ay = u.y.abs();
    let az = u.z.abs();
    let helper = if ax <= ay && ax <= az {
        Vec3::x()
    } else if ay <= az {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = u.cross(&helper).normalize();
    let t2 = u.cross(&t1);
    (t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom3::{projector, random_rotation, Rot3};
    use crate::truthsim::{relative_state, step_world, RigidState, Scenario, WorldTruth};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(position: Vec3, rotation: Rot3) -> RelativeState {
        RelativeState { rotation, position, velocity: Vec3::zeros() }
    }

    #[test]
    fn bearing_examples() {
        let r = rel(Vec3::new(0.0, 0.0, 2.0), Rot3::identity());
        assert_eq!(measure_bearing(&r, MIN_RANGE).unwrap().into_inner(), Vec3::new(0.0, 0.0, 1.0));

        let r = rel(Vec3::new(3.0, 4.0, 0.0), Rot3::identity());
        let y = measure_bearing(&r, MIN_RANGE).unwrap();
        assert!((y.into_inner() - Vec3::new(0.6, 0.8, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn bearing_faults_below_min_range() {
        let r = rel(Vec3::zeros(), Rot3::identity());
        assert!(matches!(
            measure_bearing(&r, MIN_RANGE),
            Err(Error::BearingUndefined { .. })
        ));

        let r = rel(Vec3::new(0.0, 0.0, 0.5e-3), Rot3::identity());
        assert!(measure_bearing(&r, MIN_RANGE).is_err());

        // The guard is a strict lower bound: exactly min_range still measures.
        let r = rel(Vec3::new(0.0, 0.0, MIN_RANGE), Rot3::identity());
        assert!(measure_bearing(&r, MIN_RANGE).is_ok());
    }

    #[test]
    fn bearing_projector_annihilates_the_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = random_rotation(20.0, 40.0, &mut rng);
            let p = Vec3::new(
                rng.random::<f64>() * 10.0 - 5.0,
                rng.random::<f64>() * 10.0 - 5.0,
                rng.random::<f64>() * 10.0 + 0.1,
            );
            let r = rel(p, q);
            let y = measure_bearing(&r, MIN_RANGE).unwrap();
            let residual = (projector(&y) * p).norm();
            assert!(residual <= 1e-12 * p.norm(), "residual {residual:.3e}");
        }
    }

    #[test]
    fn normal_examples() {
        let r = rel(Vec3::z(), Rot3::identity());
        assert_eq!(measure_normal(&r).into_inner(), Vec3::new(0.0, 0.0, 1.0));

        let quarter = crate::geom3::exp_so3(&Vec3::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0));
        let r = rel(Vec3::z(), quarter);
        let eta = measure_normal(&r).into_inner();
        assert!((eta - Vec3::new(0.0, 1.0, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn normal_is_unit_for_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let r = rel(Vec3::z(), random_rotation(45.0, 30.0, &mut rng));
            assert!((measure_normal(&r).norm() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn normal_lifted_to_inertial_frame_is_the_platform_vertical() {
        // Q_B (R^T e3) = Q_T e3 along a simulated trajectory.
        let mut w = WorldTruth {
            t: 0.0,
            body: RigidState {
                attitude: Rot3::identity(),
                position: Vec3::new(0.0, 0.0, 8.0),
                velocity: Vec3::new(2.0, 0.0, 0.0),
            },
            target: RigidState {
                attitude: Rot3::identity(),
                position: Vec3::zeros(),
                velocity: Vec3::zeros(),
            },
        };
        for _ in 0..2000 {
            w = step_world(&w, Scenario::Cascade, 1e-3);
        }
        let eta = measure_normal(&relative_state(&w));
        let lifted = w.body.attitude * eta.into_inner();
        let vertical = w.target.attitude * Vec3::z();
        assert!((lifted - vertical).norm() <= 1e-12);
    }

    #[test]
    fn noiseless_imu_is_a_bitwise_passthrough() {
        let omega = Vec3::new(0.1, -0.2, 0.3);
        let a = Vec3::new(0.0, 1.0, -9.81);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let reading = measure_imu(&omega, &a, 0.0, 0.0, &mut rng);
        assert_eq!(reading.omega, omega);
        assert_eq!(reading.a, a);
    }

    #[test]
    fn noisy_imu_is_reproducible_from_the_seed() {
        let omega = Vec3::new(0.1, -0.2, 0.3);
        let a = Vec3::new(0.0, 1.0, -9.81);
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..16).map(|_| measure_imu(&omega, &a, 0.01, 0.05, &mut rng)).collect::<Vec<_>>()
        };
        let (first, second) = (run(7), run(7));
        for (x, y) in first.iter().zip(&second) {
            assert_eq!(x.omega, y.omega);
            assert_eq!(x.a, y.a);
        }
    }

    #[test]
    fn imu_noise_sample_std_matches_the_spec() {
        let omega = Vec3::zeros();
        let a = Vec3::zeros();
        let (gyro_std, accel_std) = (0.01, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 100_000;
        let (mut sum_sq_g, mut sum_sq_a) = (0.0, 0.0);
        for _ in 0..n {
            let r = measure_imu(&omega, &a, gyro_std, accel_std, &mut rng);
            sum_sq_g += r.omega.norm_squared();
            sum_sq_a += r.a.norm_squared();
        }
        let sample_g = (sum_sq_g / (3.0 * n as f64)).sqrt();
        let sample_a = (sum_sq_a / (3.0 * n as f64)).sqrt();
        assert!((sample_g - gyro_std).abs() <= 0.05 * gyro_std, "gyro std {sample_g:.5}");
        assert!((sample_a - accel_std).abs() <= 0.05 * accel_std, "accel std {sample_a:.5}");
    }

    #[test]
    fn zero_cone_std_returns_the_input_bits() {
        let u = UnitVec3::new_normalize(Vec3::new(0.3, -0.4, 0.87));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = perturb_direction(&u, 0.0, &mut rng);
        assert_eq!(u.into_inner(), v.into_inner());
    }

    #[test]
    fn perturbed_directions_stay_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..200 {
            let raw = Vec3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            if raw.norm() < 1e-3 {
                continue;
            }
            let u = UnitVec3::new_normalize(raw);
            let v = perturb_direction(&u, 1.0 + (k % 5) as f64, &mut rng);
            assert!((v.norm() - 1.0).abs() <= 1e-15);
        }
    }

    /// E[atan|X|] for X ~ N(0, sigma), by Simpson quadrature. The tilt angle of
    /// the tangent-plane perturbation is atan of the drawn magnitude, so this is
    /// the exact mean angular deviation.
    fn mean_tilt_oracle(sigma: f64) -> f64 {
        let upper = 12.0 * sigma;
        let n = 20_000; // even
        let h = upper / n as f64;
        let pdf = |x: f64| {
            (-x * x / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let f = |x: f64| 2.0 * x.atan() * pdf(x); // factor 2 folds the negative side
        let mut acc = f(0.0) + f(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn mean_angular_deviation_matches_the_quadrature_oracle() {
        let cone_std_deg = 2.0_f64;
        let sigma = cone_std_deg.to_radians();
        let oracle = mean_tilt_oracle(sigma);

        // For a 2-degree cone the atan correction is ~sigma^2/3, well under 0.1%,
        // so the mean deviation is the folded-normal mean for practical purposes.
        let folded = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!((oracle - folded).abs() <= 1e-3 * folded);

        let u = UnitVec3::new_normalize(Vec3::new(1.0, 2.0, -2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000;
        let mut angles = Vec::with_capacity(n);
        for _ in 0..n {
            let v = perturb_direction(&u, cone_std_deg, &mut rng);
            angles.push(u.dot(&v).clamp(-1.0, 1.0).acos());
        }
        let mean = angles.iter().sum::<f64>() / n as f64;
        let var = angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sem = (var / n as f64).sqrt();
        assert!(
            (mean - oracle).abs() <= 3.0 * sem,
            "mean {mean:.6e} vs oracle {oracle:.6e} (3 sem {:.2e})",
            3.0 * sem
        );
    }

    #[test]
    fn vision_reading_composes_bearing_then_normal() {
        let r = rel(Vec3::new(0.0, 0.0, 5.0), Rot3::identity());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clean = measure_vision(&r, &NoiseSpec::noiseless(), MIN_RANGE, &mut rng).unwrap();
        assert_eq!(clean.bearing.into_inner(), Vec3::z());
        assert_eq!(clean.normal.into_inner(), Vec3::z());

        // With noise on, the two perturbations consume the stream in a fixed
        // order, so the composite equals the two manual calls run in sequence.
        let noise = NoiseSpec { bearing_cone_std_deg: 1.0, normal_cone_std_deg: 0.5, ..NoiseSpec::noiseless() };
        let mut rng_a = ChaCha8Rng::seed_from_u64(9);
        let composite = measure_vision(&r, &noise, MIN_RANGE, &mut rng_a).unwrap();
        let mut rng_b = ChaCha8Rng::seed_from_u64(9);
        let bearing = perturb_direction(
            &measure_bearing(&r, MIN_RANGE).unwrap(),
            noise.bearing_cone_std_deg,
            &mut rng_b,
        );
        let normal = perturb_direction(&measure_normal(&r), noise.normal_cone_std_deg, &mut rng_b);
        assert_eq!(composite.bearing.into_inner(), bearing.into_inner());
        assert_eq!(composite.normal.into_inner(), normal.into_inner());
    }
}
