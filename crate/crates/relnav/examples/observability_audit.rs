//! Observability audit of both scenarios: windowed Gramians for the 6- and
//! 7-state observer pairs, persistence-of-excitation scans for the platform
//! normal and the bearing, and the sufficient-condition checker for the
//! yaw-coupling decomposition.
//!
//! The point of the exercise: the cascade scenario's rolling platform keeps
//! the normal persistently exciting, while the coupled scenario's upright
//! spinning platform does not — yet yaw remains recoverable there because
//! the lateral acceleration rotates.

use std::f64::consts::PI;

use relnav::geom3::Vec3;
use relnav::harness::{
    gramian_from_trajectory, pe_from_trajectory, run_single, GramianPair, PeSignal, RunConfig,
};
use relnav::observability::check_assumption1;

fn main() -> relnav::Result<()> {
    for cfg in [RunConfig::cascade(), RunConfig::coupled()] {
        let trajectory =
            run_single(&cfg, cfg.seed, true)?.trajectory.expect("trajectory requested");
        println!("== {} scenario ==", cfg.scenario);

        let delta = 4.0 * PI; // one full body revolution at 0.5 rad/s
        for pair in [GramianPair::SixState, GramianPair::SevenState] {
            let g = gramian_from_trajectory(&trajectory, pair, None, delta, 1e-6)?;
            println!(
                "  gramian {:>6}: mu = {:>10.3e} over delta = {:.2} s  (uniformly observable: {})",
                g.pair, g.mu, g.delta, g.uniformly_observable
            );
        }

        for signal in [PeSignal::Normal, PeSignal::Bearing] {
            let pe = pe_from_trajectory(&trajectory, signal, 2.0 * PI, 1e-6)?;
            let rate = pe
                .min_peak_rate
                .map_or(String::new(), |r| format!(", worst-window peak rate {r:.2} rad/s"));
            println!(
                "  PE {:>8}: mu = {:>10.3e}, passed = {}{rate}",
                pe.signal, pe.mu, pe.passed
            );
        }

        let dt = trajectory.dt()?;
        let a_t: Vec<Vec3> = trajectory.samples.iter().map(|s| s.a_t_i).collect();
        let eta: Vec<Vec3> = trajectory.samples.iter().map(|s| s.eta_i).collect();
        let report = check_assumption1(&a_t, &eta, dt, 2.0 * PI, 1e-3)?;
        println!(
            "  yaw-coupling decomposition: |b0| = {:.3e}, rms = {:.3e} -> {:?}",
            report.b0_norm, report.rms_b, report.verdict
        );
        println!();
    }

    println!("note: the coupled platform's b = a_T^I x eta^I rotates with zero mean, so the");
    println!("mean-based split cannot certify the sufficient condition there — convergence");
    println!("of the yaw channel is a property of the full system, not of that bound.");
    Ok(())
}
