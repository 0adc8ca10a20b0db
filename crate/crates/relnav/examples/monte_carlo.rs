//! Fifty-run Monte Carlo batches of both scenarios with randomized initial
//! estimation errors, reproducing the benchmark's percentile bands.
//!
//! Writes `bands.csv`, `runs.csv`, and `summary.json` per scenario under
//! `out/monte_carlo/` and prints the terminal percentile table.

use relnav::harness::{run_montecarlo, McSummary, RunConfig};

fn report(summary: &McSummary) {
    println!(
        "{} Monte Carlo: {} runs, {} excluded (base seed {})",
        summary.scenario, summary.n_runs, summary.n_excluded, summary.base_seed
    );
    let last = summary.t.len() - 1;
    println!("{:>14}  {:>12}  {:>12}  {:>12}", "terminal", "p5", "p50", "p95");
    for band in &summary.bands {
        println!(
            "{:>14}  {:>12.3e}  {:>12.3e}  {:>12.3e}",
            band.name, band.p5[last], band.p50[last], band.p95[last]
        );
    }
}

fn main() -> relnav::Result<()> {
    for cfg in [RunConfig::cascade(), RunConfig::coupled()] {
        let summary = run_montecarlo(&cfg, 50)?;
        report(&summary);
        let dir = std::path::PathBuf::from(format!("out/monte_carlo/{}", cfg.scenario));
        std::fs::create_dir_all(&dir).map_err(|e| relnav::Error::io(&dir, e))?;
        summary.write_bands_csv(&dir.join("bands.csv"))?;
        summary.write_runs_csv(&dir.join("runs.csv"))?;
        summary.write_json(&dir.join("summary.json"))?;
        println!("wrote {}/bands.csv, runs.csv, summary.json\n", dir.display());
    }
    Ok(())
}
