//! Error traces, trajectory traces, Monte Carlo summaries, and their CSV /
//! JSON export. All floating-point text uses the shortest round-trip
//! rendering, so exports are byte-stable for identical inputs and JSON
//! round-trips reproduce the numbers exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom3::{Mat3, Rot3, Vec3};
use crate::truthsim::Scenario;

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    /// Ran to the configured horizon.
    Completed,
    /// The separation dropped below the camera's minimum range.
    Landed { t: f64 },
    /// The Riccati matrix lost positive definiteness.
    RiccatiFault { t: f64, lambda_min: f64 },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }

    /// Compact single-token rendering used in CSV cells.
    pub fn label(&self) -> String {
        match self {
            RunStatus::Completed => "completed".into(),
            RunStatus::Landed { t } => format!("landed@{t}"),
            RunStatus::RiccatiFault { t, .. } => format!("riccati_fault@{t}"),
        }
    }
}

/// One decimated output row of error channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    /// `1 - e3^T Rhat R^T e3`.
    pub normal_err: f64,
    /// `3 - tr(Rhat R^T)`.
    pub att_trace_err: f64,
    /// `|xi - xi_hat|^2`.
    pub pos_err_sq: f64,
    /// `|v - v_hat|^2`.
    pub vel_err_sq: f64,
    /// Yaw of the attitude error's `e3` twist factor (rad).
    pub theta_tilde: f64,
    /// Smallest eigenvalue of the Riccati matrix at this sample.
    pub p_min_eig: f64,
}

/// Reads one error channel out of a sample.
pub type ChannelAccessor = fn(&ErrorSample) -> f64;

/// Channel accessors in CSV column order (time excluded).
pub const CHANNELS: [(&str, ChannelAccessor); 6] = [
    ("normal_err", |s| s.normal_err),
    ("att_trace_err", |s| s.att_trace_err),
    ("pos_err_sq", |s| s.pos_err_sq),
    ("vel_err_sq", |s| s.vel_err_sq),
    ("theta_tilde", |s| s.theta_tilde),
    ("p_min_eig", |s| s.p_min_eig),
];

/// Time series of error channels, one row per output step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTrace {
    pub samples: Vec<ErrorSample>,
}

impl ErrorTrace {
    pub fn terminal(&self) -> Option<&ErrorSample> {
        self.samples.last()
    }

    /// Writes the trace as CSV with the schema
    /// `t,normal_err,att_trace_err,pos_err_sq,vel_err_sq,theta_tilde,p_min_eig`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for row in &self.samples {
            w.serialize(row).map_err(|e| csv_error(path, e))?;
        }
        if self.samples.is_empty() {
            // Header-only file: serde never ran, so emit the header directly.
            w.write_record(["t"].iter().copied().chain(CHANNELS.iter().map(|(n, _)| *n)))
                .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut samples = Vec::new();
        for row in r.deserialize() {
            samples.push(row.map_err(|e| csv_error(path, e))?);
        }
        Ok(ErrorTrace { samples })
    }
}

/// Metadata identifying one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub status: RunStatus,
    /// Largest single-step increase of `tr(I - Rhat R^T)` seen in the run;
    /// negative when the attitude Lyapunov value only ever decreased.
    pub lyapunov_max_step_increase: f64,
}

/// A run's metadata plus its full error trace — the JSON mirror of the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub trace: ErrorTrace,
}

impl RunRecord {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Full-rate truth trajectory columns consumed by the observability audits:
/// body attitude (row-major), inertial bearing, inertial platform normal, and
/// inertial target specific force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub qb: Mat3,
    pub y_xi_i: Vec3,
    pub eta_i: Vec3,
    pub a_t_i: Vec3,
}

/// Uniformly sampled trajectory trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryTrace {
    pub samples: Vec<TrajectorySample>,
}

const TRAJECTORY_HEADER: [&str; 19] = [
    "t", "qb00", "qb01", "qb02", "qb10", "qb11", "qb12", "qb20", "qb21", "qb22", "y_i_x", "y_i_y",
    "y_i_z", "eta_i_x", "eta_i_y", "eta_i_z", "at_i_x", "at_i_y", "at_i_z",
];

impl TrajectoryTrace {
    /// Sampling interval, from the first two rows.
    pub fn dt(&self) -> Result<f64> {
        if self.samples.len() < 2 {
            return Err(Error::Trace("trajectory needs at least two samples".into()));
        }
        Ok(self.samples[1].t - self.samples[0].t)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(TRAJECTORY_HEADER).map_err(|e| csv_error(path, e))?;
        let mut cells: Vec<String> = Vec::with_capacity(19);
        for s in &self.samples {
            cells.clear();
            cells.push(s.t.to_string());
            for r in 0..3 {
                for c in 0..3 {
                    cells.push(s.qb[(r, c)].to_string());
                }
            }
            for v in [&s.y_xi_i, &s.eta_i, &s.a_t_i] {
                cells.extend(v.iter().map(|x| x.to_string()));
            }
            w.write_record(&cells).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = r.headers().map_err(|e| csv_error(path, e))?;
        if header.iter().ne(TRAJECTORY_HEADER) {
            return Err(Error::Trace(format!(
                "{}: unexpected trajectory header {:?}",
                path.display(),
                header
            )));
        }
        let mut samples = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let mut f = [0.0f64; 19];
            for (j, cell) in rec.iter().enumerate() {
                f[j] = cell.parse().map_err(|_| {
                    Error::Trace(format!(
                        "{}: row {} column {} is not a number: {cell:?}",
                        path.display(),
                        i + 2,
                        TRAJECTORY_HEADER[j]
                    ))
                })?;
            }
            samples.push(TrajectorySample {
                t: f[0],
                qb: Mat3::new(f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8], f[9]),
                y_xi_i: Vec3::new(f[10], f[11], f[12]),
                eta_i: Vec3::new(f[13], f[14], f[15]),
                a_t_i: Vec3::new(f[16], f[17], f[18]),
            });
        }
        let trace = TrajectoryTrace { samples };
        trace.check_uniform(path)?;
        Ok(trace)
    }

    fn check_uniform(&self, path: &Path) -> Result<()> {
        let dt = self.dt()?;
        for pair in self.samples.windows(2) {
            if ((pair[1].t - pair[0].t) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(Error::Trace(format!(
                    "{}: trajectory sampling is not uniform near t = {}",
                    path.display(),
                    pair[1].t
                )));
            }
        }
        Ok(())
    }

    /// Convenience accessor: body attitude at row `i` as a checked rotation.
    pub fn qb_at(&self, i: usize) -> Result<Rot3> {
        Rot3::from_matrix(self.samples[i].qb)
    }
}

/// One run's outcome inside a Monte Carlo batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalRow {
    pub run: usize,
    pub seed: u64,
    pub status: RunStatus,
    /// Final trace row; `None` when the run faulted before producing one.
    pub terminal: Option<ErrorSample>,
}

/// Percentile band of one error channel across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelBand {
    pub name: String,
    pub p5: Vec<f64>,
    pub p50: Vec<f64>,
    pub p95: Vec<f64>,
}

/// Monte Carlo batch summary: per-time percentile bands over the completed
/// runs, per-run terminal values, and the fault list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub version: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub scenario: Scenario,
    pub n_runs: usize,
    /// Runs excluded from the percentile curves (faulted or landed early).
    pub n_excluded: usize,
    pub t: Vec<f64>,
    pub bands: Vec<ChannelBand>,
    pub terminals: Vec<TerminalRow>,
    pub fault_list: Vec<TerminalRow>,
}

impl McSummary {
    /// Writes the band curves as CSV: `t` then `<channel>_{p5,p50,p95}`.
    pub fn write_bands_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = vec!["t".to_string()];
        for band in &self.bands {
            for q in ["p5", "p50", "p95"] {
                header.push(format!("{}_{q}", band.name));
            }
        }
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        let mut cells: Vec<String> = Vec::with_capacity(header.len());
        for (i, t) in self.t.iter().enumerate() {
            cells.clear();
            cells.push(t.to_string());
            for band in &self.bands {
                cells.push(band.p5[i].to_string());
                cells.push(band.p50[i].to_string());
                cells.push(band.p95[i].to_string());
            }
            w.write_record(&cells).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Writes one row per run: index, seed, status, terminal channel values.
    pub fn write_runs_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = vec!["run".to_string(), "seed".to_string(), "status".to_string()];
        header.push("t".into());
        header.extend(CHANNELS.iter().map(|(n, _)| n.to_string()));
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for row in &self.terminals {
            let mut cells =
                vec![row.run.to_string(), row.seed.to_string(), row.status.label()];
            match &row.terminal {
                Some(s) => {
                    cells.push(s.t.to_string());
                    cells.extend(CHANNELS.iter().map(|(_, get)| get(s).to_string()));
                }
                None => cells.extend((0..7).map(|_| String::new())),
            }
            w.write_record(&cells).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Quantile with linear interpolation between order statistics; `values`
/// must be sorted ascending.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty() && (0.0..=1.0).contains(&q));
    let rank = q * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 < values.len() {
        values[lo] * (1.0 - frac) + values[lo + 1] * frac
    } else {
        values[lo]
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Trace(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Trace(format!("{}: {e}", path.display())))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Trace(format!("{}: {e}", path.display()))
}
