//! Observability Gramians, closed-form transition matrices, and
//! persistence-of-excitation / acceleration-decomposition checkers.
//!
//! The translational error pair `(A, C)` admits the change of coordinates
//! `T = blkdiag(Q_B, Q_B)` into an inertial-frame double integrator, giving
//! the closed-form transition matrix assembled by [`transition_matrix_6`].
//! The 7-state pair gains a yaw column driven by `b(t) = a_T^I x eta^I`,
//! whose transition matrix [`transition_matrix_theta`] needs only running
//! integrals of `b`. [`gramian`] evaluates the windowed observability Gramian
//! `W = (1/delta) int Phi^T C^T C Phi` by composite Simpson quadrature, and
//! the `check_pe_*` scanners bound the persistence of excitation of a
//! direction signal over every window of a trace. All verdicts ship with the
//! raw numbers; thresholds only classify them.

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geom3::{Mat3, Rot3, UnitVec3, Vec3};
use crate::pv_observer::{Mat6, Mat7};

/// Default smallest-eigenvalue threshold for "uniformly observable" /
/// "persistently exciting" verdicts. The raw eigenvalue is always reported.
pub const DEFAULT_MU_THRESHOLD: f64 = 1e-6;

/// One quadrature window `[t0, t0 + delta]` sampled at `dt_quad`.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub t0: f64,
    pub delta: f64,
    pub dt_quad: f64,
}

/// Windowed observability Gramian and its classification.
#[derive(Clone, Debug)]
pub struct GramianReport<const N: usize> {
    /// `W(t0, t0 + delta)`, symmetric PSD.
    pub w: SMatrix<f64, N, N>,
    /// Smallest eigenvalue of `w`.
    pub mu: f64,
    /// `mu > threshold`.
    pub uniformly_observable: bool,
    pub threshold: f64,
}

/// Worst-window persistence-of-excitation summary for a direction signal.
#[derive(Clone, Debug)]
pub struct PeReport {
    /// Worst (smallest) over scanned windows of the smallest eigenvalue of
    /// `(1/delta) int pi_u ds`.
    pub mu: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Start time of the worst window.
    pub worst_t0: f64,
    pub windows_scanned: usize,
    /// For the normal checker only: the smallest, over windows, of the peak
    /// direction rate `max_s |u_dot(s)|` within the window. A near-zero value
    /// identifies a window where the direction barely moves — excitation is
    /// then impossible no matter the threshold.
    pub min_peak_rate: Option<f64>,
}

/// Split of `b(t) = a_T^I x eta^I` into a constant part and the residual.
#[derive(Clone, Debug)]
pub struct BDecomposition {
    pub b0: Vec3,
    pub b1_samples: Vec<Vec3>,
}

/// Outcome of the acceleration-decomposition check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assumption1Verdict {
    /// The windowed residual bound holds for the mean-based decomposition.
    Certified,
    /// The bound fails for this decomposition (the condition may still hold
    /// for another split; it is only sufficient).
    NotCertified,
    /// The horizon mean of `b` is degenerate (near zero relative to the
    /// signal), so the mean-based decomposition cannot certify anything.
    Unverifiable,
}

/// Report of [`check_assumption1`]. The checker verifies sufficiency under
/// the mean-based decomposition only, and says so rather than asserting.
#[derive(Clone, Debug)]
pub struct Assumption1Report {
    pub decomposition: BDecomposition,
    pub b0_norm: f64,
    /// Root-mean-square of `|b|` over the horizon, for the degeneracy ratio.
    pub rms_b: f64,
    /// Largest over windows of `(1/delta) int |b1|^2` (a conservative upper
    /// bound of the projected integrand: `|pi_u b1| <= |b1|`).
    pub worst_lhs: f64,
    /// Right-hand side `(mu/4) |b0|^2`.
    pub bound: f64,
    /// `bound - worst_lhs`; positive margins certify.
    pub margin: f64,
    pub verdict: Assumption1Verdict,
    pub windows_scanned: usize,
}

/// Closed-form transition matrix of the translational error pair:
/// `Phi(s, t) = T(s)^T exp(Abar (s-t)) T(t)` with `T = blkdiag(Q_B, Q_B)`,
/// which reduces to `[[Q, tau Q], [0, Q]]` with `Q = Q_B(s)^T Q_B(t)` and
/// `tau = s - t`.
pub fn transition_matrix_6(qb_s: &Rot3, qb_t: &Rot3, tau: f64) -> Mat6 {
    let q = qb_s.transpose() * *qb_t;
    let qm = q.matrix();
    let mut phi = Mat6::zeros();
    phi.fixed_view_mut::<3, 3>(0, 0).copy_from(qm);
    phi.fixed_view_mut::<3, 3>(0, 3).copy_from(&(qm * tau));
    phi.fixed_view_mut::<3, 3>(3, 3).copy_from(qm);
    phi
}

/// Transition matrix of the 7-state error system in inertial coordinates over
/// the span covered by `b` (sampled at `dt`, endpoints included):
/// `[[I, tau I, beta], [0, I, int b], [0, 0, 1]]` with
/// `beta = int (s - tau) b(tau) dtau`, both integrals by composite Simpson
/// (with a 3/8 tail when the interval count is odd).
pub fn transition_matrix_theta(b: &[Vec3], dt: f64) -> Mat7 {
    assert!(b.len() >= 2 && dt > 0.0, "need at least two samples of b");
    let tau = (b.len() - 1) as f64 * dt;
    let int_b = simpson_slice(b, dt, |_, v| v);
    // Weight (s - tau_j) with s the span end: linear-in-time factor folded
    // into the quadrature nodes.
    let beta = simpson_slice(b, dt, |j, v| v * (tau - j as f64 * dt));

    let mut phi = Mat7::identity();
    phi.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Mat3::identity() * tau));
    phi.fixed_view_mut::<3, 1>(0, 6).copy_from(&beta);
    phi.fixed_view_mut::<3, 1>(3, 6).copy_from(&int_b);
    phi
}

/// Windowed observability Gramian `W = (1/delta) int Phi^T C^T C Phi ds` by
/// composite Simpson at `window.dt_quad`.
///
/// `c_at(t)` and `phi_at(t)` supply the output matrix and the transition
/// matrix `Phi(t, t0)` at absolute time `t`; the window sample count is
/// rounded to the nearest even number of intervals and the normalization uses
/// the actual span integrated.
pub fn gramian<const N: usize>(
    c_at: impl Fn(f64) -> SMatrix<f64, 3, N>,
    phi_at: impl Fn(f64) -> SMatrix<f64, N, N>,
    window: &Window,
    threshold: f64,
) -> GramianReport<N> {
    let h = window.dt_quad;
    assert!(window.delta > 0.0 && h > 0.0, "window must have positive span and step");
    let mut n = (window.delta / h).round() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    n = n.max(2);

    let node = |j: usize| -> SMatrix<f64, N, N> {
        let t = window.t0 + j as f64 * h;
        let m = c_at(t) * phi_at(t);
        m.transpose() * m
    };
    let mut acc = node(0) + node(n);
    let mut j = 1;
    while j < n {
        let weight = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += node(j) * weight;
        j += 1;
    }
    let span = n as f64 * h;
    let w_raw = acc * (h / 3.0 / span);
    let w = (w_raw + w_raw.transpose()) * 0.5;

    let mu = DMatrix::from_column_slice(N, N, w.as_slice())
        .symmetric_eigen()
        .eigenvalues
        .min();
    GramianReport { w, mu, uniformly_observable: mu > threshold, threshold }
}

/// Worst-window persistence of excitation of the platform-normal direction.
/// `eta_i` is the inertial-frame normal sampled at `dt`; windows of length
/// `delta` are scanned across the whole trace.
pub fn check_pe_normal(eta_i: &[Vec3], dt: f64, delta: f64, threshold: f64) -> Result<PeReport> {
    let mut report = pe_scan(eta_i, dt, delta, threshold)?;
    report.min_peak_rate = Some(min_window_peak_rate(eta_i, dt, delta));
    Ok(report)
}

/// Worst-window persistence of excitation of the inertial bearing direction.
pub fn check_pe_bearing(y_i: &[Vec3], dt: f64, delta: f64, threshold: f64) -> Result<PeReport> {
    pe_scan(y_i, dt, delta, threshold)
}

/// Checks the sufficient convergence condition on the decomposition
/// `b = b0 + b1(t)`: over every window,
/// `(1/delta) int |b1|^2 <= (mu/4) |b0|^2`,
/// with `b0` the horizon mean. The left side upper-bounds the projected
/// integrand (`|pi_u b1| <= |b1|` for any unit `u`), so a certificate is
/// sound; a failure may still be a decomposition artifact.
pub fn check_assumption1(
    a_t_i: &[Vec3],
    eta_i: &[Vec3],
    dt: f64,
    delta: f64,
    mu: f64,
) -> Result<Assumption1Report> {
    if a_t_i.len() != eta_i.len() {
        return Err(Error::Trace(format!(
            "acceleration and normal paths differ in length ({} vs {})",
            a_t_i.len(),
            eta_i.len()
        )));
    }
    let b: Vec<Vec3> = a_t_i.iter().zip(eta_i).map(|(a, n)| a.cross(n)).collect();
    let span = window_samples(b.len(), dt, delta)?;

    let n = b.len() as f64;
    let b0 = b.iter().sum::<Vec3>() / n;
    let b1: Vec<Vec3> = b.iter().map(|v| v - b0).collect();
    let b0_norm = b0.norm();
    let rms_b = (b.iter().map(|v| v.norm_squared()).sum::<f64>() / n).sqrt();

    // Windowed mean of |b1|^2 via parity-prefix Simpson sums (O(1) per window).
    let sq: Vec<f64> = b1.iter().map(|v| v.norm_squared()).collect();
    let prefix = SimpsonPrefix::new(&sq);
    let mut worst_lhs = 0.0f64;
    let mut windows = 0usize;
    let mut i0 = 0usize;
    while i0 + span < sq.len() {
        let integral = prefix.integrate(i0, span, dt);
        worst_lhs = worst_lhs.max(integral / (span as f64 * dt));
        windows += 1;
        i0 += 2;
    }

    let bound = mu / 4.0 * b0_norm * b0_norm;
    // Mean-degeneracy guard: a near-zero horizon mean cannot certify anything.
    let degenerate = rms_b == 0.0 || b0_norm <= 0.05 * rms_b;
    let verdict = if degenerate {
        Assumption1Verdict::Unverifiable
    } else if worst_lhs <= bound {
        Assumption1Verdict::Certified
    } else {
        Assumption1Verdict::NotCertified
    };
    Ok(Assumption1Report {
        decomposition: BDecomposition { b0, b1_samples: b1 },
        b0_norm,
        rms_b,
        worst_lhs,
        bound,
        margin: bound - worst_lhs,
        verdict,
        windows_scanned: windows,
    })
}

/// Number of samples spanned by one window, forced even for Simpson parity.
fn window_samples(len: usize, dt: f64, delta: f64) -> Result<usize> {
    let mut span = (delta / dt).round() as usize;
    if span % 2 == 1 {
        span += 1;
    }
    if span < 2 {
        return Err(Error::Trace(format!("window of {delta} s spans fewer than two samples")));
    }
    if span >= len {
        return Err(Error::Trace(format!(
            "window of {delta} s ({span} samples) exceeds the trace ({len} samples)"
        )));
    }
    Ok(span)
}

fn pe_scan(dirs: &[Vec3], dt: f64, delta: f64, threshold: f64) -> Result<PeReport> {
    let span = window_samples(dirs.len(), dt, delta)?;
    let projectors: Vec<Mat3> = dirs
        .iter()
        .map(|v| {
            let u = UnitVec3::new_normalize(*v);
            crate::geom3::projector(&u)
        })
        .collect();
    let prefix = SimpsonPrefix::new(&projectors);

    let mut mu = f64::INFINITY;
    let mut worst_t0 = 0.0;
    let mut windows = 0usize;
    let mut i0 = 0usize;
    while i0 + span < projectors.len() {
        let integral = prefix.integrate(i0, span, dt) / (span as f64 * dt);
        let sym = (integral + integral.transpose()) * 0.5;
        let lambda = SymmetricEigen::new(sym).eigenvalues.min();
        if lambda < mu {
            mu = lambda;
            worst_t0 = i0 as f64 * dt;
        }
        windows += 1;
        i0 += 2;
    }
    Ok(PeReport {
        mu,
        threshold,
        passed: mu > threshold,
        worst_t0,
        windows_scanned: windows,
        min_peak_rate: None,
    })
}

/// Smallest over windows of the peak central-difference rate of a direction
/// signal (diagnostic for [`check_pe_normal`]).
fn min_window_peak_rate(dirs: &[Vec3], dt: f64, delta: f64) -> f64 {
    let span = match window_samples(dirs.len(), dt, delta) {
        Ok(s) => s,
        Err(_) => return 0.0,
    };
    let n = dirs.len();
    let rate = |i: usize| (dirs[i + 1] - dirs[i - 1]).norm() / (2.0 * dt);

    // Sliding-window maximum over interior samples via a monotonic deque.
    // Window at i0 covers interior indices [max(i0,1), min(i0+span, n-2)].
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut result = f64::INFINITY;
    let mut next_in = 1usize; // next interior index to admit
    let mut i0 = 0usize;
    while i0 + span < n {
        let hi = (i0 + span).min(n - 2);
        while next_in <= hi {
            let r = rate(next_in);
            while let Some(&back) = deque.back() {
                if rate(back) <= r {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next_in);
            next_in += 1;
        }
        while let Some(&front) = deque.front() {
            if front < i0.max(1) {
                deque.pop_front();
            } else {
                break;
            }
        }
        if let Some(&front) = deque.front() {
            result = result.min(rate(front));
        }
        i0 += 2;
    }
    if result.is_finite() {
        result
    } else {
        0.0
    }
}

/// Composite Simpson over a whole slice with a per-node map; a 3/8 rule
/// absorbs the tail when the interval count is odd.
fn simpson_slice<T, U, F>(samples: &[T], h: f64, map: F) -> U
where
    T: Copy,
    U: Copy
        + std::ops::Add<Output = U>
        + std::ops::Sub<Output = U>
        + std::ops::Mul<f64, Output = U>
        + num_zero::Zero,
    F: Fn(usize, T) -> U,
{
    let n = samples.len() - 1; // intervals
    if n == 0 {
        return U::zero();
    }
    if n == 1 {
        return (map(0, samples[0]) + map(1, samples[1])) * (h / 2.0);
    }
    // Even prefix handled by Simpson; odd tail (last 3 intervals) by 3/8.
    let (simpson_end, tail) = if n.is_multiple_of(2) { (n, 0) } else { (n - 3, 3) };
    let mut acc = U::zero();
    if simpson_end >= 2 {
        let mut sum = map(0, samples[0]) + map(simpson_end, samples[simpson_end]);
        for (j, s) in samples.iter().copied().enumerate().take(simpson_end).skip(1) {
            let weight = if j.is_multiple_of(2) { 2.0 } else { 4.0 };
            sum = sum + map(j, s) * weight;
        }
        acc = sum * (h / 3.0);
    }
    if tail == 3 {
        let base = simpson_end;
        let sum = map(base, samples[base])
            + map(base + 1, samples[base + 1]) * 3.0
            + map(base + 2, samples[base + 2]) * 3.0
            + map(base + 3, samples[base + 3]);
        acc = acc + sum * (3.0 * h / 8.0);
    }
    acc
}

/// Minimal zero trait so the Simpson helper can work over both `f64` and
/// small nalgebra matrices without dragging in a numeric-traits dependency.
mod num_zero {
    pub trait Zero {
        fn zero() -> Self;
    }
    impl Zero for f64 {
        fn zero() -> Self {
            0.0
        }
    }
    impl Zero for crate::geom3::Vec3 {
        fn zero() -> Self {
            Self::zeros()
        }
    }
    impl Zero for crate::geom3::Mat3 {
        fn zero() -> Self {
            Self::zeros()
        }
    }
}

/// Parity-split prefix sums enabling O(1) composite-Simpson window integrals
/// at even offsets and even spans.
struct SimpsonPrefix<U> {
    /// `even[k]` = sum of samples at even indices `<= k`.
    even: Vec<U>,
    /// `odd[k]` = sum of samples at odd indices `<= k`.
    odd: Vec<U>,
    values: Vec<U>,
}

impl<U> SimpsonPrefix<U>
where
    U: Copy + std::ops::Add<Output = U> + std::ops::Sub<Output = U> + std::ops::Mul<f64, Output = U> + num_zero::Zero,
{
    fn new(samples: &[U]) -> Self {
        let mut even = Vec::with_capacity(samples.len());
        let mut odd = Vec::with_capacity(samples.len());
        let (mut se, mut so) = (U::zero(), U::zero());
        for (i, &v) in samples.iter().enumerate() {
            if i % 2 == 0 {
                se = se + v;
            } else {
                so = so + v;
            }
            even.push(se);
            odd.push(so);
        }
        SimpsonPrefix { even, odd, values: samples.to_vec() }
    }

    /// Composite Simpson over `[i0, i0 + span]`; `i0` and `span` must be even.
    fn integrate(&self, i0: usize, span: usize, h: f64) -> U {
        debug_assert!(i0.is_multiple_of(2) && span.is_multiple_of(2));
        let hi = i0 + span;
        // All even-index samples in [i0, hi], endpoints included.
        let evens = if i0 == 0 {
            self.even[hi]
        } else {
            self.even[hi] - self.even[i0 - 1] // i0 even => same as subtracting up to i0-2
        };
        let odds = self.odd[hi] - self.odd[i0];
        let weighted =
            evens * 2.0 - self.values[i0] - self.values[hi] + odds * 4.0;
        weighted * (h / 3.0)
    }
}
