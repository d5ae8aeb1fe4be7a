//! Stereotypy metrics computed from batches of recorded reaches: path
//! straightness, bell-shaped speed, triphasic activation and Fitts's law.
//!
//! Every function here is pure; [`evaluate_agent`] is the only one that runs
//! the simulator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arm::MusclePair;
use crate::env::EnvMode;
use crate::error::{Error, Result};
use crate::policy::run_episode;
use crate::seed;
use crate::train::TrainedAgent;
use crate::trajectory::{col, Row, Trajectory, N_COLUMNS};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const NORMALIZED_SAMPLES: usize = 101;
/// Absolute floor on the triphasic slope difference.
pub const TRIPHASIC_FLOOR: f64 = 1.5e-3;
/// Relative threshold on the triphasic slope difference.
pub const TRIPHASIC_RELATIVE: f64 = 0.25;
/// Onset/offset threshold as a fraction of peak speed.
pub const BELL_THRESHOLD: f64 = 0.1;

// ---------------------------------------------------------------------------
// Outlier rejection

/// Percentile of sorted data with linear interpolation between order
/// statistics (`p` in [0, 100]).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Path integral of hand speed over time (trapezoidal).
pub fn speed_integral(traj: &Trajectory) -> f64 {
    traj.rows
        .windows(2)
        .map(|w| 0.5 * (w[0][col::SPEED] + w[1][col::SPEED]) * (w[1][col::T] - w[0][col::T]))
        .sum()
}

/// Indices of the values inside `[Q25 - k*IQR, Q75 + k*IQR]`. Fewer than four
/// values pass through unchanged.
pub fn filter_outliers(values: &[f64], k: f64) -> Vec<usize> {
    if values.len() < 4 {
        log::warn!("outlier filter needs at least 4 rollouts, got {}; keeping all", values.len());
        return (0..values.len()).collect();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q25, q75) = (percentile(&sorted, 25.0), percentile(&sorted, 75.0));
    let iqr = q75 - q25;
    let (lo, hi) = (q25 - k * iqr, q75 + k * iqr);
    (0..values.len()).filter(|&i| values[i] >= lo && values[i] <= hi).collect()
}

// ---------------------------------------------------------------------------
// Temporal normalization

/// Every trajectory channel resampled onto a uniform grid over `[0, MT]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTrajectory {
    pub rows: Vec<Row>,
}

impl NormalizedTrajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }

    pub fn hand_path(&self) -> Vec<[f64; 2]> {
        self.rows.iter().map(|r| [r[col::HAND_P], r[col::HAND_P + 1]]).collect()
    }

    /// Normalized time in [0, 1] for each sample.
    pub fn phase(&self) -> Vec<f64> {
        let n = self.rows.len();
        (0..n).map(|k| if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 }).collect()
    }

    pub fn activation(&self, muscle: usize) -> Vec<f64> {
        self.column(col::ACT + muscle)
    }
}

/// Linearly resample `y(t)` at `n` uniform times over `[t0, t_end]`; the first
/// and last samples are copied, not interpolated.
pub fn resample(t: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    assert!(t.len() == y.len() && t.len() >= 2 && n >= 2);
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        if k == 0 {
            out.push(y[0]);
            continue;
        }
        if k == n - 1 {
            out.push(y[y.len() - 1]);
            continue;
        }
        let tk = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
        while j + 2 < t.len() && t[j + 1] < tk {
            j += 1;
        }
        let span = t[j + 1] - t[j];
        let w = if span > 0.0 { (tk - t[j]) / span } else { 0.0 };
        out.push(y[j] + w * (y[j + 1] - y[j]));
    }
    out
}

/// Resample all channels of `traj` to `n` samples over its own duration.
pub fn time_normalize(traj: &Trajectory, n: usize) -> Result<NormalizedTrajectory> {
    if traj.len() < 2 {
        return Err(Error::InsufficientData("time normalization needs at least 2 samples".into()));
    }
    if n < 2 {
        return Err(Error::config("normalized sample count must be at least 2"));
    }
    let t = traj.column(col::T);
    let mut rows = vec![[0.0; N_COLUMNS]; n];
    for c in 0..N_COLUMNS {
        for (row, v) in rows.iter_mut().zip(resample(&t, &traj.column(c), n)) {
            row[c] = v;
        }
    }
    Ok(NormalizedTrajectory { rows })
}

/// Pointwise mean of equally long normalized trajectories.
pub fn mean_trajectory(batch: &[NormalizedTrajectory]) -> Result<NormalizedTrajectory> {
    let first = batch.first().ok_or_else(|| Error::InsufficientData("empty batch".into()))?;
    let n = first.len();
    if batch.iter().any(|b| b.len() != n) {
        return Err(Error::InsufficientData("normalized trajectories differ in length".into()));
    }
    if batch.len() == 1 {
        return Ok(first.clone());
    }
    let mut rows = vec![[0.0; N_COLUMNS]; n];
    for b in batch {
        for (acc, r) in rows.iter_mut().zip(&b.rows) {
            acc.iter_mut().zip(r).for_each(|(a, x)| *a += x);
        }
    }
    let m = batch.len() as f64;
    rows.iter_mut().for_each(|r| r.iter_mut().for_each(|a| *a /= m));
    Ok(NormalizedTrajectory { rows })
}

// ---------------------------------------------------------------------------
// (i) straightness

/// R² of a planar path against its projection onto the start→goal segment.
/// `None` when start and goal coincide or fewer than 3 points are given.
pub fn metric_line_r2(path: &[[f64; 2]], start: [f64; 2], goal: [f64; 2]) -> Option<f64> {
    let d = [goal[0] - start[0], goal[1] - start[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if path.len() < 3 || len2 == 0.0 {
        return None;
    }
    let n = path.len() as f64;
    let centroid = [
        path.iter().map(|p| p[0]).sum::<f64>() / n,
        path.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for p in path {
        let s = (((p[0] - start[0]) * d[0] + (p[1] - start[1]) * d[1]) / len2).clamp(0.0, 1.0);
        let proj = [start[0] + s * d[0], start[1] + s * d[1]];
        ss_res += (p[0] - proj[0]).powi(2) + (p[1] - proj[1]).powi(2);
        ss_tot += (p[0] - centroid[0]).powi(2) + (p[1] - centroid[1]).powi(2);
    }
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { Some(1.0) } else { None };
    }
    Some(1.0 - ss_res / ss_tot)
}

// ---------------------------------------------------------------------------
// (ii) bell-shaped speed

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    pub sigma: f64,
    pub r2: f64,
    pub amplitude: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn gaussian(t: f64, amplitude: f64, mu: f64, sigma: f64) -> f64 {
    amplitude * (-(t - mu).powi(2) / (2.0 * sigma * sigma)).exp()
}

fn sse(t: &[f64], y: &[f64], a: f64, mu: f64, sigma: f64) -> f64 {
    t.iter().zip(y).map(|(&ti, &yi)| (yi - gaussian(ti, a, mu, sigma)).powi(2)).sum()
}

fn r_squared(t: &[f64], y: &[f64], a: f64, mu: f64, sigma: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    1.0 - sse(t, y, a, mu, sigma) / ss_tot
}

/// Least-squares fit of `v_max * exp(-(t-mu)^2 / (2 sigma^2))` to all given
/// samples, with the amplitude held fixed. Damped Gauss-Newton
/// (Levenberg-Marquardt) from `mu0` = time of the largest sample and `sigma0`
/// = a quarter of the time span; stops after 200 iterations or when the
/// parameter step falls below 1e-9.
pub fn fit_gaussian_fixed_amplitude(t: &[f64], y: &[f64], v_max: f64) -> Result<GaussianFit> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::InsufficientData("gaussian fit needs at least 3 samples".into()));
    }
    if !(v_max > 0.0) || y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InsufficientData("speed must be nonnegative with a positive peak".into()));
    }
    let peak = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b]).then(b.cmp(&a))).unwrap();
    let span = t[t.len() - 1] - t[0];
    let mut mu = t[peak];
    let mut sigma = span / 4.0;
    let mut cost = sse(t, y, v_max, mu, sigma);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < 200 {
        iterations += 1;
        // Normal equations J^T J dp = J^T r for residual r = y - g.
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(y) {
            let g = gaussian(ti, v_max, mu, sigma);
            let dt = ti - mu;
            let j_mu = g * dt / (sigma * sigma);
            let j_sigma = g * dt * dt / (sigma * sigma * sigma);
            let r = yi - g;
            a11 += j_mu * j_mu;
            a12 += j_mu * j_sigma;
            a22 += j_sigma * j_sigma;
            b1 += j_mu * r;
            b2 += j_sigma * r;
        }
        let mut accepted = false;
        let mut step = 0.0;
        for _ in 0..50 {
            let (d11, d22) = (a11 * (1.0 + lambda), a22 * (1.0 + lambda));
            let det = d11 * d22 - a12 * a12;
            if !(det.abs() > 0.0) {
                lambda *= 10.0;
                continue;
            }
            let dmu = (b1 * d22 - b2 * a12) / det;
            let dsigma = (d11 * b2 - a12 * b1) / det;
            let (new_mu, new_sigma) = (mu + dmu, sigma + dsigma);
            let new_cost = if new_sigma > 0.0 { sse(t, y, v_max, new_mu, new_sigma) } else { f64::INFINITY };
            if new_cost <= cost {
                step = dmu.hypot(dsigma);
                mu = new_mu;
                sigma = new_sigma;
                cost = new_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || step < 1e-9 {
            converged = true;
            break;
        }
    }
    Ok(GaussianFit { mu, sigma, r2: r_squared(t, y, v_max, mu, sigma), amplitude: v_max, iterations, converged })
}

/// Onset and offset sample indices: first and last samples above
/// `BELL_THRESHOLD * max(speed)`.
pub fn bell_window(speed: &[f64]) -> Option<(usize, usize)> {
    let v_max = speed.iter().copied().fold(0.0, f64::max);
    if !(v_max > 0.0) {
        return None;
    }
    let thr = BELL_THRESHOLD * v_max;
    let on = speed.iter().position(|&v| v > thr)?;
    let off = speed.iter().rposition(|&v| v > thr)?;
    Some((on, off))
}

/// Gaussian fit on the onset–offset window of a speed profile. Absent when
/// the speed is zero throughout, when it is still above threshold at the
/// final sample, or when the window has fewer than 3 samples.
pub fn metric_bell(t: &[f64], speed: &[f64]) -> Option<GaussianFit> {
    let (on, off) = bell_window(speed)?;
    if off + 1 == speed.len() || off - on < 2 {
        return None;
    }
    let v_max = speed.iter().copied().fold(0.0, f64::max);
    fit_gaussian_fixed_amplitude(&t[on..=off], &speed[on..=off], v_max).ok()
}

// ---------------------------------------------------------------------------
// (iii) triphasic activation

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriphasicMode {
    /// Δ is the difference between agonist and antagonist slopes.
    #[default]
    SlopeDifference,
    /// Δ is the difference between the activations themselves.
    ActivationDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Leader {
    Agonist,
    Antagonist,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MusclePairSignal {
    pub pair: MusclePair,
    pub agonist: Vec<f64>,
    pub antagonist: Vec<f64>,
}

/// Centered moving average; the window shrinks at the edges.
pub fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(x.len() - 1);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Per-sample slope: central differences inside, one-sided at the ends.
pub fn slopes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| match i {
            0 => x[1] - x[0],
            _ if i == n - 1 => x[n - 1] - x[n - 2],
            _ => 0.5 * (x[i + 1] - x[i - 1]),
        })
        .collect()
}

/// Sequence of leading-muscle phases. A sample contributes when Δ exceeds
/// both `TRIPHASIC_RELATIVE * Δmax` and `TRIPHASIC_FLOOR`; its leader is the
/// muscle whose slope is larger and rising (slope mode) or whose activation
/// is larger (activation mode). Consecutive samples with the same leader
/// form one phase.
pub fn triphasic_phases(signal: &MusclePairSignal, mode: TriphasicMode) -> Vec<Leader> {
    let n = signal.agonist.len();
    if n < 5 || signal.antagonist.len() != n {
        return Vec::new();
    }
    let ag = moving_average(&signal.agonist, 5);
    let ant = moving_average(&signal.antagonist, 5);
    let (x_ag, x_ant) = match mode {
        TriphasicMode::SlopeDifference => (slopes(&ag), slopes(&ant)),
        TriphasicMode::ActivationDifference => (ag, ant),
    };
    let delta: Vec<f64> = x_ag.iter().zip(&x_ant).map(|(a, b)| (a - b).abs()).collect();
    let delta_max = delta.iter().copied().fold(0.0, f64::max);
    let mut phases: Vec<Leader> = Vec::new();
    for i in 0..n {
        if !(delta[i] > TRIPHASIC_RELATIVE * delta_max && delta[i] > TRIPHASIC_FLOOR) {
            continue;
        }
        let leader = match mode {
            TriphasicMode::SlopeDifference if x_ag[i] > x_ant[i] && x_ag[i] > 0.0 => Leader::Agonist,
            TriphasicMode::SlopeDifference if x_ant[i] > x_ag[i] && x_ant[i] > 0.0 => Leader::Antagonist,
            TriphasicMode::SlopeDifference => continue,
            TriphasicMode::ActivationDifference if x_ag[i] > x_ant[i] => Leader::Agonist,
            TriphasicMode::ActivationDifference => Leader::Antagonist,
        };
        if phases.last() != Some(&leader) {
            phases.push(leader);
        }
    }
    phases
}

/// 1 when the pair shows at least three phases that start with the agonist
/// (agonist → antagonist → agonist), else 0.
pub fn metric_triphasic(signal: &MusclePairSignal, mode: TriphasicMode) -> u8 {
    let phases = triphasic_phases(signal, mode);
    (phases.len() >= 3 && phases[0] == Leader::Agonist) as u8
}

/// Split a normalized trajectory into agonist/antagonist activation series
/// for `pair`. The agonist is the muscle pulling in the direction of net
/// joint motion (flexor when the spanned joint angles increase).
pub fn pair_signal(traj: &NormalizedTrajectory, pair: MusclePair) -> MusclePairSignal {
    let first = traj.rows.first().map(|r| [r[col::Q], r[col::Q + 1]]).unwrap_or_default();
    let last = traj.rows.last().map(|r| [r[col::Q], r[col::Q + 1]]).unwrap_or_default();
    let dq = [last[0] - first[0], last[1] - first[1]];
    let net = match pair {
        MusclePair::S => dq[0],
        MusclePair::E => dq[1],
        MusclePair::B => dq[0] + dq[1],
    };
    let (f, e) = (traj.activation(pair.flexor().index()), traj.activation(pair.extensor().index()));
    if net >= 0.0 {
        MusclePairSignal { pair, agonist: f, antagonist: e }
    } else {
        MusclePairSignal { pair, agonist: e, antagonist: f }
    }
}

// ---------------------------------------------------------------------------
// (iv) Fitts's law

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittsFit {
    pub intercept: f64,
    pub slope: f64,
    /// Pearson correlation of (ID, MT); absent when MT does not vary.
    pub r: Option<f64>,
    pub n_points: usize,
}

/// Ordinary least squares `MT = a + b * ID` over `(ID, MT)` points.
pub fn fitts_fit(points: &[(f64, f64)]) -> Result<FittsFit> {
    let mut ids: Vec<f64> = points.iter().map(|p| p.0).collect();
    ids.sort_by(f64::total_cmp);
    ids.dedup();
    if ids.len() < 3 {
        return Err(Error::InsufficientData(format!("Fitts fit needs 3 distinct IDs, got {}", ids.len())));
    }
    if points.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::InsufficientData("Fitts points must be finite".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r = (syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0));
    Ok(FittsFit { intercept: my - slope * mx, slope, r, n_points: points.len() })
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSettings {
    /// Outlier fence multiplier on the interquartile range.
    pub outlier_k: f64,
    pub samples: usize,
    pub triphasic_mode: TriphasicMode,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        Self { outlier_k: 0.0, samples: NORMALIZED_SAMPLES, triphasic_mode: TriphasicMode::default() }
    }
}

impl MetricsSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.outlier_k >= 0.0 && self.outlier_k.is_finite()) {
            return Err(Error::config("metrics.outlier_k must be a nonnegative number"));
        }
        if self.samples < 5 {
            return Err(Error::config("metrics.samples must be at least 5"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair: MusclePair,
    pub agonist: String,
    pub score: u8,
    pub phases: Vec<Leader>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub n_rollouts: usize,
    pub n_successful: usize,
    pub n_faulted: usize,
    pub kept: usize,
    pub excluded: usize,
    /// Set when no rollout succeeded; all metrics are then absent.
    pub no_success: bool,
    pub mean_mt: Option<f64>,
    pub p_line: Option<f64>,
    pub v_bell: Option<f64>,
    pub bell_fit: Option<GaussianFit>,
    pub u_triphasic: Option<u8>,
    pub pairs: Vec<PairResult>,
    pub settings: MetricsSettings,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Artifact(format!(
                "metrics schema version {} (expected {REPORT_SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }
}

/// Metrics of a rollout batch, plus the mean normalized trajectory of the
/// kept rollouts when there is one.
pub fn metrics_from_trajectories(
    rollouts: &[Trajectory],
    start: [f64; 2],
    goal: [f64; 2],
    settings: &MetricsSettings,
) -> Result<(MetricsReport, Option<NormalizedTrajectory>)> {
    settings.validate()?;
    let successful: Vec<&Trajectory> = rollouts.iter().filter(|t| t.success && t.len() >= 2).collect();
    let mut report = MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n_rollouts: rollouts.len(),
        n_successful: successful.len(),
        n_faulted: rollouts.iter().filter(|t| t.faulted).count(),
        kept: 0,
        excluded: 0,
        no_success: successful.is_empty(),
        mean_mt: None,
        p_line: None,
        v_bell: None,
        bell_fit: None,
        u_triphasic: None,
        pairs: Vec::new(),
        settings: *settings,
    };
    if successful.is_empty() {
        return Ok((report, None));
    }
    let integrals: Vec<f64> = successful.iter().map(|t| speed_integral(t)).collect();
    let kept = filter_outliers(&integrals, settings.outlier_k);
    report.kept = kept.len();
    report.excluded = successful.len() - kept.len();
    report.mean_mt = Some(kept.iter().map(|&i| successful[i].movement_time).sum::<f64>() / kept.len() as f64);

    let normalized: Vec<NormalizedTrajectory> =
        kept.iter().map(|&i| time_normalize(successful[i], settings.samples)).collect::<Result<_>>()?;
    let mean = mean_trajectory(&normalized)?;

    report.p_line = metric_line_r2(&mean.hand_path(), start, goal);
    report.bell_fit = metric_bell(&mean.phase(), &mean.column(col::SPEED));
    report.v_bell = report.bell_fit.map(|f| f.r2);
    report.pairs = MusclePair::ALL
        .iter()
        .map(|&pair| {
            let signal = pair_signal(&mean, pair);
            let phases = triphasic_phases(&signal, settings.triphasic_mode);
            let agonist_is_flexor = signal.agonist == mean.activation(pair.flexor().index());
            PairResult {
                pair,
                agonist: if agonist_is_flexor { "flexor" } else { "extensor" }.to_string(),
                score: metric_triphasic(&signal, settings.triphasic_mode),
                phases,
            }
        })
        .collect();
    report.u_triphasic = report.pairs.iter().map(|p| p.score).max();
    Ok((report, Some(mean)))
}

/// Result of evaluating one agent.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub rollouts: Vec<Trajectory>,
    pub mean: Option<NormalizedTrajectory>,
}

/// Roll the agent out `n_rollouts` times at the fixed evaluation goal
/// (rollout `i` uses seed `derive_seed(seed, [3, i])`) and compute its
/// metrics.
pub fn evaluate_agent(
    agent: &TrainedAgent,
    n_rollouts: usize,
    seed: u64,
    settings: &MetricsSettings,
) -> Result<Evaluation> {
    if n_rollouts == 0 {
        return Err(Error::config("n_rollouts must be positive"));
    }
    let config = agent.eval_config.with_mode(EnvMode::Evaluation);
    config.validate()?;
    let rollouts: Vec<Trajectory> = (0..n_rollouts as u64)
        .into_par_iter()
        .map(|i| {
            let r = run_episode(&agent.params, &config, seed::derive_seed(seed, &[3, i]), true)?;
            Ok(r.trajectory.expect("recorded"))
        })
        .collect::<Result<_>>()?;
    let (report, mean) =
        metrics_from_trajectories(&rollouts, config.initial_hand(), config.evaluation_goal()?, settings)?;
    Ok(Evaluation { report, rollouts, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn percentile_oracle() {
        let s = [1.0, 2.0, 3.0, 100.0];
        assert_abs_diff_eq!(percentile(&s, 25.0), 1.75, epsilon = 1e-15);
        assert_abs_diff_eq!(percentile(&s, 75.0), 27.25, epsilon = 1e-15);
        assert_eq!(filter_outliers(&[1.0, 2.0, 3.0, 100.0], 0.0), vec![1, 2]);
        assert_eq!(filter_outliers(&[1.0, 2.0, 3.0, 100.0], 1.5), vec![0, 1, 2]);
        assert_eq!(filter_outliers(&[4.0; 6], 0.0), (0..6).collect::<Vec<_>>());
        assert_eq!(filter_outliers(&[1.0, 50.0], 0.0), vec![0, 1]);
    }

    #[test]
    fn resample_ramp_and_endpoints() {
        let t: Vec<f64> = (0..37).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|v| v / 0.36).collect();
        let r = resample(&t, &y, 101);
        assert_eq!(r.len(), 101);
        for (k, v) in r.iter().enumerate() {
            assert_abs_diff_eq!(*v, k as f64 / 100.0, epsilon = 1e-12);
        }
        let y: Vec<f64> = t.iter().map(|v| (v * 7.3).sin()).collect();
        let r = resample(&t, &y, 101);
        assert_eq!(r[0].to_bits(), y[0].to_bits());
        assert_eq!(r[100].to_bits(), y[36].to_bits());
        assert!(resample(&t, &[0.3; 37], 101).iter().all(|&v| v == 0.3));
    }

    #[test]
    fn straight_path_scores_one() {
        let path: Vec<[f64; 2]> = (0..20).map(|i| [0.1 * i as f64 / 19.0, 0.2 * i as f64 / 19.0]).collect();
        assert_abs_diff_eq!(metric_line_r2(&path, [0.0, 0.0], [0.1, 0.2]).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(metric_line_r2(&path, [0.1, 0.1], [0.1, 0.1]), None);
    }

    #[test]
    fn semicircle_detour() {
        // Points uniform in arc angle on a semicircle over the chord.
        let n = 200_001;
        let path: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let th = std::f64::consts::PI * (1.0 - i as f64 / (n - 1) as f64);
                [th.cos(), th.sin()]
            })
            .collect();
        let r2 = metric_line_r2(&path, [-1.0, 0.0], [1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(r2, 0.15926153394105846, epsilon = 1e-5);
    }

    fn minimum_jerk() -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..101).map(|k| k as f64 / 100.0).collect();
        let v = t.iter().map(|&s| 30.0 * s * s - 60.0 * s.powi(3) + 30.0 * s.powi(4)).collect();
        (t, v)
    }

    #[test]
    fn minimum_jerk_bell_matches_oracle() {
        let (t, v) = minimum_jerk();
        assert_eq!(bell_window(&v), Some((9, 91)));
        let fit = metric_bell(&t, &v).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.mu, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.sigma, 0.22289924, epsilon = 1e-7);
        assert_abs_diff_eq!(fit.r2, 0.9883095460130784, epsilon = 1e-9);
    }

    #[test]
    fn triangle_is_less_bell_shaped() {
        let (t, mj) = minimum_jerk();
        let tri: Vec<f64> = (0..101).map(|k: i32| 1.0 - f64::from((2 * k - 100).abs()) / 100.0).collect();
        assert_eq!(bell_window(&tri), Some((6, 94)));
        let r_tri = metric_bell(&t, &tri).unwrap().r2;
        assert_abs_diff_eq!(r_tri, 0.9556038178899731, epsilon = 1e-9);
        assert!(r_tri < metric_bell(&t, &mj).unwrap().r2);
    }

    #[test]
    fn bell_absent_cases() {
        let t: Vec<f64> = (0..101).map(|k| k as f64 / 100.0).collect();
        assert!(metric_bell(&t, &[0.0; 101]).is_none());
        let pos_only: Vec<f64> = t.iter().map(|&s| if s < 0.5 { 2.0 * s } else { 1.5 - s }).collect();
        assert!(metric_bell(&t, &pos_only).is_none());
    }

    fn burst(n: usize, center: f64, width: f64, height: f64) -> Vec<f64> {
        (0..n).map(|i| height * (-(i as f64 - center).powi(2) / (2.0 * width * width)).exp()).collect()
    }

    fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    #[test]
    fn triphasic_crafted_signals() {
        let n = 101;
        let ag = add(&burst(n, 20.0, 5.0, 0.6), &burst(n, 75.0, 5.0, 0.4));
        let ant = burst(n, 48.0, 5.0, 0.5);
        let tri = MusclePairSignal { pair: MusclePair::S, agonist: ag, antagonist: ant.clone() };
        assert_eq!(triphasic_phases(&tri, TriphasicMode::SlopeDifference), [
            Leader::Agonist,
            Leader::Antagonist,
            Leader::Agonist
        ]);
        assert_eq!(metric_triphasic(&tri, TriphasicMode::SlopeDifference), 1);
        assert_eq!(metric_triphasic(&tri, TriphasicMode::ActivationDifference), 1);

        let bi = MusclePairSignal { pair: MusclePair::S, agonist: burst(n, 20.0, 5.0, 0.6), antagonist: ant };
        assert_eq!(metric_triphasic(&bi, TriphasicMode::SlopeDifference), 0);

        let flat = MusclePairSignal { pair: MusclePair::E, agonist: vec![0.3; n], antagonist: vec![0.2; n] };
        assert_eq!(metric_triphasic(&flat, TriphasicMode::SlopeDifference), 0);
    }

    #[test]
    fn fitts_exact_line() {
        let f = fitts_fit(&[(2.0, 0.4), (3.0, 0.6), (4.0, 0.8), (5.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r.unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(fitts_fit(&[(2.0, 0.5), (3.0, 0.5), (4.0, 0.5)]).unwrap().r, None);
        assert!(fitts_fit(&[(2.0, 0.5), (2.0, 0.6), (3.0, 0.5)]).is_err());
    }
}
