//! Break-time and plateau protocols and the peak/threshold bookkeeping they
//! rely on.

use rayon::prelude::*;

use crate::coupling::{block_restrict, build_hamiltonian, rescaled_coupling, Basis};
use crate::error::{Error, Result};
use crate::meanfield::{crossings_of_samples, linear_fit};
use crate::spinspace::oracle::DensePropagator;
use crate::spinspace::{brute_force_embed, BeamSize, FullSpace, QuantumState};
use crate::C64;

use super::{observe, EvolutionPlan, Generator, ObservableSeries};

/// Threshold choices for the hold/transition split and plateau detection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisThresholds {
    /// `|σ3|` within this distance of 1 counts as holding.
    pub hold_band: f64,
    /// Rise time is the first time `|ζ'|` reaches this fraction of the plateau.
    pub rise_fraction: f64,
    /// Half-width of the band around the median that defines the plateau.
    pub plateau_band: f64,
}

impl Default for AnalysisThresholds {
    fn default() -> Self {
        Self { hold_band: 0.02, rise_fraction: 0.9, plateau_band: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub t: f64,
    pub value: f64,
    pub prominence: f64,
}

/// Vertex of the parabola through three samples.
fn parabola_vertex(t: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    let d0 = (y[1] - y[0]) / h0;
    let d1 = (y[2] - y[1]) / h1;
    let a = (d1 - d0) / (h0 + h1);
    if a >= 0.0 {
        return (t[1], y[1]);
    }
    // y = y1 + b s + a s² with s = t - t1
    let b = d0 + a * h0;
    let s = -b / (2.0 * a);
    let s = s.clamp(-h0, h1);
    (t[1] + s, y[1] + b * s + a * s * s)
}

/// Local maxima of `y` whose topographic prominence is at least
/// `min_prominence`, located by quadratic interpolation.
pub fn find_peaks(t: &[f64], y: &[f64], min_prominence: f64) -> Vec<Peak> {
    let n = y.len().min(t.len());
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !(y[i] > y[i - 1]) {
            i += 1;
            continue;
        }
        // flat tops: advance to the end of the run of equal values
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        if j + 1 < n && y[j + 1] < y[i] {
            let left_min = (0..i).rev().take_while(|&k| y[k] <= y[i]).map(|k| y[k]).fold(y[i], f64::min);
            let right_min = (j + 1..n).take_while(|&k| y[k] <= y[i]).map(|k| y[k]).fold(y[i], f64::min);
            let prominence = y[i] - left_min.max(right_min);
            if prominence >= min_prominence {
                let (tp, vp) = if j == i {
                    parabola_vertex([t[i - 1], t[i], t[i + 1]], [y[i - 1], y[i], y[i + 1]])
                } else {
                    (0.5 * (t[i] + t[j]), y[i])
                };
                peaks.push(Peak { t: tp, value: vp, prominence });
            }
        }
        i = j + 1;
    }
    peaks
}

/// First time `y` reaches `threshold`, linearly interpolated.
pub fn first_reach(t: &[f64], y: &[f64], threshold: f64) -> Option<f64> {
    let i = y.iter().position(|&v| v >= threshold)?;
    if i == 0 {
        return Some(t[0]);
    }
    let f = (threshold - y[i - 1]) / (y[i] - y[i - 1]);
    Some(t[i - 1] + f * (t[i] - t[i - 1]))
}

/// Time within `[t_lo, t_hi]` where `y ≥ threshold`, with linear
/// interpolation inside each sampling interval.
pub fn time_above(t: &[f64], y: &[f64], threshold: f64, t_lo: f64, t_hi: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..t.len().saturating_sub(1) {
        let (a, b) = (t[i].max(t_lo), t[i + 1].min(t_hi));
        if b <= a {
            continue;
        }
        let lerp = |s: f64| y[i] + (y[i + 1] - y[i]) * (s - t[i]) / (t[i + 1] - t[i]);
        let (ya, yb) = (lerp(a) - threshold, lerp(b) - threshold);
        total += match (ya >= 0.0, yb >= 0.0) {
            (true, true) => b - a,
            (false, false) => 0.0,
            (true, false) => (b - a) * ya / (ya - yb),
            (false, true) => (b - a) * yb / (yb - ya),
        };
    }
    total
}

/// Circular basis, θ = 0, initial `|m_a = j, m_b = -j>`, evolved inside the
/// `m_a + m_b = 0` block.
pub fn fig3_series(n: usize, t_end: f64, dt: f64, tol: f64) -> Result<ObservableSeries> {
    let beam = BeamSize::new(n)?;
    let h = build_hamiltonian(Basis::Circular, 0.0, beam, beam, rescaled_coupling(beam, beam))?;
    let block = block_restrict(&h, 0)?;
    let plan = EvolutionPlan::uniform(Generator::Block(&block), t_end, dt, tol)?;
    observe(&QuantumState::opposed(beam, beam), &plan)
}

/// Plane basis at angle `acos(cos_theta)`, initial `σ3 = 1, τ3 = -1`, full
/// product space.
pub fn fig7_series(n: usize, cos_theta: f64, t_end: f64, dt: f64, tol: f64) -> Result<ObservableSeries> {
    if !(-1.0..=1.0).contains(&cos_theta) {
        return Err(Error::InvalidParameter(format!("cos theta = {cos_theta} outside [-1, 1]")));
    }
    let beam = BeamSize::new(n)?;
    let h = build_hamiltonian(Basis::Plane, cos_theta.acos(), beam, beam, rescaled_coupling(beam, beam))?;
    let plan = EvolutionPlan::uniform(Generator::Full(&h), t_end, dt, tol)?;
    observe(&QuantumState::opposed(beam, beam), &plan)
}

/// Largest absolute difference, over a uniform grid on `[0, t_end]` and
/// over every observable, between Dicke-space evolution and brute-force
/// evolution on the full photon register. Starts from the opposed state.
pub fn oracle_deviation(n_a: usize, n_b: usize, basis: Basis, theta: f64, t_end: f64, dt: f64) -> Result<f64> {
    let (na, nb) = (BeamSize::new(n_a)?, BeamSize::new(n_b)?);
    let g = rescaled_coupling(na, nb);
    let h = build_hamiltonian(basis, theta, na, nb, g)?;
    let initial = QuantumState::opposed(na, nb);
    let plan = EvolutionPlan::uniform(Generator::Full(&h), t_end, dt, 1e-12)?;
    let series = observe(&initial, &plan)?;
    let space = FullSpace::new(na, nb)?;
    let dense = DensePropagator::new(&(brute_force_embed(na, nb, theta, basis)? * C64::new(g, 0.0)));
    let psi0 = space.embed(&initial);
    let mut worst: f64 = 0.0;
    for (i, &t) in series.t.iter().enumerate() {
        let o = space.observables(&dense.apply(&psi0, t));
        let diffs = [
            o.sigma3 - series.sigma3[i],
            o.tau3 - series.tau3[i],
            o.zeta - series.zeta[i],
            o.zeta_rot - series.zeta_rot[i],
            o.s_ent - series.s_ent[i],
            o.var_ndiff - series.var_ndiff[i],
        ];
        worst = diffs.iter().fold(worst, |w, d| w.max(d.abs()));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BreakTimeConfig {
    pub t_end: f64,
    pub dt: f64,
    pub tol: f64,
    pub thresholds: AnalysisThresholds,
    /// Minimum prominence for ζ, entropy and variance peaks, relative to the
    /// series maximum.
    pub peak_prominence: f64,
}

impl Default for BreakTimeConfig {
    fn default() -> Self {
        Self { t_end: 4.0, dt: 2e-3, tol: 1e-10, thresholds: AnalysisThresholds::default(), peak_prominence: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct BreakTimeRun {
    pub n: usize,
    pub crossings: Vec<f64>,
    pub first_crossing: f64,
    /// Smallest `<σ3>` after the first crossing.
    pub min_sigma3: f64,
    pub hold_time: f64,
    pub transition_time: f64,
    /// Peaks of `|ζ|`.
    pub zeta_peaks: Vec<Peak>,
    pub s_ent_peaks: Vec<Peak>,
    pub var_peaks: Vec<Peak>,
    pub series: ObservableSeries,
}

#[derive(Clone, Debug)]
pub struct BreakTimeReport {
    pub runs: Vec<BreakTimeRun>,
    /// First-crossing time against `ln N`.
    pub slope: f64,
    pub intercept: f64,
    /// Differences of first-crossing times between consecutive entries.
    pub increments: Vec<f64>,
}

fn relative_peaks(t: &[f64], y: &[f64], rel: f64) -> Vec<Peak> {
    let top = y.iter().copied().fold(0.0, f64::max);
    find_peaks(t, y, rel * top)
}

/// Crossing, hold and peak analysis of one break-time series.
pub fn analyze_break_time(n: usize, series: ObservableSeries, config: &BreakTimeConfig) -> Result<BreakTimeRun> {
    let report = crossings_of_samples(&series.t, &series.sigma3, None)?;
    let first = report.first_crossing_time;
    let min_sigma3 = series
        .t
        .iter()
        .zip(&series.sigma3)
        .filter(|(t, _)| **t > first)
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    let t_end = *series.t.last().unwrap();
    let window_end = report.crossings.get(1).copied().unwrap_or(t_end);
    let abs_s: Vec<f64> = series.sigma3.iter().map(|s| s.abs()).collect();
    let hold_time = time_above(&series.t, &abs_s, 1.0 - config.thresholds.hold_band, series.t[0], window_end);
    let transition_time = window_end - series.t[0] - hold_time;
    let abs_zeta: Vec<f64> = series.zeta.iter().map(|z| z.abs()).collect();
    Ok(BreakTimeRun {
        n,
        crossings: report.crossings,
        first_crossing: first,
        min_sigma3,
        hold_time,
        transition_time,
        zeta_peaks: relative_peaks(&series.t, &abs_zeta, config.peak_prominence),
        s_ent_peaks: relative_peaks(&series.t, &series.s_ent, config.peak_prominence),
        var_peaks: relative_peaks(&series.t, &series.var_ndiff, config.peak_prominence),
        series,
    })
}

/// Run the break-time protocol for every `N` (concurrently) and fit the first
/// crossing time against `ln N`.
pub fn break_time_analysis(n_list: &[usize], config: &BreakTimeConfig) -> Result<BreakTimeReport> {
    if n_list.len() < 2 {
        return Err(Error::InsufficientPoints { need: 2, got: n_list.len() });
    }
    let runs = n_list
        .par_iter()
        .map(|&n| analyze_break_time(n, fig3_series(n, config.t_end, config.dt, config.tol)?, config))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = runs.iter().map(|r| ((r.n as f64).ln(), r.first_crossing)).collect();
    let (slope, intercept) = linear_fit(&pts);
    let increments = runs.windows(2).map(|w| w[1].first_crossing - w[0].first_crossing).collect();
    Ok(BreakTimeReport { runs, slope, intercept, increments })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateauConfig {
    /// Run length is `t_end_per_n * N + t_end_offset`.
    pub t_end_per_n: f64,
    pub t_end_offset: f64,
    pub dt: f64,
    pub tol: f64,
    pub thresholds: AnalysisThresholds,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self { t_end_per_n: 1.3, t_end_offset: 10.0, dt: 0.01, tol: 1e-10, thresholds: AnalysisThresholds::default() }
    }
}

impl PlateauConfig {
    pub fn t_end(&self, n: usize) -> f64 {
        self.t_end_per_n * n as f64 + self.t_end_offset
    }
}

#[derive(Clone, Debug)]
pub struct PlateauRun {
    pub n: usize,
    pub cos_theta: f64,
    /// Mean `|ζ'|` over the plateau.
    pub height: f64,
    pub rise_time: f64,
    pub hang_time: f64,
    pub plateau_start: f64,
    pub plateau_end: f64,
    /// Largest `|<σ1>|` and `|<τ1>|` inside the plateau.
    pub max_abs_sigma1: f64,
    pub max_abs_tau1: f64,
    pub series: ObservableSeries,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Locate the `|ζ'|` plateau of a series.
pub fn analyze_plateau(n: usize, cos_theta: f64, series: ObservableSeries, th: &AnalysisThresholds) -> Result<PlateauRun> {
    let y: Vec<f64> = series.zeta_rot.iter().map(|z| z.abs()).collect();
    if y.len() < 3 {
        return Err(Error::InsufficientPoints { need: 3, got: y.len() });
    }
    let med = median(&y);
    if med < th.plateau_band {
        return Err(Error::NoPlateau);
    }
    let t = &series.t;
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=y.len() {
        let inside = i < y.len() && (y[i] - med).abs() < th.plateau_band;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let e = i - 1;
                if e > s && best.is_none_or(|(bs, be)| t[e] - t[s] > t[be] - t[bs]) {
                    best = Some((s, e));
                }
                start = None;
            }
            _ => {}
        }
    }
    let (s, e) = best.ok_or(Error::NoPlateau)?;
    let height = y[s..=e].iter().sum::<f64>() / (e - s + 1) as f64;
    let rise_time = first_reach(t, &y, th.rise_fraction * height).ok_or(Error::NoPlateau)?;
    let max_abs = |v: &[f64]| v[s..=e].iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(PlateauRun {
        n,
        cos_theta,
        height,
        rise_time,
        hang_time: t[e] - t[s],
        plateau_start: t[s],
        plateau_end: t[e],
        max_abs_sigma1: max_abs(&series.sigma1),
        max_abs_tau1: max_abs(&series.tau1),
        series,
    })
}

/// Run the plateau protocol for every `N` (concurrently).
pub fn plateau_analysis(cos_theta: f64, n_list: &[usize], config: &PlateauConfig) -> Result<Vec<PlateauRun>> {
    n_list
        .par_iter()
        .map(|&n| {
            let series = fig7_series(n, cos_theta, config.t_end(n), config.dt, config.tol)?;
            analyze_plateau(n, cos_theta, series, &config.thresholds)
        })
        .collect()
}
