//! Mean-field polarization dynamics of two interacting beams.
//!
//! Each beam is reduced to its per-photon polarization vector. With
//! `σ± = (σ1 ± iσ2)/2`, `A = (1 + cos θ)²`, `B = (1 - cos θ)²` and
//! `s = sin² θ` the equations of motion are
//!
//! ```text
//! i dσ+/dt = n2 σ3 [s + A τ+ - B τ-]
//! i dσ3/dt = 2 n2 [s (σ+ - σ-) - B (σ+τ+ - σ-τ-) + A (σ+τ- - σ-τ+)]
//! i dτ+/dt = n1 τ3 [s + A σ+ - B σ-]
//! i dτ3/dt = 2 n1 [s (τ+ - τ-) - B (σ+τ+ - σ-τ-) - A (σ+τ- - σ-τ+)]
//! ```
//!
//! Time is measured in units of `[n R]⁻¹`; with `n1 = n2 = 1` that is the
//! unit of every figure-level run. These are the Heisenberg equations of
//! `E = n1 n2 [s (σ1 + τ1) + 2 cos θ σ1 τ1 + (1 + cos² θ) σ2 τ2]`, which is
//! therefore conserved together with both Bloch norms.

pub mod ode;

use std::io::Write;

use nalgebra::SMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use ode::{integrate, AcceptedStep, StepControl};

/// Default step-size cap for [`mf_evolve`]; keeps the sampled series smooth
/// enough to plot and to bracket every crossing.
pub const DEFAULT_MAX_STEP: f64 = 0.02;

/// Mean polarization of both beams. `σ-` and `τ-` are the conjugates of the
/// stored `σ+`, `τ+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanFieldState {
    pub sigma_plus: C64,
    pub sigma3: f64,
    pub tau_plus: C64,
    pub tau3: f64,
}

impl MeanFieldState {
    pub const ZERO: Self = Self { sigma_plus: C64::new(0.0, 0.0), sigma3: 0.0, tau_plus: C64::new(0.0, 0.0), tau3: 0.0 };

    /// Beam A fully in `σ3 = +1`, beam B in `τ3 = -1`.
    pub fn opposed() -> Self {
        Self { sigma3: 1.0, tau3: -1.0, ..Self::ZERO }
    }

    /// State with both polarization vectors given in Cartesian components.
    pub fn from_vectors(sigma: [f64; 3], tau: [f64; 3]) -> Self {
        Self {
            sigma_plus: C64::new(sigma[0], sigma[1]) / 2.0,
            sigma3: sigma[2],
            tau_plus: C64::new(tau[0], tau[1]) / 2.0,
            tau3: tau[2],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.sigma_plus.re, self.sigma_plus.im, self.sigma3, self.tau_plus.re, self.tau_plus.im, self.tau3]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { sigma_plus: C64::new(a[0], a[1]), sigma3: a[2], tau_plus: C64::new(a[3], a[4]), tau3: a[5] }
    }

    /// `(2|σ+|)² + σ3²`.
    pub fn bloch_norm_a(&self) -> f64 {
        4.0 * self.sigma_plus.norm_sqr() + self.sigma3 * self.sigma3
    }

    /// `(2|τ+|)² + τ3²`.
    pub fn bloch_norm_b(&self) -> f64 {
        4.0 * self.tau_plus.norm_sqr() + self.tau3 * self.tau3
    }

    pub fn sigma(&self) -> [f64; 3] {
        [2.0 * self.sigma_plus.re, 2.0 * self.sigma_plus.im, self.sigma3]
    }

    pub fn tau(&self) -> [f64; 3] {
        [2.0 * self.tau_plus.re, 2.0 * self.tau_plus.im, self.tau3]
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.to_array().iter().all(|v| v.is_finite())
            && self.bloch_norm_a() <= 1.0 + 1e-9
            && self.bloch_norm_b() <= 1.0 + 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("mean-field state outside the Bloch ball: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfParams {
    pub theta: f64,
    pub n1: f64,
    pub n2: f64,
}

impl MfParams {
    pub fn new(theta: f64, n1: f64, n2: f64) -> Result<Self> {
        if !(n1 > 0.0 && n2 > 0.0 && n1.is_finite() && n2.is_finite()) {
            return Err(Error::InvalidParameter(format!("photon densities must be positive, got n1 = {n1}, n2 = {n2}")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta = {theta}")));
        }
        Ok(Self { theta, n1, n2 })
    }

    /// Equal unit densities.
    pub fn unit(theta: f64) -> Self {
        Self { theta, n1: 1.0, n2: 1.0 }
    }

    /// Beam angle with `1 - cos θ` given directly, which keeps tiny offsets
    /// exact.
    pub fn from_one_minus_cos(one_minus_cos: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&one_minus_cos) {
            return Err(Error::InvalidParameter(format!("1 - cos θ = {one_minus_cos} outside [0, 2]")));
        }
        // θ = 2 asin(√(x/2)) avoids the cancellation in acos(1 - x)
        Ok(Self::unit(2.0 * (one_minus_cos / 2.0).sqrt().asin()))
    }

    fn trig(&self) -> Trig {
        let (s, c) = self.theta.sin_cos();
        // (1 - cos θ) = 2 sin²(θ/2) without cancellation
        let half = (self.theta / 2.0).sin();
        let one_minus = 2.0 * half * half;
        Trig { sin2: s * s, a: (1.0 + c) * (1.0 + c), b: one_minus * one_minus, cos: c }
    }
}

struct Trig {
    sin2: f64,
    a: f64,
    b: f64,
    cos: f64,
}

/// Time derivative of the mean-field state.
pub fn mf_rhs(state: &MeanFieldState, params: &MfParams) -> MeanFieldState {
    let Trig { sin2, a, b, .. } = params.trig();
    let sp = state.sigma_plus;
    let tp = state.tau_plus;
    let minus_i = C64::new(0.0, -1.0);
    let d_sigma_plus = minus_i * params.n2 * state.sigma3 * (sin2 + a * tp - b * tp.conj());
    let d_tau_plus = minus_i * params.n1 * state.tau3 * (sin2 + a * sp - b * sp.conj());
    let same = (sp * tp).im;
    let cross = (sp * tp.conj()).im;
    let d_sigma3 = 4.0 * params.n2 * (sin2 * sp.im - b * same + a * cross);
    let d_tau3 = 4.0 * params.n1 * (sin2 * tp.im - b * same - a * cross);
    MeanFieldState { sigma_plus: d_sigma_plus, sigma3: d_sigma3, tau_plus: d_tau_plus, tau3: d_tau3 }
}

/// Conserved mean-field energy.
pub fn mf_energy(state: &MeanFieldState, params: &MfParams) -> f64 {
    let Trig { sin2, cos, .. } = params.trig();
    let [s1, s2, _] = state.sigma();
    let [t1, t2, _] = state.tau();
    params.n1 * params.n2 * (sin2 * (s1 + t1) + 2.0 * cos * s1 * t1 + (1.0 + cos * cos) * s2 * t2)
}

fn rhs_array(y: &[f64; 6], params: &MfParams) -> [f64; 6] {
    mf_rhs(&MeanFieldState::from_array(*y), params).to_array()
}

/// Jacobian of [`mf_rhs`] in the real coordinates of
/// [`MeanFieldState::to_array`]. The right-hand side is quadratic, so central
/// differences are exact up to rounding.
pub fn jacobian(state: &MeanFieldState, params: &MfParams) -> SMatrix<f64, 6, 6> {
    let y = state.to_array();
    let h = 1e-4;
    let mut jac = SMatrix::<f64, 6, 6>::zeros();
    for j in 0..6 {
        let mut up = y;
        let mut down = y;
        up[j] += h;
        down[j] -= h;
        let fu = rhs_array(&up, params);
        let fd = rhs_array(&down, params);
        for i in 0..6 {
            jac[(i, j)] = (fu[i] - fd[i]) / (2.0 * h);
        }
    }
    jac
}

/// Largest real part among the eigenvalues of the linearization at `state`.
pub fn max_growth_rate(state: &MeanFieldState, params: &MfParams) -> f64 {
    jacobian(state, params).complex_eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Mean-field trajectory sampled at every accepted integrator step.
#[derive(Clone, Debug)]
pub struct MfSeries {
    pub params: MfParams,
    pub tol: f64,
    pub t: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    /// Time derivatives at each sample, for Hermite interpolation.
    pub rates: Vec<MeanFieldState>,
}

impl MfSeries {
    pub fn sigma3(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.sigma3).collect()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest deviation of the Bloch norms and the energy from their initial
    /// values, as `(norm_a, norm_b, energy)`.
    pub fn conservation_drift(&self) -> (f64, f64, f64) {
        let first = self.states[0];
        let e0 = mf_energy(&first, &self.params);
        self.states.iter().fold((0.0, 0.0, 0.0), |(a, b, e), s| {
            (
                a.max((s.bloch_norm_a() - first.bloch_norm_a()).abs()),
                b.max((s.bloch_norm_b() - first.bloch_norm_b()).abs()),
                e.max((mf_energy(s, &self.params) - e0).abs()),
            )
        })
    }

    /// CSV with columns `t, sigma3, tau3, re_sigma_plus, im_sigma_plus,
    /// re_tau_plus, im_tau_plus, bloch_norm_a, bloch_norm_b, energy`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,sigma3,tau3,re_sigma_plus,im_sigma_plus,re_tau_plus,im_tau_plus,bloch_norm_a,bloch_norm_b,energy")?;
        for (t, s) in self.t.iter().zip(&self.states) {
            writeln!(
                w,
                "{t:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.sigma3,
                s.tau3,
                s.sigma_plus.re,
                s.sigma_plus.im,
                s.tau_plus.re,
                s.tau_plus.im,
                s.bloch_norm_a(),
                s.bloch_norm_b(),
                mf_energy(s, &self.params)
            )?;
        }
        Ok(())
    }
}

/// Integrate the mean-field equations from `init` to `t_end`.
pub fn mf_evolve(init: MeanFieldState, params: MfParams, t_end: f64, tol: f64) -> Result<MfSeries> {
    mf_evolve_with(init, params, t_end, StepControl { tol, max_step: DEFAULT_MAX_STEP })
}

pub fn mf_evolve_with(init: MeanFieldState, params: MfParams, t_end: f64, ctl: StepControl) -> Result<MfSeries> {
    init.validate()?;
    let mut series = MfSeries {
        params,
        tol: ctl.tol,
        t: vec![0.0],
        states: vec![init],
        rates: vec![mf_rhs(&init, &params)],
    };
    integrate(|y| rhs_array(y, &params), 0.0, init.to_array(), t_end, ctl, |step: &AcceptedStep<6>| {
        series.t.push(step.t1);
        series.states.push(MeanFieldState::from_array(step.y1));
        series.rates.push(MeanFieldState::from_array(step.f1));
    })?;
    Ok(series)
}

/// Propagate a single state over `dt` (used for pointwise refinement).
pub fn mf_advance(state: MeanFieldState, params: &MfParams, dt: f64, ctl: StepControl) -> Result<MeanFieldState> {
    let y = integrate(|y| rhs_array(y, params), 0.0, state.to_array(), dt, ctl, |_| {})?;
    Ok(MeanFieldState::from_array(y))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingReport {
    pub first_crossing_time: f64,
    /// Mean full period (every second crossing); `None` with fewer than
    /// three crossings.
    pub period: Option<f64>,
    pub crossings: Vec<f64>,
}

impl CrossingReport {
    fn from_crossings(crossings: Vec<f64>) -> Result<Self> {
        let first = *crossings.first().ok_or(Error::NoCrossings)?;
        let period = (crossings.len() >= 3).then(|| {
            let spans: Vec<f64> = crossings.windows(3).map(|w| w[2] - w[0]).collect();
            spans.iter().sum::<f64>() / spans.len() as f64
        });
        Ok(Self { first_crossing_time: first, period, crossings })
    }
}

/// Zero crossings of sampled data. With slopes the root is taken on the cubic
/// Hermite interpolant, otherwise on the cubic through the four nearest
/// samples.
pub fn crossings_of_samples(t: &[f64], y: &[f64], dy: Option<&[f64]>) -> Result<CrossingReport> {
    if t.len() != y.len() || dy.is_some_and(|d| d.len() != y.len()) {
        return Err(Error::InvalidParameter("sample arrays differ in length".into()));
    }
    let mut crossings = Vec::new();
    for i in 0..y.len().saturating_sub(1) {
        let (y0, y1) = (y[i], y[i + 1]);
        if y0 == 0.0 && i > 0 {
            continue; // counted as the right end of the previous interval
        }
        if !(y0 == 0.0 || y1 == 0.0 || (y0 < 0.0) != (y1 < 0.0)) {
            continue;
        }
        if y0 == 0.0 && y1 == 0.0 {
            continue;
        }
        let root = match dy {
            Some(d) => bisect(t[i], t[i + 1], |s| ode::hermite(t[i], y0, d[i], t[i + 1], y1, d[i + 1], s)),
            None => {
                let lo = i.saturating_sub(1).min(y.len().saturating_sub(4));
                let idx: Vec<usize> = (lo..(lo + 4).min(y.len())).collect();
                bisect(t[i], t[i + 1], |s| lagrange(&idx.iter().map(|&k| (t[k], y[k])).collect::<Vec<_>>(), s))
            }
        };
        if crossings.last().is_none_or(|&last| root > last) {
            crossings.push(root);
        }
    }
    CrossingReport::from_crossings(crossings)
}

fn lagrange(points: &[(f64, f64)], x: f64) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, &(xi, yi))| {
            points.iter().enumerate().filter(|&(j, _)| j != i).fold(yi, |acc, (_, &(xj, _))| acc * (x - xj) / (xi - xj))
        })
        .sum()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 1e-15 * hi.abs().max(1.0) {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero crossings of `⟨σ3⟩` along a mean-field run. Each Hermite estimate is
/// polished by Newton iteration on freshly integrated states from the
/// bracketing sample, so the result carries the integrator's accuracy.
pub fn crossing_report(series: &MfSeries) -> Result<CrossingReport> {
    let s3 = series.sigma3();
    let d3: Vec<f64> = series.rates.iter().map(|r| r.sigma3).collect();
    let rough = crossings_of_samples(&series.t, &s3, Some(&d3))?;
    let ctl = StepControl { tol: series.tol.min(1e-12), max_step: DEFAULT_MAX_STEP };
    let mut refined = Vec::with_capacity(rough.crossings.len());
    for &tc in &rough.crossings {
        let i = series.t.partition_point(|&t| t <= tc).saturating_sub(1);
        let (t0, y0) = (series.t[i], series.states[i]);
        let mut t = tc;
        for _ in 0..8 {
            let s = mf_advance(y0, &series.params, t - t0, ctl)?;
            let slope = mf_rhs(&s, &series.params).sigma3;
            if slope == 0.0 {
                break;
            }
            let step = s.sigma3 / slope;
            t -= step;
            if step.abs() < 1e-13 {
                break;
            }
        }
        refined.push(t);
    }
    CrossingReport::from_crossings(refined)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    /// `d t1 / d(-ln(1 - cos θ))`.
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of a point from the fitted line.
    pub residual: f64,
    /// Mean gap between successive first-crossing times, ordered by angle.
    pub mean_spacing: f64,
}

/// Least-squares fit of first-crossing time against `-ln(1 - cos θ)`.
///
/// Needs at least three points spanning at least three decades.
pub fn log_scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints { need: 3, got: points.len() });
    }
    if points.iter().any(|&(x, t)| !(x > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("1 - cos θ must be positive and times finite".into()));
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|&(x, t)| (-x.ln(), t)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let span = (pts.last().unwrap().0 - pts[0].0) / std::f64::consts::LN_10;
    if span < 3.0 - 1e-9 {
        return Err(Error::InvalidParameter(format!("points span {span:.2} decades, need at least 3")));
    }
    let (slope, intercept) = linear_fit(&pts);
    let residual = pts.iter().map(|&(x, y)| (y - (slope * x + intercept)).abs()).fold(0.0, f64::max);
    let gaps: Vec<f64> = pts.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let mean_spacing = gaps.iter().sum::<f64>() / gaps.len() as f64;
    Ok(ScalingFit { slope, intercept, residual, mean_spacing })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests;
