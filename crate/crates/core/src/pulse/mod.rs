//! Mean-field transport of co-moving beams injected at `z = 0`.
//!
//! Both beams move in `+z` at unit speed, so the mean-field equations hold
//! with `∂/∂t` replaced by `∂/∂t + ∂/∂z`. Each step applies a first-order
//! upwind shift with Courant number `ν = dt/dz` and then integrates the local
//! mean-field source over `dt` at every interior point. At `ν = 1` the shift
//! is exact and the scheme follows the characteristics, so the only error
//! left is the pointwise ODE tolerance.
//!
//! Lengths and times are in units of `[n_γ R]⁻¹` with `c = 1`.


use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::meanfield::ode::StepControl;
use crate::meanfield::{mf_advance, MeanFieldState, MfParams, DEFAULT_MAX_STEP};

pub const MIN_POINTS: usize = 64;
pub const DEFAULT_RAMP_TIME: f64 = 0.05;

/// Inflow values at `z = 0`: `σ3` rises from 0 to 1 along a half-cosine over
/// `ramp_time` and holds; `σ+ = 0`; the τ fields are the negatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryProfile {
    pub ramp_time: f64,
}

impl Default for BoundaryProfile {
    fn default() -> Self {
        Self { ramp_time: DEFAULT_RAMP_TIME }
    }
}

impl BoundaryProfile {
    pub fn sigma3(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= self.ramp_time {
            1.0
        } else {
            0.5 * (1.0 - (PI * t / self.ramp_time).cos())
        }
    }

    pub fn state(&self, t: f64) -> MeanFieldState {
        let s = self.sigma3(t);
        MeanFieldState { sigma_plus: C64::new(0.0, 0.0), sigma3: s, tau_plus: C64::new(0.0, 0.0), tau3: -s }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseParams {
    /// Beam angle and photon densities; zero densities switch the
    /// interaction off.
    pub mf: MfParams,
    pub boundary: BoundaryProfile,
    /// Tolerance of the pointwise source integration.
    pub ode_tol: f64,
}

impl PulseParams {
    /// Unit densities at angle `acos(cos_theta)`.
    pub fn new(cos_theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&cos_theta) {
            return Err(Error::InvalidParameter(format!("cos theta = {cos_theta} outside [-1, 1]")));
        }
        Ok(Self { mf: MfParams::unit(cos_theta.acos()), boundary: BoundaryProfile::default(), ode_tol: 1e-12 })
    }

    pub fn validate(&self) -> Result<()> {
        let MfParams { theta, n1, n2 } = self.mf;
        if !(theta.is_finite() && n1 >= 0.0 && n2 >= 0.0 && n1.is_finite() && n2.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad mean-field parameters {:?}", self.mf)));
        }
        if !(self.boundary.ramp_time > 0.0) {
            return Err(Error::InvalidParameter("ramp time must be positive".into()));
        }
        if !(self.ode_tol > 0.0) {
            return Err(Error::InvalidParameter("ode_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseGrid {
    pub length: f64,
    pub nz: usize,
    pub dz: f64,
    pub dt: f64,
    pub t: f64,
    /// Fields at `z_i = i dz`, `i = 0..nz`.
    pub fields: Vec<MeanFieldState>,
}

impl PulseGrid {
    /// Empty region (all fields zero) at `t = 0`.
    pub fn new(length: f64, nz: usize, dt: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("region length {length}")));
        }
        if nz < MIN_POINTS {
            return Err(Error::InsufficientPoints { need: MIN_POINTS, got: nz });
        }
        let dz = length / (nz - 1) as f64;
        let grid = Self { length, nz, dz, dt, t: 0.0, fields: vec![MeanFieldState::ZERO; nz] };
        grid.check_cfl()?;
        Ok(grid)
    }

    /// Grid with `dt = courant * dz`.
    pub fn with_courant(length: f64, nz: usize, courant: f64) -> Result<Self> {
        let dz = length / (nz.max(2) - 1) as f64;
        Self::new(length, nz, courant * dz)
    }

    fn check_cfl(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.dt > self.dz * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt: self.dt, dz: self.dz });
        }
        Ok(())
    }

    pub fn z(&self, i: usize) -> f64 {
        i as f64 * self.dz
    }

    pub fn sigma3(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.sigma3).collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { t: self.t, dz: self.dz, fields: self.fields.clone() }
    }
}

/// Advance the grid by one `dt`.
pub fn pulse_step(grid: &mut PulseGrid, params: &PulseParams) -> Result<()> {
    grid.check_cfl()?;
    let nu = grid.dt / grid.dz;
    let t_new = grid.t + grid.dt;
    let old = &grid.fields;
    let ctl = StepControl { tol: params.ode_tol, max_step: DEFAULT_MAX_STEP };
    let interior = (1..grid.nz)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (old[i].to_array(), old[i - 1].to_array());
            let mut y = [0.0; 6];
            for k in 0..6 {
                y[k] = if nu == 1.0 { b[k] } else { a[k] - nu * (a[k] - b[k]) };
            }
            mf_advance(MeanFieldState::from_array(y), &params.mf, grid.dt, ctl)
        })
        .collect::<Result<Vec<_>>>()?;
    grid.fields[0] = params.boundary.state(t_new);
    grid.fields[1..].copy_from_slice(&interior);
    grid.t = t_new;
    Ok(())
}

/// Field profile at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub dz: f64,
    pub fields: Vec<MeanFieldState>,
}

impl Snapshot {
    pub fn sigma3(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.sigma3).collect()
    }

    /// CSV with columns `z, sigma3, tau3, re_sigma_plus, im_sigma_plus`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "z,sigma3,tau3,re_sigma_plus,im_sigma_plus")?;
        for (i, f) in self.fields.iter().enumerate() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                i as f64 * self.dz,
                f.sigma3,
                f.tau3,
                f.sigma_plus.re,
                f.sigma_plus.im
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PulseRun {
    pub snapshots: Vec<Snapshot>,
    /// First snapshot that differs from its predecessor by less than the
    /// steady tolerance everywhere.
    pub steady: Snapshot,
    /// Largest `(2|σ+|)² + σ3²` seen over all points and steps, for both beams.
    pub max_bloch_norm: f64,
}

/// Step until `t_max`, recording a snapshot every `snapshot_every` steps
/// (including `t = 0`), and report the first steady snapshot.
pub fn run_to_steady(
    grid: &mut PulseGrid,
    params: &PulseParams,
    t_max: f64,
    snapshot_every: usize,
    steady_tol: f64,
) -> Result<PulseRun> {
    params.validate()?;
    if snapshot_every == 0 {
        return Err(Error::InvalidParameter("snapshot_every must be positive".into()));
    }
    let steps = ((t_max - grid.t) / grid.dt).round().max(0.0) as usize;
    let mut snapshots = vec![grid.snapshot()];
    let mut max_bloch_norm = bloch_max(grid);
    for step in 1..=steps {
        pulse_step(grid, params)?;
        max_bloch_norm = max_bloch_norm.max(bloch_max(grid));
        if step % snapshot_every == 0 || step == steps {
            snapshots.push(grid.snapshot());
        }
    }
    let steady = snapshots
        .windows(2)
        .find(|w| max_diff(&w[0].sigma3(), &w[1].sigma3()) < steady_tol && w[0].t > 0.0)
        .map(|w| w[1].clone())
        .ok_or(Error::NoConvergence { t_max })?;
    Ok(PulseRun { snapshots, steady, max_bloch_norm })
}

fn bloch_max(grid: &PulseGrid) -> f64 {
    grid.fields.iter().map(|f| f.bloch_norm_a().max(f.bloch_norm_b())).fold(0.0, f64::max)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest `|σ3|` difference over `z` and over every pair of snapshots taken
/// at `t ≥ t_start`.
pub fn standing_residual(snapshots: &[Snapshot], t_start: f64) -> Result<f64> {
    let late: Vec<Vec<f64>> = snapshots.iter().filter(|s| s.t >= t_start).map(Snapshot::sigma3).collect();
    if late.len() < 2 {
        return Err(Error::InsufficientPoints { need: 2, got: late.len() });
    }
    let mut worst: f64 = 0.0;
    for i in 0..late.len() {
        for j in i + 1..late.len() {
            worst = worst.max(max_diff(&late[i], &late[j]));
        }
    }
    Ok(worst)
}

/// Largest `|field|` at points with `z > t + margin`.
pub fn beyond_front(grid: &PulseGrid, margin: f64) -> f64 {
    (0..grid.nz)
        .filter(|&i| grid.z(i) > grid.t + margin)
        .map(|i| {
            let f = grid.fields[i];
            f.sigma3.abs().max(f.tau3.abs()).max(f.sigma_plus.norm()).max(f.tau_plus.norm())
        })
        .fold(0.0, f64::max)
}

/// Largest violation of `τ3 = -σ3`, `τ+ = conj(σ+)`.
pub fn antisymmetry_defect(grid: &PulseGrid) -> f64 {
    grid.fields
        .iter()
        .map(|f| (f.tau3 + f.sigma3).abs().max((f.tau_plus - f.sigma_plus.conj()).norm()))
        .fold(0.0, f64::max)
}

/// Errors of the `σ3` profile at `t_final` on grids with `nz_coarse`,
/// `2 nz_coarse - 1`, ... points (each halving `dz` and `dt`) at a fixed
/// Courant number, against the characteristic (`ν = 1`) solution on the same
/// grid. Returns `(dz, max error)` pairs.
pub fn refinement_errors(
    params: &PulseParams,
    length: f64,
    nz_coarse: usize,
    levels: usize,
    courant: f64,
    t_final: f64,
) -> Result<Vec<(f64, f64)>> {
    (0..levels)
        .map(|level| {
            let nz = (nz_coarse - 1) * (1 << level) + 1;
            let mut exact = PulseGrid::with_courant(length, nz, 1.0)?;
            let mut approx = PulseGrid::with_courant(length, nz, courant)?;
            advance_to(&mut exact, params, t_final)?;
            advance_to(&mut approx, params, t_final)?;
            Ok((approx.dz, max_diff(&exact.sigma3(), &approx.sigma3())))
        })
        .collect()
}

/// Step until `grid.t` reaches `t_final` (rounded to whole steps).
pub fn advance_to(grid: &mut PulseGrid, params: &PulseParams, t_final: f64) -> Result<()> {
    let steps = ((t_final - grid.t) / grid.dt).round().max(0.0) as usize;
    for _ in 0..steps {
        pulse_step(grid, params)?;
    }
    Ok(())
}

/// Write one CSV per snapshot plus `manifest.csv` (`index,t,file`) into
/// `dir`. Returns every file written.
pub fn write_snapshots(dir: &Path, snapshots: &[Snapshot]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(snapshots.len() + 1);
    let manifest_path = dir.join("manifest.csv");
    let mut manifest = BufWriter::new(File::create(&manifest_path)?);
    writeln!(manifest, "index,t,file")?;
    for (k, s) in snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:04}.csv");
        let path = dir.join(&name);
        let mut w = BufWriter::new(File::create(&path)?);
        s.write_csv(&mut w)?;
        w.flush()?;
        writeln!(manifest, "{k},{:.17e},{name}", s.t)?;
        files.push(path);
    }
    manifest.flush()?;
    files.push(manifest_path);
    Ok(files)
}
