//! Exact evolution in the product Dicke space and its diagnostics.
//!
//! Times are rescaled so that the Hamiltonian carries the `g = 1/sqrt(N_a N_b)`
//! coupling of [`crate::coupling::rescaled_coupling`]. Charge-conserving runs
//! (circular basis at θ = 0) can be confined to a single
//! [`MTotalBlock`], which shrinks the state from `(N+1)²` to at most `N+1`
//! amplitudes.

pub mod analysis;
pub mod checkpoint;
pub mod observables;
pub mod propagator;

#[cfg(test)]
mod tests;

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::coupling::{MTotalBlock, TwoBeamHamiltonian};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::spinspace::{vec_norm, BeamSize, QuantumState};

pub use analysis::{
    analyze_break_time, analyze_plateau, break_time_analysis, fig3_series, fig7_series, find_peaks, first_reach,
    oracle_deviation, plateau_analysis, time_above, AnalysisThresholds, BreakTimeConfig, BreakTimeReport, BreakTimeRun, Peak, PlateauConfig, PlateauRun,
};
pub use observables::{
    entanglement_entropy, expectations, measure, measure_block, reduced_density, spectrum_entropy, variance_ndiff,
    zeta_rotated, Observables,
};
pub use propagator::{propagate, KrylovSettings, DEFAULT_KRYLOV_DIM};

/// Default drift budget.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The operator that generates the evolution.
#[derive(Clone, Copy, Debug)]
pub enum Generator<'a> {
    Full(&'a TwoBeamHamiltonian),
    Block(&'a MTotalBlock),
}

impl Generator<'_> {
    fn matrix(&self) -> &CsrMatrix {
        match self {
            Generator::Full(h) => h.matrix(),
            Generator::Block(b) => &b.matrix,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionPlan<'a> {
    pub hamiltonian: Generator<'a>,
    /// Increasing sample times; the initial state is taken at `t_grid[0]`.
    pub t_grid: Vec<f64>,
    /// Norm and relative energy drift budget; also the Krylov local error
    /// target per unit time.
    pub tol: f64,
    pub krylov_dim: usize,
}

impl<'a> EvolutionPlan<'a> {
    pub fn new(hamiltonian: Generator<'a>, t_grid: Vec<f64>, tol: f64) -> Result<Self> {
        let plan = Self { hamiltonian, t_grid, tol, krylov_dim: DEFAULT_KRYLOV_DIM };
        plan.validate()?;
        Ok(plan)
    }

    /// `0, dt, 2 dt, ..., t_end` (the last point is exactly `t_end`).
    pub fn uniform(hamiltonian: Generator<'a>, t_end: f64, dt: f64, tol: f64) -> Result<Self> {
        if !(t_end > 0.0 && dt > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("need t_end > 0 and dt > 0, got {t_end}, {dt}")));
        }
        let n = (t_end / dt).round().max(1.0) as usize;
        let grid = (0..=n).map(|k| t_end * k as f64 / n as f64).collect();
        Self::new(hamiltonian, grid, tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(Error::InvalidParameter(format!("tol must lie in (0, 1e-6], got {}", self.tol)));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("t_grid must be non-empty and finite".into()));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("t_grid must be strictly increasing".into()));
        }
        Ok(())
    }

    fn settings(&self) -> KrylovSettings {
        KrylovSettings { tol: self.tol, krylov_dim: self.krylov_dim }
    }
}

/// A state supported on one fixed-`m_a + m_b` block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockState {
    pub n_a: BeamSize,
    pub n_b: BeamSize,
    pub total_two_m: i64,
    pub index_map: Vec<(usize, usize)>,
    pub amplitudes: Vec<C64>,
}

impl BlockState {
    /// Restrict a full state to `block`; fails if any weight lies outside.
    pub fn from_state(state: &QuantumState, block: &MTotalBlock) -> Result<Self> {
        if state.n_a() != block.n_a || state.n_b() != block.n_b {
            return Err(Error::InvalidParameter("state and block beam sizes differ".into()));
        }
        let amplitudes: Vec<C64> = block.index_map.iter().map(|&(ka, kb)| state.amplitude(ka, kb)).collect();
        let outside = (1.0 - vec_norm(&amplitudes).powi(2)).max(0.0);
        if outside > 1e-12 {
            return Err(Error::InvalidParameter(format!("state has weight {outside:e} outside the block")));
        }
        Ok(Self::with_amplitudes(block, amplitudes))
    }

    fn with_amplitudes(block: &MTotalBlock, amplitudes: Vec<C64>) -> Self {
        Self {
            n_a: block.n_a,
            n_b: block.n_b,
            total_two_m: block.total_two_m,
            index_map: block.index_map.clone(),
            amplitudes,
        }
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// Embed into the full product space.
    pub fn to_state(&self) -> Result<QuantumState> {
        let db = self.n_b.dim();
        let mut full = vec![C64::new(0.0, 0.0); self.n_a.dim() * db];
        for (&(ka, kb), a) in self.index_map.iter().zip(&self.amplitudes) {
            full[ka * db + kb] = *a;
        }
        QuantumState::new(self.n_a, self.n_b, full)
    }
}

/// Drift bookkeeping shared by all evolution entry points.
struct DriftGuard {
    tol: f64,
    e0: Option<f64>,
}

impl DriftGuard {
    fn check(&mut self, t: f64, psi: &[C64], h: &CsrMatrix) -> Result<(f64, f64)> {
        let norm = vec_norm(psi);
        if (norm - 1.0).abs() > self.tol {
            return Err(Error::DriftExceeded { quantity: "norm", t, drift: (norm - 1.0).abs() });
        }
        let energy = h.expectation(psi).re;
        let e0 = *self.e0.get_or_insert(energy);
        let drift = (energy - e0).abs() / e0.abs().max(1.0);
        if drift > self.tol {
            return Err(Error::DriftExceeded { quantity: "energy", t, drift });
        }
        Ok((norm, energy))
    }
}

fn initial_vector(initial: &QuantumState, plan: &EvolutionPlan) -> Result<Vec<C64>> {
    plan.validate()?;
    if (initial.norm() - 1.0).abs() > crate::spinspace::NORM_TOL {
        return Err(Error::NotNormalized(initial.norm()));
    }
    match plan.hamiltonian {
        Generator::Full(h) => {
            if (h.n_a, h.n_b) != (initial.n_a(), initial.n_b()) {
                return Err(Error::InvalidParameter("state and hamiltonian beam sizes differ".into()));
            }
            Ok(initial.amplitudes().to_vec())
        }
        Generator::Block(b) => Ok(BlockState::from_state(initial, b)?.amplitudes),
    }
}

fn to_full(plan: &EvolutionPlan, initial: &QuantumState, psi: &[C64]) -> Result<QuantumState> {
    match plan.hamiltonian {
        Generator::Full(_) => QuantumState::normalized(initial.n_a(), initial.n_b(), psi.to_vec()),
        Generator::Block(b) => {
            let mut block = BlockState::with_amplitudes(b, psi.to_vec());
            let n = block.norm();
            block.amplitudes.iter_mut().for_each(|a| *a /= n);
            block.to_state()
        }
    }
}

/// States at every `plan.t_grid` time. Returned states are renormalized
/// after the drift check so they satisfy [`QuantumState`]'s invariant.
pub fn evolve(initial: &QuantumState, plan: &EvolutionPlan) -> Result<Vec<QuantumState>> {
    let psi0 = initial_vector(initial, plan)?;
    let h = plan.hamiltonian.matrix();
    let mut guard = DriftGuard { tol: plan.tol, e0: None };
    let mut out = Vec::with_capacity(plan.t_grid.len());
    propagate(h, psi0, &plan.t_grid, plan.settings(), |t, psi| {
        guard.check(t, psi, h)?;
        out.push(to_full(plan, initial, psi)?);
        Ok(())
    })?;
    Ok(out)
}

/// Evolve and record observables without keeping the states.
pub fn observe(initial: &QuantumState, plan: &EvolutionPlan) -> Result<ObservableSeries> {
    let psi0 = initial_vector(initial, plan)?;
    let h = plan.hamiltonian.matrix();
    let mut guard = DriftGuard { tol: plan.tol, e0: None };
    let mut series = ObservableSeries::default();
    propagate(h, psi0, &plan.t_grid, plan.settings(), |t, psi| {
        let (norm, energy) = guard.check(t, psi, h)?;
        let obs = match plan.hamiltonian {
            Generator::Full(_) => {
                measure(&QuantumState::normalized(initial.n_a(), initial.n_b(), psi.to_vec())?)
            }
            Generator::Block(b) => {
                let mut state = BlockState::with_amplitudes(b, psi.to_vec());
                state.amplitudes.iter_mut().for_each(|a| *a /= norm);
                measure_block(&state)
            }
        };
        series.push(t, obs, norm, energy);
        Ok(())
    })?;
    Ok(series)
}

/// Observables sampled along one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservableSeries {
    pub t: Vec<f64>,
    pub sigma3: Vec<f64>,
    pub tau3: Vec<f64>,
    pub zeta: Vec<f64>,
    pub zeta_rot: Vec<f64>,
    pub s_ent: Vec<f64>,
    pub var_ndiff: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub tau1: Vec<f64>,
}

impl ObservableSeries {
    pub fn push(&mut self, t: f64, obs: Observables, norm: f64, energy: f64) {
        self.t.push(t);
        self.sigma3.push(obs.sigma3);
        self.tau3.push(obs.tau3);
        self.zeta.push(obs.zeta);
        self.zeta_rot.push(obs.zeta_rot);
        self.s_ent.push(obs.s_ent);
        self.var_ndiff.push(obs.var_ndiff);
        self.norm.push(norm);
        self.energy.push(energy);
        self.sigma1.push(obs.sigma1);
        self.tau1.push(obs.tau1);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest `|norm - 1|` along the run.
    pub fn norm_drift(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest `|E(t) - E(0)| / max(|E(0)|, 1)`.
    pub fn energy_drift(&self) -> f64 {
        let Some(&e0) = self.energy.first() else { return 0.0 };
        self.energy.iter().map(|e| (e - e0).abs() / e0.abs().max(1.0)).fold(0.0, f64::max)
    }

    /// CSV with columns `t, sigma3, tau3, zeta, zeta_rot, s_ent, var_ndiff,
    /// norm, energy`, preceded by a `#` line stating the entropy unit.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# s_ent in nats")?;
        writeln!(w, "t,sigma3,tau3,zeta,zeta_rot,s_ent,var_ndiff,norm,energy")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.t[i],
                self.sigma3[i],
                self.tau3[i],
                self.zeta[i],
                self.zeta_rot[i],
                self.s_ent[i],
                self.var_ndiff[i],
                self.norm[i],
                self.energy[i]
            )?;
        }
        Ok(())
    }
}
