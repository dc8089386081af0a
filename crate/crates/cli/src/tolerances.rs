//! Thresholds shared by inline run checks and the acceptance suite.

/// Values that should agree to rounding, e.g. Hermiticity defects.
pub const EXACT: f64 = 1e-12;

/// Relative accuracy of scaling-law identities.
pub const SCALING_REL: f64 = 1e-12;

/// `|‖ψ‖ - 1|` along a quantum run.
pub const UNITARITY: f64 = 1e-10;

/// Change of the conserved total `m` at θ = 0.
pub const CHARGE: f64 = 1e-10;

/// Relative quantum energy drift.
pub const ENERGY_DRIFT: f64 = 1e-8;

/// Mean-field Bloch norm and energy drift.
pub const MF_CONSERVATION: f64 = 1e-8;

/// Dicke-space evolution against the brute-force product space.
pub const ORACLE: f64 = 1e-8;

/// Crossing-time scaling fit residual as a fraction of the mean spacing.
pub const FIT_RESIDUAL_FRACTION: f64 = 0.05;

/// Mean-field turnover depth: `<σ3>` must reach `-1` within this.
pub const MF_TURNOVER: f64 = 0.01;

/// Full-period spread of the mean-field oscillation, relative. Orbits from
/// nearly aligned beams pass close to the saddle, where integration error
/// shifts each period by up to ~0.2 %.
pub const MF_PERIODICITY: f64 = 1e-2;

/// Quantum turnover depth in the break-time protocol.
pub const QUANTUM_TURNOVER: f64 = 0.05;

/// Spread of crossing-time increments under `N` doubling.
pub const INCREMENT_SPREAD: f64 = 0.10;

/// Required hold to transition ratio at the largest `N`.
pub const HOLD_RATIO: f64 = 3.0;

/// Relative distance of a peak from the event it should coincide with.
pub const PEAK_ALIGNMENT: f64 = 0.02;

/// Second `|ζ|` peak range.
pub const ZETA_SECOND_PEAK: (f64, f64) = (0.3, 0.5);

/// Spread of `S_ent / ln N` peak heights across `N`.
pub const ENTROPY_HEIGHT_SPREAD: f64 = 0.10;

/// Rotated-basis plateau height `0.5 ± 0.05`.
pub const PLATEAU_HEIGHT: (f64, f64) = (0.5, 0.05);

/// Rise-time increments under `N` doubling, relative spread.
pub const RISE_SPACING: f64 = 0.25;

/// Hang-time ratio under `N` doubling: `2 ± 25 %`.
pub const HANG_RATIO: (f64, f64) = (2.0, 0.25);

/// `|<σ1>|`, `|<τ1>|` on the plateau.
pub const PLATEAU_POLARIZATION: f64 = 0.1;

/// `|ζ'|` level the tilted run must reach within the rise window.
pub const TILTED_RISE_LEVEL: f64 = 0.3;

/// Largest late-time change of the standing pulse profile.
pub const STANDING_RESIDUAL: f64 = 0.01;

/// Fields ahead of the light front, and the `τ = -σ` mirror defect.
pub const PULSE_EXACT: f64 = 1e-8;

/// Observed convergence order of the upwind scheme against its design
/// order 1.
pub const PULSE_ORDER: (f64, f64) = (1.0, 0.1);

/// Bloch norms may exceed 1 by this much on the pulse grid.
pub const PULSE_BLOCH: f64 = 1e-6;
