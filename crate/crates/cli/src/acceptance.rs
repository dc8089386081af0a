//! The acceptance suite: eleven criteria, each a list of keyed sub-checks.

use std::f64::consts::{FRAC_PI_2, LN_2};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use polex::coupling::{build_hamiltonian, exchange_length, rescaled_coupling, Basis, PhysicalInputs};
use polex::meanfield::{crossing_report, log_scaling_fit, mf_evolve, CrossingReport, MeanFieldState, MfParams, MfSeries};
use polex::pulse::{
    antisymmetry_defect, beyond_front, pulse_step, refinement_errors, standing_residual, PulseGrid, PulseParams,
};
use polex::quantum::{
    analyze_break_time, entanglement_entropy, fig3_series, fig7_series, first_reach, observe, oracle_deviation,
    plateau_analysis, reduced_density, BreakTimeConfig, BreakTimeRun, EvolutionPlan, Generator, ObservableSeries,
    Peak, PlateauConfig, PlateauRun,
};
use polex::sparse::CsrMatrix;
use polex::spinspace::{collective_op, Beam, BeamSize, DickeIndex, OpKind, QuantumState};
use polex::C64;

use crate::error::{CliError, Context};
use crate::tolerances as tol;

/// Sub-checks the model misses at the stated tolerances. The acceptance
/// test requires each of these to keep failing and every other one to pass.
pub const KNOWN_FAILURES: &[&str] = &["5c", "6a", "7a", "8b", "9b"];

pub const BREAK_TIME_N: [usize; 5] = [100, 200, 400, 800, 1600];
pub const PLATEAU_N: [usize; 3] = [15, 30, 60];
pub const VARIANCE_N: [usize; 4] = [8, 16, 32, 64];
pub const FIG2_ANGLES: [f64; 4] = [1e-1, 1e-3, 1e-5, 1e-7];

#[derive(Clone, Debug, PartialEq)]
pub struct SubCheck {
    pub key: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<SubCheck>,
    pub elapsed_s: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One summary line.
    pub fn line(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{} {} ({})", c.key, if c.passed { "pass" } else { "FAIL" }, c.detail))
            .collect();
        format!(
            "criterion {:>2} {}  {} [{:.1}s]: {}",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed_s,
            parts.join("; ")
        )
    }
}

fn check(key: &'static str, passed: bool, detail: String) -> SubCheck {
    SubCheck { key, passed, detail }
}

/// A check whose computation itself failed.
fn errored(key: &'static str, e: &CliError) -> SubCheck {
    check(key, false, format!("error: {e}"))
}

fn timed(id: u8, title: &'static str, f: impl FnOnce() -> Vec<SubCheck>) -> Criterion {
    let start = Instant::now();
    let checks = f();
    Criterion { id, title, checks, elapsed_s: start.elapsed().as_secs_f64() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `(max - min) / mean`.
fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / (v.iter().sum::<f64>() / v.len() as f64)
}

/// Relative distance from `t` to the nearest peak.
fn nearest_peak(peaks: &[Peak], t: f64) -> f64 {
    peaks.iter().map(|p| rel(p.t, t)).fold(f64::INFINITY, f64::min)
}

// 1

pub fn rate_formula() -> Criterion {
    timed(1, "rate formula", || {
        let unit = PhysicalInputs { omega1: 1.0, omega2: 1.0, n_e: 0.0, rho: 1.0, i1: 1.0, i2: 1.0 };
        let base = exchange_length(&unit);
        let four = exchange_length(&PhysicalInputs { i1: 4.0, i2: 4.0, ..unit });
        let intensity = rel(four / base, 4.0);
        let mut homogeneity: f64 = 0.0;
        for (w1, w2, want) in [(2.0, 2.0, 2.0), (3.0, 12.0, 6.0), (4.0, 0.25, 1.0), (0.5, 0.5, 0.5)] {
            let got = exchange_length(&PhysicalInputs { omega1: w1, omega2: w2, ..unit }) / base;
            homogeneity = homogeneity.max(rel(got, want));
        }
        vec![
            check("1a", base == 1.8e-7, format!("L^-1 = {base:e} cm^-1")),
            check("1b", intensity <= tol::SCALING_REL, format!("intensity x4 rel err {intensity:.1e}")),
            check("1c", homogeneity <= tol::SCALING_REL, format!("sqrt(w1 w2) rel err {homogeneity:.1e}")),
        ]
    })
}

// 2

fn turnover_depth(series: &MfSeries, report: &CrossingReport) -> f64 {
    // troughs lie between odd and even crossings
    report
        .crossings
        .chunks_exact(2)
        .map(|w| {
            let lo = series
                .t
                .iter()
                .zip(&series.states)
                .filter(|(t, _)| **t > w[0] && **t < w[1])
                .map(|(_, s)| s.sigma3)
                .fold(f64::INFINITY, f64::min);
            (lo + 1.0).abs()
        })
        .fold(0.0, f64::max)
}

pub fn mft_scaling() -> Criterion {
    timed(2, "mean-field instability scaling", || {
        let runs: Result<Vec<(f64, MfSeries, CrossingReport)>, CliError> = FIG2_ANGLES
            .par_iter()
            .map(|&x| {
                let p = MfParams::from_one_minus_cos(x).context(|| "angle".into())?;
                let s = mf_evolve(MeanFieldState::opposed(), p, 30.0, 1e-11).context(|| format!("run {x:e}"))?;
                let r = crossing_report(&s).context(|| format!("crossings {x:e}"))?;
                Ok((x, s, r))
            })
            .collect();
        let runs = match runs {
            Ok(r) => r,
            Err(e) => return ["2a", "2b", "2c"].map(|k| errored(k, &e)).to_vec(),
        };
        let pts: Vec<(f64, f64)> = runs.iter().map(|(x, _, r)| (*x, r.first_crossing_time)).collect();
        let fit = match log_scaling_fit(&pts) {
            Ok(f) => {
                let frac = f.residual / f.mean_spacing;
                check(
                    "2a",
                    frac < tol::FIT_RESIDUAL_FRACTION,
                    format!("residual {:.1e} = {:.2}% of spacing {:.4}", f.residual, 100.0 * frac, f.mean_spacing),
                )
            }
            Err(e) => check("2a", false, format!("fit: {e}")),
        };
        let enough = runs.iter().all(|(_, _, r)| r.crossings.len() >= 3);
        let depth = runs.iter().map(|(_, s, r)| turnover_depth(s, r)).fold(0.0, f64::max);
        let period_spread = runs
            .iter()
            .map(|(_, _, r)| {
                let spans: Vec<f64> = r.crossings.windows(3).map(|w| w[2] - w[0]).collect();
                if spans.is_empty() {
                    f64::INFINITY
                } else {
                    spread(&spans)
                }
            })
            .fold(0.0, f64::max);
        vec![
            fit,
            check("2b", enough && depth <= tol::MF_TURNOVER, format!("troughs within {depth:.1e} of -1")),
            check("2c", enough && period_spread <= tol::MF_PERIODICITY, format!("period spread {period_spread:.1e}")),
        ]
    })
}

// 3

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

pub fn mft_conservation() -> Criterion {
    timed(3, "mean-field conservation", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2025);
        let cases: Vec<(MfParams, MeanFieldState)> = (0..10)
            .map(|_| {
                let theta = rng.random_range(0.0..std::f64::consts::PI);
                let (n1, n2) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
                let init = MeanFieldState::from_vectors(random_unit(&mut rng), random_unit(&mut rng));
                (MfParams { theta, n1, n2 }, init)
            })
            .collect();
        let drifts: Result<Vec<(f64, f64, f64)>, CliError> = cases
            .par_iter()
            .map(|(p, init)| {
                let s = mf_evolve(*init, *p, 100.0, 1e-12).context(|| format!("random run {p:?}"))?;
                Ok(s.conservation_drift())
            })
            .collect();
        match drifts {
            Ok(d) => {
                let norm = d.iter().map(|x| x.0.max(x.1)).fold(0.0, f64::max);
                let energy = d.iter().map(|x| x.2).fold(0.0, f64::max);
                vec![
                    check("3a", norm <= tol::MF_CONSERVATION, format!("Bloch norm drift {norm:.1e}")),
                    check("3b", energy <= tol::MF_CONSERVATION, format!("energy drift {energy:.1e}")),
                ]
            }
            Err(e) => vec![errored("3a", &e), errored("3b", &e)],
        }
    })
}

// 4

pub fn quantum_oracle() -> Criterion {
    timed(4, "quantum oracle", || {
        let cases: Vec<(usize, f64, Basis)> = [1, 2, 3]
            .into_iter()
            .flat_map(|n| [0.0, 0.2, FRAC_PI_2].into_iter().flat_map(move |th| [Basis::Plane, Basis::Circular].map(|b| (n, th, b))))
            .collect();
        let worst: Result<Vec<f64>, CliError> = cases
            .par_iter()
            .map(|&(n, th, b)| oracle_deviation(n, n, b, th, 5.0, 0.05).context(|| format!("N = {n}, {b}, θ = {th}")))
            .collect();
        match worst {
            Ok(d) => {
                let m = d.iter().copied().fold(0.0, f64::max);
                vec![check("4a", m <= tol::ORACLE, format!("max deviation {m:.1e} over {} cases", d.len()))]
            }
            Err(e) => vec![errored("4a", &e)],
        }
    })
}

// 5-7, 9

/// Break-time protocol runs, ascending in `N`.
pub fn break_time_runs(n_list: &[usize]) -> Result<Vec<BreakTimeRun>, CliError> {
    let cfg = BreakTimeConfig::default();
    n_list
        .par_iter()
        .map(|&n| {
            let s = fig3_series(n, cfg.t_end, cfg.dt, cfg.tol).context(|| format!("break-time run N = {n}"))?;
            analyze_break_time(n, s, &cfg).context(|| format!("break-time analysis N = {n}"))
        })
        .collect()
}

pub fn break_time(runs: &Result<Vec<BreakTimeRun>, CliError>) -> Criterion {
    timed(5, "break time log N", || {
        let runs = match runs {
            Ok(r) => r,
            Err(e) => return ["5a", "5b", "5c"].map(|k| errored(k, e)).to_vec(),
        };
        let deepest = runs.iter().map(|r| r.min_sigma3 + 1.0).fold(0.0, f64::max);
        let inc: Vec<f64> = runs.windows(2).map(|w| w[1].first_crossing - w[0].first_crossing).collect();
        let inc_spread = spread(&inc);
        let last = runs.last().expect("non-empty N list");
        let ratio = last.hold_time / last.transition_time;
        vec![
            check("5a", deepest <= tol::QUANTUM_TURNOVER, format!("min <σ3> within {deepest:.3} of -1")),
            check(
                "5b",
                inc_spread <= tol::INCREMENT_SPREAD,
                format!("increments {inc:.4?}, spread {:.1}%", 100.0 * inc_spread),
            ),
            check(
                "5c",
                ratio > tol::HOLD_RATIO,
                format!("N = {}: hold {:.3} / transition {:.3} = {ratio:.2}", last.n, last.hold_time, last.transition_time),
            ),
        ]
    })
}

/// Worst relative distance between the first two crossings and the nearest
/// peak of `peaks(run)`.
fn crossing_alignment(runs: &[BreakTimeRun], peaks: impl Fn(&BreakTimeRun) -> &[Peak]) -> f64 {
    runs.iter()
        .flat_map(|r| r.crossings.iter().take(2).map(|&c| nearest_peak(peaks(r), c)).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

pub fn zeta_diagnostics(runs: &Result<Vec<BreakTimeRun>, CliError>) -> Criterion {
    timed(6, "zeta diagnostics", || {
        let runs = match runs {
            Ok(r) => r,
            Err(e) => return ["6a", "6b"].map(|k| errored(k, e)).to_vec(),
        };
        let align = crossing_alignment(runs, |r| &r.zeta_peaks);
        let seconds: Vec<f64> = runs.iter().map(|r| r.zeta_peaks.get(1).map_or(f64::NAN, |p| p.value)).collect();
        let (lo, hi) = tol::ZETA_SECOND_PEAK;
        vec![
            check("6a", align <= tol::PEAK_ALIGNMENT, format!("|ζ| peaks within {:.2}% of crossings", 100.0 * align)),
            check(
                "6b",
                seconds.iter().all(|v| (lo..=hi).contains(v)),
                format!("second |ζ| peaks {seconds:.3?}"),
            ),
        ]
    })
}

fn cat_entropy() -> Result<f64, CliError> {
    let b = BeamSize::new(4).context(|| "beam".into())?;
    let up = |s: &QuantumState| s.amplitudes().to_vec();
    let a = up(&QuantumState::product(b, DickeIndex::top(b), b, DickeIndex::bottom(b)));
    let c = up(&QuantumState::product(b, DickeIndex::bottom(b), b, DickeIndex::top(b)));
    let amps: Vec<C64> = a.iter().zip(&c).map(|(x, y)| x + y).collect();
    let cat = QuantumState::normalized(b, b, amps).context(|| "cat state".into())?;
    Ok(entanglement_entropy(&reduced_density(&cat, Beam::A)))
}

pub fn entropy(runs: &Result<Vec<BreakTimeRun>, CliError>) -> Criterion {
    timed(7, "entanglement entropy", || {
        let cat = match cat_entropy() {
            Ok(s) => check("7c", s == LN_2, format!("cat S = {s:.17}")),
            Err(e) => errored("7c", &e),
        };
        let runs = match runs {
            Ok(r) => r,
            Err(e) => return vec![errored("7a", e), errored("7b", e), cat],
        };
        let align = runs
            .iter()
            .flat_map(|r| r.zeta_peaks.iter().take(2).map(|z| nearest_peak(&r.s_ent_peaks, z.t)).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        let heights: Vec<f64> = runs
            .iter()
            .map(|r| r.s_ent_peaks.first().map_or(f64::NAN, |p| p.value / (r.n as f64).ln()))
            .collect();
        let h_spread = spread(&heights);
        vec![
            check("7a", align <= tol::PEAK_ALIGNMENT, format!("S_ent peaks within {:.2}% of |ζ| peaks", 100.0 * align)),
            check(
                "7b",
                h_spread <= tol::ENTROPY_HEIGHT_SPREAD,
                format!("S_ent/ln N {heights:.3?}, spread {:.1}%", 100.0 * h_spread),
            ),
            cat,
        ]
    })
}

pub fn variance(runs: &Result<Vec<BreakTimeRun>, CliError>) -> Criterion {
    timed(9, "variance measure", || {
        let runs = match runs {
            Ok(r) => r,
            Err(e) => return ["9a", "9b", "9c"].map(|k| errored(k, e)).to_vec(),
        };
        let start = runs.iter().map(|r| r.series.var_ndiff[0].abs()).fold(0.0, f64::max);
        let align = crossing_alignment(runs, |r| &r.var_peaks);
        let heights: Vec<f64> = runs.iter().map(|r| r.var_peaks.first().map_or(f64::NAN, |p| p.value)).collect();
        let monotone = heights.windows(2).all(|w| w[1] > w[0]);
        let pts: Vec<(f64, f64)> = runs.iter().zip(&heights).map(|(r, h)| ((r.n as f64).ln(), h.ln())).collect();
        let (exponent, _) = polex::meanfield::linear_fit(&pts);
        vec![
            check("9a", start <= tol::EXACT, format!("Var at t = 0: {start:.1e}")),
            check("9b", align <= tol::PEAK_ALIGNMENT, format!("Var peaks within {:.2}% of crossings", 100.0 * align)),
            check("9c", monotone, format!("first peaks {heights:.1?}, growth exponent {exponent:.3}")),
        ]
    })
}

// 8

pub struct PlateauData {
    pub aligned: Vec<PlateauRun>,
    /// `(N, series)` at cos θ = 0.96.
    pub tilted: Vec<(usize, ObservableSeries)>,
}

pub fn plateau_data() -> Result<PlateauData, CliError> {
    let cfg = PlateauConfig::default();
    let (aligned, tilted) = rayon::join(
        || plateau_analysis(1.0, &PLATEAU_N, &cfg).context(|| "plateau runs at cos θ = 1".into()),
        || {
            PLATEAU_N
                .par_iter()
                .map(|&n| {
                    fig7_series(n, 0.96, cfg.t_end(n), cfg.dt, cfg.tol)
                        .map(|s| (n, s))
                        .context(|| format!("tilted run N = {n}"))
                })
                .collect::<Result<Vec<_>, CliError>>()
        },
    );
    Ok(PlateauData { aligned: aligned?, tilted: tilted? })
}

pub fn plateau(data: &Result<PlateauData, CliError>) -> Criterion {
    timed(8, "rotated-basis plateau", || {
        let d = match data {
            Ok(d) => d,
            Err(e) => return ["8a", "8b", "8c", "8d", "8e"].map(|k| errored(k, e)).to_vec(),
        };
        let runs = &d.aligned;
        let heights: Vec<f64> = runs.iter().map(|r| r.height).collect();
        let (h0, dh) = tol::PLATEAU_HEIGHT;
        let rises: Vec<f64> = runs.iter().map(|r| r.rise_time).collect();
        let steps: Vec<f64> = rises.windows(2).map(|w| w[1] - w[0]).collect();
        let step_ratio = steps.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()).fold(0.0, f64::max);
        let hangs: Vec<f64> = runs.iter().map(|r| r.hang_time).collect();
        let ratios: Vec<f64> = hangs.windows(2).map(|w| w[1] / w[0]).collect();
        let (r0, dr) = tol::HANG_RATIO;
        let pol = runs.iter().map(|r| r.max_abs_sigma1.max(r.max_abs_tau1)).fold(0.0, f64::max);
        let tilted: Vec<(f64, f64)> = d
            .tilted
            .iter()
            .zip(runs)
            .map(|((_, s), r)| {
                let abs: Vec<f64> = s.zeta_rot.iter().map(|z| z.abs()).collect();
                (first_reach(&s.t, &abs, tol::TILTED_RISE_LEVEL).unwrap_or(f64::INFINITY), r.rise_time)
            })
            .collect();
        vec![
            check("8a", heights.iter().all(|h| (h - h0).abs() <= dh), format!("heights {heights:.4?}")),
            check(
                "8b",
                step_ratio <= tol::RISE_SPACING,
                format!("rise times {rises:.3?}, increments {steps:.3?}"),
            ),
            check(
                "8c",
                ratios.iter().all(|r| (r - r0).abs() <= dr * r0),
                format!("hang times {hangs:.2?}, ratios {ratios:.2?}"),
            ),
            check("8d", pol < tol::PLATEAU_POLARIZATION, format!("max |<σ1>|, |<τ1>| on plateau {pol:.1e}")),
            check(
                "8e",
                tilted.iter().all(|(t, w)| t <= w),
                format!("cos θ = 0.96 reaches {} at {:.3?} (windows {:.3?})", tol::TILTED_RISE_LEVEL, tilted.iter().map(|p| p.0).collect::<Vec<_>>(), rises),
            ),
        ]
    })
}

// 10

pub fn pulse() -> Criterion {
    timed(10, "pulse standing pattern", || {
        let result = (|| -> Result<Vec<SubCheck>, CliError> {
            let params = PulseParams::new(0.99).context(|| "pulse parameters".into())?;
            let mut grid = PulseGrid::with_courant(0.5, 251, 1.0).context(|| "pulse grid".into())?;
            let every = (0.1 / grid.dt).round() as usize;
            let mut snaps = vec![grid.snapshot()];
            let (mut front, mut mirror): (f64, f64) = (0.0, 0.0);
            let steps = (1.5 / grid.dt).round() as usize;
            for k in 1..=steps {
                pulse_step(&mut grid, &params).context(|| "pulse step".into())?;
                front = front.max(beyond_front(&grid, 0.0));
                mirror = mirror.max(antisymmetry_defect(&grid));
                if k % every == 0 {
                    snaps.push(grid.snapshot());
                }
            }
            let residual = standing_residual(&snaps, 0.6).context(|| "standing residual".into())?;
            let errs = refinement_errors(&params, 0.5, 101, 4, 0.5, 1.2).context(|| "refinement".into())?;
            let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].1 / w[1].1).log2()).collect();
            let (p0, dp) = tol::PULSE_ORDER;
            Ok(vec![
                check("10a", residual < tol::STANDING_RESIDUAL, format!("residual over t >= 0.6: {residual:.1e}")),
                check("10b", front <= tol::PULSE_EXACT, format!("beyond light front {front:.1e}")),
                check("10c", mirror <= tol::PULSE_EXACT, format!("τ = -σ defect {mirror:.1e}")),
                check(
                    "10d",
                    orders.iter().all(|p| (p - p0).abs() <= dp),
                    format!("observed orders {orders:.3?} at Courant 0.5"),
                ),
            ])
        })();
        result.unwrap_or_else(|e| ["10a", "10b", "10c", "10d"].map(|k| errored(k, &e)).to_vec())
    })
}

// 11

fn random_state(rng: &mut ChaCha8Rng, na: usize, nb: usize) -> Result<QuantumState, CliError> {
    let (a, b) = (BeamSize::new(na).context(|| "beam".into())?, BeamSize::new(nb).context(|| "beam".into())?);
    let amps = (0..a.dim() * b.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    QuantumState::normalized(a, b, amps.collect()).context(|| "random state".into())
}

fn evolve_random(
    rng: &mut ChaCha8Rng,
    basis: Basis,
    theta: f64,
    na: usize,
    nb: usize,
) -> Result<ObservableSeries, CliError> {
    let state = random_state(rng, na, nb)?;
    let h = build_hamiltonian(basis, theta, state.n_a(), state.n_b(), rescaled_coupling(state.n_a(), state.n_b()))
        .context(|| "hamiltonian".into())?;
    let plan = EvolutionPlan::uniform(Generator::Full(&h), 5.0, 0.25, 1e-10).context(|| "plan".into())?;
    observe(&state, &plan).context(|| format!("{basis} θ = {theta} N = ({na}, {nb})"))
}

fn identity_defects(n: usize) -> (f64, f64) {
    let b = BeamSize::new(n).expect("n >= 1");
    let op = |k| collective_op(b, k).matrix;
    let (s1, s2, s3) = (op(OpKind::S1), op(OpKind::S2), op(OpKind::S3));
    let one = C64::new(1.0, 0.0);
    let scale = (n * (n + 2)) as f64;
    let casimir = CsrMatrix::linear_combination(&[(one, &s1.mul(&s1)), (one, &s2.mul(&s2)), (one, &s3.mul(&s3))]);
    let cas = casimir.max_abs_diff(&CsrMatrix::identity(b.dim()).scale(C64::new(scale, 0.0))) / scale;
    let comm = |x: &CsrMatrix, y: &CsrMatrix, z: &CsrMatrix| {
        let c = CsrMatrix::linear_combination(&[(one, &x.mul(y)), (-one, &y.mul(x))]);
        c.max_abs_diff(&z.scale(C64::new(0.0, 2.0))) / scale
    };
    let com = comm(&s1, &s2, &s3).max(comm(&s2, &s3, &s1)).max(comm(&s3, &s1, &s2));
    (cas, com)
}

pub fn invariants() -> Criterion {
    timed(11, "structural invariants", || {
        let mut herm: f64 = 0.0;
        for basis in [Basis::Plane, Basis::Circular] {
            for theta in [0.0, 0.2, 1.0, FRAC_PI_2] {
                for (na, nb) in [(1, 1), (3, 5), (16, 16), (40, 40)] {
                    let (a, b) = (BeamSize::new(na).expect("n >= 1"), BeamSize::new(nb).expect("n >= 1"));
                    let h = build_hamiltonian(basis, theta, a, b, rescaled_coupling(a, b)).expect("valid inputs");
                    herm = herm.max(h.matrix().hermiticity_defect());
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dynamics = (|| -> Result<(f64, f64, f64), CliError> {
            let conserving = evolve_random(&mut rng, Basis::Circular, 0.0, 6, 5)?;
            let total: Vec<f64> =
                conserving.sigma3.iter().zip(&conserving.tau3).map(|(s, t)| 6.0 * s + 5.0 * t).collect();
            let charge = total.iter().map(|m| (m - total[0]).abs()).fold(0.0, f64::max);
            let mut norm = conserving.norm_drift();
            let mut energy = conserving.energy_drift();
            for (basis, theta) in [(Basis::Plane, 0.3), (Basis::Circular, 1.1)] {
                let s = evolve_random(&mut rng, basis, theta, 10, 10)?;
                norm = norm.max(s.norm_drift());
                energy = energy.max(s.energy_drift());
            }
            Ok((charge, norm, energy))
        })();
        let (cas, com) = (1..=16).map(identity_defects).fold((0.0, 0.0), |(a, b), (c, d)| (f64::max(a, c), f64::max(b, d)));
        let mut out = vec![check("11a", herm <= tol::EXACT, format!("Hermiticity defect {herm:.1e}"))];
        match dynamics {
            Ok((charge, norm, energy)) => out.extend([
                check("11b", charge <= tol::CHARGE, format!("total m drift at θ = 0: {charge:.1e}")),
                check("11c", norm <= tol::UNITARITY, format!("norm drift {norm:.1e}")),
                check("11d", energy <= tol::ENERGY_DRIFT, format!("relative energy drift {energy:.1e}")),
            ]),
            Err(e) => out.extend(["11b", "11c", "11d"].map(|k| errored(k, &e))),
        }
        out.push(check("11e", cas <= tol::EXACT, format!("Casimir defect / N(N+2) {cas:.1e} for N <= 16")));
        out.push(check("11f", com <= tol::EXACT, format!("commutator defect / N(N+2) {com:.1e} for N <= 16")));
        out
    })
}

/// Every criterion, ordered by id. The long quantum protocols run
/// concurrently.
pub fn run_all() -> Vec<Criterion> {
    let clocked = |f: &(dyn Fn() -> _ + Sync)| {
        let start = Instant::now();
        (f(), start.elapsed().as_secs_f64())
    };
    let (((fig3, t3), (var, t9)), (plat, t8)) = rayon::join(
        || {
            rayon::join(
                || clocked(&|| break_time_runs(&BREAK_TIME_N)),
                || clocked(&|| break_time_runs(&VARIANCE_N)),
            )
        },
        || {
            let start = Instant::now();
            (plateau_data(), start.elapsed().as_secs_f64())
        },
    );
    // shared protocol time is charged to every criterion reading it
    let charge = |mut c: Criterion, t: f64| {
        c.elapsed_s += t;
        c
    };
    let mut out = vec![
        rate_formula(),
        mft_scaling(),
        mft_conservation(),
        quantum_oracle(),
        charge(break_time(&fig3), t3),
        charge(zeta_diagnostics(&fig3), t3),
        charge(entropy(&fig3), t3),
        charge(plateau(&plat), t8),
        charge(variance(&var), t9),
        pulse(),
        invariants(),
    ];
    out.sort_by_key(|c| c.id);
    out
}

/// Sub-checks whose outcome disagrees with [`KNOWN_FAILURES`]: unexpected
/// failures and known failures that now pass.
pub fn surprises(criteria: &[Criterion]) -> Vec<String> {
    criteria
        .iter()
        .flat_map(|c| &c.checks)
        .filter(|s| s.passed == KNOWN_FAILURES.contains(&s.key))
        .map(|s| {
            if s.passed {
                format!("{} now passes; remove it from the known failures ({})", s.key, s.detail)
            } else {
                format!("{} failed: {}", s.key, s.detail)
            }
        })
        .collect()
}
