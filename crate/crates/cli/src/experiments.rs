//! One function per named experiment. Each writes its series and a
//! `summary.csv` into the run directory and records inline checks.

use rayon::prelude::*;

use polex::coupling::{exchange_length, physical_time_s, Basis, CouplingConstants, PhysicalInputs};
use polex::meanfield::{crossing_report, log_scaling_fit, mf_evolve, MeanFieldState, MfParams};
use polex::pulse::{antisymmetry_defect, run_to_steady, standing_residual, write_snapshots, PulseGrid, PulseParams};
use polex::quantum::{
    analyze_break_time, analyze_plateau, fig3_series, fig7_series, first_reach, oracle_deviation,
    AnalysisThresholds, BreakTimeConfig, BreakTimeRun, ObservableSeries, Peak,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Context};
use crate::manifest::{num, Recorder, RunManifest};
use crate::tolerances as tol;

/// Run `f` on a rayon pool of `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Output(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Run one experiment and write its outputs and manifest.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    with_workers(config.usize("workers"), || run_here(config))?
}

/// [`run`] on the current rayon pool.
pub fn run_here(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let mut rec = Recorder::new(&config.resolved_output_dir())?;
    match config.experiment {
        Experiment::Fig2MftAngles => fig2(config, &mut rec)?,
        Experiment::Fig3Breaktime | Experiment::Fig4Zeta | Experiment::Fig5Entropy => break_time(config, &mut rec)?,
        Experiment::Fig6ZetaRot => rotated_rise(config, &mut rec)?,
        Experiment::Fig7Plateau => plateau(config, &mut rec)?,
        Experiment::Fig8Pulse => pulse(config, &mut rec)?,
        Experiment::RateCalc => rate(config, &mut rec)?,
        Experiment::OracleCheck => oracle(config, &mut rec)?,
    }
    rec.finish(config)
}

/// Scalar name, suffixed with `tag` when the run covers several points.
fn key(base: &str, tag: &str, single: bool) -> String {
    if single {
        base.to_string()
    } else {
        format!("{base}_{tag}")
    }
}

fn nth_or_nan(v: &[f64], i: usize) -> f64 {
    v.get(i).copied().unwrap_or(f64::NAN)
}

fn peak_or_nan(p: &[Peak], i: usize) -> (f64, f64) {
    p.get(i).map_or((f64::NAN, f64::NAN), |p| (p.t, p.value))
}

fn fig2(c: &ExperimentConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let xs = c.f64_list("one_minus_cos_theta");
    let (t_end, tol_ode) = (c.f64("t_end"), c.f64("tol"));
    let runs = xs
        .par_iter()
        .map(|&x| {
            let params = MfParams::from_one_minus_cos(x).context(|| format!("1 - cos θ = {x:e}"))?;
            let series = mf_evolve(MeanFieldState::opposed(), params, t_end, tol_ode)
                .context(|| format!("mean-field run at 1 - cos θ = {x:e}"))?;
            let report = crossing_report(&series).context(|| format!("crossings at 1 - cos θ = {x:e}"))?;
            Ok((x, series, report))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let single = runs.len() == 1;
    let mut rows = Vec::new();
    for (i, (x, series, report)) in runs.iter().enumerate() {
        rec.write_with(&format!("mft_{i:02}.csv"), |w| series.write_csv(w))?;
        let (da, db, de) = series.conservation_drift();
        rec.check_le(format!("bloch_norm_drift[{x:e}]"), da.max(db), tol::MF_CONSERVATION);
        rec.check_le(format!("energy_drift[{x:e}]"), de, tol::MF_CONSERVATION);
        let first = report.first_crossing_time;
        let min_s3 = series
            .t
            .iter()
            .zip(&series.states)
            .filter(|(t, _)| **t > first)
            .map(|(_, s)| s.sigma3)
            .fold(f64::INFINITY, f64::min);
        let period = report.period.unwrap_or(f64::NAN);
        let tag = format!("x{i}");
        rec.scalar(key("first_crossing", &tag, single), first);
        rec.scalar(key("period", &tag, single), period);
        rec.scalar(key("min_sigma3", &tag, single), min_s3);
        rec.report(format!("1 - cos θ = {x:e}: first crossing t = {first:.6}"));
        rows.push(vec![num(*x), num(first), num(period), num(min_s3), report.crossings.len().to_string()]);
    }
    rec.table("summary.csv", &["one_minus_cos_theta", "first_crossing", "period", "min_sigma3", "crossings"], &rows)?;
    if runs.len() >= 3 {
        let pts: Vec<(f64, f64)> = runs.iter().map(|(x, _, r)| (*x, r.first_crossing_time)).collect();
        match log_scaling_fit(&pts) {
            Ok(fit) => {
                rec.scalar("fit_slope", fit.slope);
                rec.scalar("fit_intercept", fit.intercept);
                rec.scalar("fit_residual", fit.residual);
                rec.scalar("fit_mean_spacing", fit.mean_spacing);
                rec.check_le("fit_residual_fraction", fit.residual / fit.mean_spacing, tol::FIT_RESIDUAL_FRACTION);
                rec.report(format!("t1 = {:.6} * (-ln(1 - cos θ)) + {:.6}", fit.slope, fit.intercept));
            }
            Err(e) => rec.warn(format!("no scaling fit: {e}")),
        }
    }
    Ok(())
}

fn quantum_checks(rec: &mut Recorder, label: &str, s: &ObservableSeries) {
    rec.check_le(format!("norm_drift[{label}]"), s.norm_drift(), tol::UNITARITY);
    rec.check_le(format!("energy_drift[{label}]"), s.energy_drift(), tol::ENERGY_DRIFT);
}

fn write_series(rec: &mut Recorder, n: usize, s: &ObservableSeries) -> Result<(), CliError> {
    rec.write_with(&format!("series_N{n:05}.csv"), |w| s.write_csv(w))
}

fn break_time(c: &ExperimentConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let n_list = c.usize_list("n_list");
    let cfg = BreakTimeConfig {
        t_end: c.f64("t_end"),
        dt: c.f64("dt"),
        tol: c.f64("tol"),
        thresholds: AnalysisThresholds { hold_band: c.f64("hold_band"), ..AnalysisThresholds::default() },
        peak_prominence: c.f64("peak_prominence"),
    };
    let runs: Vec<BreakTimeRun> = n_list
        .par_iter()
        .map(|&n| {
            let series = fig3_series(n, cfg.t_end, cfg.dt, cfg.tol).context(|| format!("break-time run N = {n}"))?;
            analyze_break_time(n, series, &cfg).context(|| format!("break-time analysis N = {n}"))
        })
        .collect::<Result<_, CliError>>()?;
    let single = runs.len() == 1;
    let mut rows = Vec::new();
    for r in &runs {
        write_series(rec, r.n, &r.series)?;
        quantum_checks(rec, &format!("N={}", r.n), &r.series);
        let tag = format!("N{}", r.n);
        let mut scalar = |k: &str, v: f64| rec.scalar(key(k, &tag, single), v);
        let second = nth_or_nan(&r.crossings, 1);
        let (zt, zv) = peak_or_nan(&r.zeta_peaks, 1);
        let ln_n = (r.n as f64).ln();
        scalar("first_crossing", r.first_crossing);
        scalar("second_crossing", second);
        scalar("min_sigma3", r.min_sigma3);
        scalar("hold_time", r.hold_time);
        scalar("transition_time", r.transition_time);
        scalar("peak_zeta", r.zeta_peaks.iter().map(|p| p.value).fold(f64::NAN, f64::max));
        scalar("peak_s_ent", r.s_ent_peaks.iter().map(|p| p.value).fold(f64::NAN, f64::max));
        scalar("peak_var_ndiff", r.var_peaks.iter().map(|p| p.value).fold(f64::NAN, f64::max));
        let row = match c.experiment {
            Experiment::Fig4Zeta => {
                let (t1, v1) = peak_or_nan(&r.zeta_peaks, 0);
                vec![r.n.to_string(), num(r.first_crossing), num(second), num(t1), num(v1), num(zt), num(zv)]
            }
            Experiment::Fig5Entropy => {
                let (t1, v1) = peak_or_nan(&r.s_ent_peaks, 0);
                let (t2, v2) = peak_or_nan(&r.s_ent_peaks, 1);
                let (vt, vv) = peak_or_nan(&r.var_peaks, 0);
                vec![
                    r.n.to_string(),
                    num(t1),
                    num(v1),
                    num(v1 / ln_n),
                    num(t2),
                    num(v2),
                    num(v2 / ln_n),
                    num(vt),
                    num(vv),
                ]
            }
            _ => vec![
                r.n.to_string(),
                num(r.first_crossing),
                num(second),
                num(r.min_sigma3),
                num(r.hold_time),
                num(r.transition_time),
            ],
        };
        rows.push(row);
        rec.report(format!("N = {}: first crossing t = {:.4}", r.n, r.first_crossing));
    }
    let header: &[&str] = match c.experiment {
        Experiment::Fig4Zeta => {
            &["n", "crossing_1", "crossing_2", "zeta_peak_1_t", "zeta_peak_1", "zeta_peak_2_t", "zeta_peak_2"]
        }
        Experiment::Fig5Entropy => &[
            "n",
            "s_ent_peak_1_t",
            "s_ent_peak_1",
            "s_ent_peak_1_over_ln_n",
            "s_ent_peak_2_t",
            "s_ent_peak_2",
            "s_ent_peak_2_over_ln_n",
            "var_peak_1_t",
            "var_peak_1",
        ],
        _ => &["n", "first_crossing", "second_crossing", "min_sigma3", "hold_time", "transition_time"],
    };
    rec.table("summary.csv", header, &rows)?;
    if runs.len() >= 2 {
        let pts: Vec<(f64, f64)> = runs.iter().map(|r| ((r.n as f64).ln(), r.first_crossing)).collect();
        let (slope, intercept) = polex::meanfield::linear_fit(&pts);
        rec.scalar("fit_slope_per_ln_n", slope);
        rec.scalar("fit_intercept", intercept);
        let mut by_n: Vec<(usize, f64)> = runs.iter().map(|r| (r.n, r.first_crossing)).collect();
        by_n.sort_by_key(|p| p.0);
        let min_step = by_n.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::INFINITY, f64::min);
        rec.check("crossing_increases_with_n", min_step, "> 0", min_step > 0.0);
        rec.report(format!("t1 = {slope:.4} ln N + {intercept:.4}"));
    }
    Ok(())
}

fn cos_to_theta(cos_theta: f64) -> Result<f64, CliError> {
    if !(-1.0..=1.0).contains(&cos_theta) {
        return Err(CliError::Config(format!("cos_theta = {cos_theta} outside [-1, 1]")));
    }
    Ok(cos_theta.acos())
}

fn rotated_rise(c: &ExperimentConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let n_list = c.usize_list("n_list");
    let cos = c.f64("cos_theta");
    cos_to_theta(cos)?;
    let level = c.f64("rise_level");
    let (per_n, offset, dt, tol_k) = (c.f64("t_end_per_n"), c.f64("t_end_offset"), c.f64("dt"), c.f64("tol"));
    let runs = n_list
        .par_iter()
        .map(|&n| {
            let t_end = per_n * n as f64 + offset;
            fig7_series(n, cos, t_end, dt, tol_k).map(|s| (n, s)).context(|| format!("rotated run N = {n}"))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let single = runs.len() == 1;
    let mut rows = Vec::new();
    for (n, s) in &runs {
        write_series(rec, *n, s)?;
        quantum_checks(rec, &format!("N={n}"), s);
        let abs: Vec<f64> = s.zeta_rot.iter().map(|z| z.abs()).collect();
        let rise = first_reach(&s.t, &abs, level).unwrap_or(f64::NAN);
        let top = abs.iter().copied().fold(0.0, f64::max);
        let tag = format!("N{n}");
        rec.scalar(key("rise_time", &tag, single), rise);
        rec.scalar(key("max_zeta_rot", &tag, single), top);
        rec.report(format!("N = {n}: |ζ'| reaches {level} at t = {rise:.4}, max {top:.4}"));
        rows.push(vec![n.to_string(), num(cos), num(rise), num(top)]);
    }
    rec.table("summary.csv", &["n", "cos_theta", "rise_time", "max_abs_zeta_rot"], &rows)
}

fn plateau(c: &ExperimentConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let n_list = c.usize_list("n_list");
    let cos = c.f64("cos_theta");
    cos_to_theta(cos)?;
    let th = AnalysisThresholds {
        rise_fraction: c.f64("rise_fraction"),
        plateau_band: c.f64("plateau_band"),
        ..AnalysisThresholds::default()
    };
    let (per_n, offset, dt, tol_k) = (c.f64("t_end_per_n"), c.f64("t_end_offset"), c.f64("dt"), c.f64("tol"));
    let runs = n_list
        .par_iter()
        .map(|&n| {
            let t_end = per_n * n as f64 + offset;
            let s = fig7_series(n, cos, t_end, dt, tol_k).context(|| format!("plateau run N = {n}"))?;
            analyze_plateau(n, cos, s, &th).context(|| format!("plateau analysis N = {n}"))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let single = runs.len() == 1;
    let mut rows = Vec::new();
    for r in &runs {
        write_series(rec, r.n, &r.series)?;
        quantum_checks(rec, &format!("N={}", r.n), &r.series);
        let tag = format!("N{}", r.n);
        rec.scalar(key("height", &tag, single), r.height);
        rec.scalar(key("rise_time", &tag, single), r.rise_time);
        rec.scalar(key("hang_time", &tag, single), r.hang_time);
        rec.report(format!(
            "N = {}: plateau |ζ'| = {:.4}, rise {:.3}, hang {:.3}",
            r.n, r.height, r.rise_time, r.hang_time
        ));
        rows.push(vec![
            r.n.to_string(),
            num(cos),
            num(r.height),
            num(r.rise_time),
            num(r.hang_time),
            num(r.plateau_start),
            num(r.plateau_end),
            num(r.max_abs_sigma1),
            num(r.max_abs_tau1),
        ]);
    }
    rec.table(
        "summary.csv",
        &[
            "n",
            "cos_theta",
            "height",
            "rise_time",
            "hang_time",
            "plateau_start",
            "plateau_end",
            "max_abs_sigma1",
            "max_abs_tau1",
        ],
        &rows,
    )
}

fn pulse(c: &ExperimentConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let mut params = PulseParams::new(c.f64("cos_theta")).context(|| "pulse parameters".into())?;
    params.boundary.ramp_time = c.f64("ramp_time");
    let mut grid =
        PulseGrid::with_courant(c.f64("length"), c.usize("nz"), c.f64("courant")).context(|| "pulse grid".into())?;
    let every = ((c.f64("snapshot_interval") / grid.dt).round() as usize).max(1);
    let run = run_to_steady(&mut grid, &params, c.f64("t_max"), every, c.f64("steady_tol"))
        .context(|| "pulse run".into())?;
    let files = write_snapshots(&rec.dir().join("snapshots"), &run.snapshots).context(|| "snapshots".into())?;
    for f in &files {
        let name = f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        rec.listed(format!("snapshots/{name}"));
    }
    let residual = standing_residual(&run.snapshots, c.f64("standing_from")).context(|| "standing residual".into())?;
    rec.check_le("standing_residual", residual, tol::STANDING_RESIDUAL);
    rec.check_le("antisymmetry_defect", antisymmetry_defect(&grid), tol::PULSE_EXACT);
    rec.check_le("max_bloch_norm_excess", run.max_bloch_norm - 1.0, tol::PULSE_BLOCH);
    let last = run.snapshots.last().expect("run has snapshots").sigma3();
    let rows: Vec<Vec<String>> = run
        .snapshots
        .iter()
        .map(|s| {
            let s3 = s.sigma3();
            let diff = s3.iter().zip(&last).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            vec![num(s.t), num(*s3.last().expect("grid has points")), num(diff)]
        })
        .collect();
    rec.table("summary.csv", &["t", "sigma3_exit", "max_diff_to_final"], &rows)?;
    rec.scalar("steady_time", run.steady.t);
    rec.scalar("standing_residual", residual);
    rec.scalar("sigma3_exit", *last.last().expect("grid has points"));
    rec.report(format!("steady by t = {:.3}; standing residual {residual:.2e}", run.steady.t));
    Ok(())
}

fn rate(c: &ExperimentConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let inputs = PhysicalInputs::hydrogen(c.f64("omega1"), c.f64("omega2"), c.f64("rho"), c.f64("i1"), c.f64("i2"));
    let consts = CouplingConstants::from_inputs(&inputs, c.f64("volume")).context(|| "coupling constants".into())?;
    for w in inputs.warnings() {
        rec.warn(w);
    }
    let inv_l = exchange_length(&inputs);
    let rows = vec![
        vec!["inverse_exchange_length".into(), num(inv_l), "cm^-1".into()],
        vec!["exchange_length".into(), num(1.0 / inv_l), "cm".into()],
        vec!["seconds_per_time_unit".into(), num(physical_time_s(1.0, inv_l)), "s".into()],
        vec!["hydrogen_r".into(), num(consts.r), "eV cm^3".into()],
        vec!["coupling_g".into(), num(consts.g), "eV".into()],
        vec!["photon_density_1".into(), num(consts.n1), "cm^-3".into()],
        vec!["photon_density_2".into(), num(consts.n2), "cm^-3".into()],
        vec!["microscopic_inverse_length".into(), num(consts.inverse_length), "cm^-1".into()],
        vec!["microscopic_to_scaling_ratio".into(), num(consts.scaling_law_ratio(&inputs)), "1".into()],
    ];
    rec.table("summary.csv", &["quantity", "value", "unit"], &rows)?;
    rec.scalar("inverse_exchange_length", inv_l);
    rec.scalar("seconds_per_time_unit", physical_time_s(1.0, inv_l));
    rec.scalar("hydrogen_r", consts.r);
    rec.report(format!("L^-1 = {inv_l:e} cm^-1"));
    rec.report(format!("one time unit = {:e} s", physical_time_s(1.0, inv_l)));
    Ok(())
}

fn oracle(c: &ExperimentConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let (t_end, dt) = (c.f64("t_end"), c.f64("dt"));
    let cases: Vec<(usize, Basis, f64)> = c
        .usize_list("n_list")
        .into_iter()
        .flat_map(|n| {
            let thetas = c.f64_list("thetas");
            thetas.into_iter().flat_map(move |th| [Basis::Plane, Basis::Circular].map(|b| (n, b, th)))
        })
        .collect();
    let devs = cases
        .par_iter()
        .map(|&(n, b, th)| {
            oracle_deviation(n, n, b, th, t_end, dt).context(|| format!("oracle N = {n}, {b}, θ = {th}"))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    let mut rows = Vec::new();
    for (&(n, b, th), &d) in cases.iter().zip(&devs) {
        rec.check_le(format!("oracle[N={n},{b},theta={th}]"), d, tol::ORACLE);
        rows.push(vec![n.to_string(), b.to_string(), num(th), num(d)]);
    }
    rec.table("summary.csv", &["n", "basis", "theta", "max_deviation"], &rows)?;
    let worst = devs.iter().copied().fold(0.0, f64::max);
    rec.scalar("max_deviation", worst);
    rec.report(format!("oracle max deviation {worst:.3e} over {} cases", cases.len()));
    Ok(())
}
