use super::*;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn random_unit(a: f64, b: f64) -> [f64; 3] {
    let (st, ct) = a.sin_cos();
    let (sp, cp) = b.sin_cos();
    [st * cp, st * sp, ct]
}

/// The equations of motion with σ±, σ3, τ±, τ3 as six independent complex
/// unknowns, read straight off the operator form.
fn complex_rhs(y: &[C64; 6], p: &MfParams) -> [C64; 6] {
    let (s, c) = p.theta.sin_cos();
    let (sin2, a, b) = (s * s, (1.0 + c) * (1.0 + c), (1.0 - c) * (1.0 - c));
    let [sp, sm, s3, tp, tm, t3] = *y;
    let mi = C64::new(0.0, -1.0);
    [
        mi * p.n2 * s3 * (sin2 + a * tp - b * tm),
        -mi * p.n2 * s3 * (sin2 + a * tm - b * tp),
        mi * 2.0 * p.n2 * (sin2 * (sp - sm) - b * (sp * tp - sm * tm) + a * (sp * tm - sm * tp)),
        mi * p.n1 * t3 * (sin2 + a * sp - b * sm),
        -mi * p.n1 * t3 * (sin2 + a * sm - b * sp),
        mi * 2.0 * p.n1 * (sin2 * (tp - tm) - b * (sp * tp - sm * tm) - a * (sp * tm - sm * tp)),
    ]
}

fn rk4_complex(y0: [C64; 6], p: &MfParams, t: f64, steps: usize) -> [C64; 6] {
    let h = t / steps as f64;
    let add = |y: &[C64; 6], k: &[C64; 6], c: f64| {
        let mut o = *y;
        for i in 0..6 {
            o[i] += k[i] * c;
        }
        o
    };
    let mut y = y0;
    for _ in 0..steps {
        let k1 = complex_rhs(&y, p);
        let k2 = complex_rhs(&add(&y, &k1, h / 2.0), p);
        let k3 = complex_rhs(&add(&y, &k2, h / 2.0), p);
        let k4 = complex_rhs(&add(&y, &k3, h), p);
        for i in 0..6 {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    y
}

#[test]
fn head_on_opposed_state_is_fixed_point() {
    let d = mf_rhs(&MeanFieldState::opposed(), &MfParams::unit(0.0));
    for v in d.to_array() {
        assert!(v.abs() < 1e-15);
    }
}

#[test]
fn perpendicular_drive_term() {
    let s = MeanFieldState { sigma3: 1.0, ..MeanFieldState::ZERO };
    let p = MfParams::new(FRAC_PI_2, 0.7, 1.3).unwrap();
    let d = mf_rhs(&s, &p);
    // i dσ+/dt = n2 sin²θ
    let lhs = C64::new(0.0, 1.0) * d.sigma_plus;
    assert!((lhs - C64::new(1.3, 0.0)).norm() < 1e-15);
}

#[test]
fn invalid_params_rejected() {
    assert!(MfParams::new(0.1, 0.0, 1.0).is_err());
    assert!(MfParams::new(f64::NAN, 1.0, 1.0).is_err());
    assert!(MfParams::from_one_minus_cos(3.0).is_err());
    let p = MfParams::from_one_minus_cos(1e-7).unwrap();
    assert!(((1.0 - p.theta.cos()) - 1e-7).abs() < 1e-15);
}

#[test]
fn real_form_matches_unconstrained_complex_form() {
    let p = MfParams::new(0.6, 1.0, 1.0).unwrap();
    let init = MeanFieldState::from_vectors(random_unit(0.4, 1.1), random_unit(2.2, -0.3));
    let y0 = [init.sigma_plus, init.sigma_plus.conj(), C64::new(init.sigma3, 0.0), init.tau_plus, init.tau_plus.conj(), C64::new(init.tau3, 0.0)];
    let yc = rk4_complex(y0, &p, 2.0, 4000);
    let ctl = StepControl { tol: 1e-13, max_step: 0.01 };
    let yr = mf_advance(init, &p, 2.0, ctl).unwrap();
    // reality and conjugation are preserved by the unconstrained flow
    assert!(yc[2].im.abs() < 1e-10 && yc[5].im.abs() < 1e-10);
    assert!((yc[1] - yc[0].conj()).norm() < 1e-10);
    assert!((yc[0] - yr.sigma_plus).norm() < 1e-9);
    assert!((yc[2].re - yr.sigma3).abs() < 1e-9);
    assert!((yc[3] - yr.tau_plus).norm() < 1e-9);
    assert!((yc[5].re - yr.tau3).abs() < 1e-9);
}

/// d/dt of `q` along the flow, by central differences in the direction of
/// the right-hand side.
fn rate_along_flow(q: impl Fn(&MeanFieldState) -> f64, s: &MeanFieldState, p: &MfParams) -> f64 {
    let f = mf_rhs(s, p).to_array();
    let y = s.to_array();
    let eps = 1e-6;
    let shift = |sign: f64| {
        let mut z = y;
        for i in 0..6 {
            z[i] += sign * eps * f[i];
        }
        MeanFieldState::from_array(z)
    };
    (q(&shift(1.0)) - q(&shift(-1.0))) / (2.0 * eps)
}

proptest! {
    #[test]
    fn invariants_are_stationary_under_the_flow(
        theta in 0.0..PI, a1 in 0.0..PI, b1 in -PI..PI, a2 in 0.0..PI, b2 in -PI..PI,
        n1 in 0.2f64..3.0, n2 in 0.2f64..3.0,
    ) {
        let p = MfParams::new(theta, n1, n2).unwrap();
        let s = MeanFieldState::from_vectors(random_unit(a1, b1), random_unit(a2, b2));
        prop_assert!(rate_along_flow(|s| s.bloch_norm_a(), &s, &p).abs() < 1e-8);
        prop_assert!(rate_along_flow(|s| s.bloch_norm_b(), &s, &p).abs() < 1e-8);
        prop_assert!(rate_along_flow(|s| mf_energy(s, &p), &s, &p).abs() < 1e-7);
    }
}

#[test]
fn head_on_equilibrium_is_linearly_unstable() {
    let rate = max_growth_rate(&MeanFieldState::opposed(), &MfParams::unit(0.0));
    // linearization gives d²σ+/dt² = (A n)² σ+ with A = 4
    assert!((rate - 4.0).abs() < 1e-6, "growth rate {rate}");
}

#[test]
fn equilibrium_run_is_constant() {
    let s = mf_evolve(MeanFieldState::opposed(), MfParams::unit(0.0), 10.0, 1e-10).unwrap();
    assert!(s.states.iter().all(|x| *x == MeanFieldState::opposed()));
    assert!(matches!(crossing_report(&s), Err(Error::NoCrossings)));
}

#[test]
fn small_angle_full_turnovers() {
    let p = MfParams::from_one_minus_cos(1e-1).unwrap();
    let s = mf_evolve(MeanFieldState::opposed(), p, 12.0, 1e-11).unwrap();
    let report = crossing_report(&s).unwrap();
    assert!(report.crossings.len() >= 3);
    let min = s.sigma3().into_iter().fold(f64::INFINITY, f64::min);
    assert!(min < -0.99, "min sigma3 = {min}");
    let period = report.period.unwrap();
    let c = &report.crossings;
    // successive half periods alternate but full periods repeat
    for w in c.windows(3) {
        assert!(((w[2] - w[0]) - period).abs() < 1e-6);
    }
}

#[test]
fn first_crossing_regression() {
    let p = MfParams::from_one_minus_cos(1e-3).unwrap();
    let s = mf_evolve(MeanFieldState::opposed(), p, 3.0, 1e-11).unwrap();
    let t1 = crossing_report(&s).unwrap().first_crossing_time;
    assert!((t1 - 1.988_733).abs() < 1e-5, "t1 = {t1}");
}

#[test]
fn tolerance_self_consistency() {
    let init = MeanFieldState::from_vectors(random_unit(0.3, 0.2), random_unit(2.5, 1.0));
    let p = MfParams::unit(0.7);
    let coarse = mf_advance(init, &p, 50.0, StepControl { tol: 1e-10, max_step: DEFAULT_MAX_STEP }).unwrap();
    let fine = mf_advance(init, &p, 50.0, StepControl { tol: 1e-13, max_step: DEFAULT_MAX_STEP }).unwrap();
    for (a, b) in coarse.to_array().iter().zip(fine.to_array()) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn cosine_samples_first_crossing() {
    let t: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
    let y: Vec<f64> = t.iter().map(|x| x.cos()).collect();
    let r = crossings_of_samples(&t, &y, None).unwrap();
    assert!((r.first_crossing_time - FRAC_PI_2).abs() < 1e-5);
    let dy: Vec<f64> = t.iter().map(|x| -x.sin()).collect();
    let r = crossings_of_samples(&t, &y, Some(&dy)).unwrap();
    assert!((r.first_crossing_time - FRAC_PI_2).abs() < 1e-8);
    assert!((r.period.unwrap() - 2.0 * PI).abs() < 1e-7);
}

#[test]
fn constant_samples_have_no_crossings() {
    let t = [0.0, 1.0, 2.0];
    assert!(matches!(crossings_of_samples(&t, &[1.0, 1.0, 1.0], None), Err(Error::NoCrossings)));
}

#[test]
fn log_fit_of_exact_data() {
    let pts: Vec<(f64, f64)> = [1e-1, 1e-3, 1e-5, 1e-7].iter().map(|&x: &f64| (x, 0.3 - 0.25 * x.ln())).collect();
    let fit = log_scaling_fit(&pts).unwrap();
    assert!(fit.residual < 1e-12);
    assert!((fit.slope - 0.25).abs() < 1e-12);
    assert!(fit.slope > 0.0);
}

#[test]
fn log_fit_input_checks() {
    assert!(matches!(log_scaling_fit(&[(0.1, 1.0), (0.01, 2.0)]), Err(Error::InsufficientPoints { need: 3, got: 2 })));
    assert!(log_scaling_fit(&[(0.1, 1.0), (0.05, 2.0), (0.01, 3.0)]).is_err());
}

#[test]
fn csv_header_and_rows() {
    let s = mf_evolve(MeanFieldState::opposed(), MfParams::unit(0.3), 0.1, 1e-10).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 10);
    assert_eq!(lines.count(), s.len());
}
