//! Adaptive Dormand–Prince 5(4) integration for small autonomous systems.
//!
//! The fifth-order solution is propagated (local extrapolation) and the
//! embedded fourth-order one only steers the step size. The controller
//! bounds the local error per unit time: a step of length `h` is accepted
//! when its weighted error estimate is below `tol · h`. Each accepted step
//! reports its endpoint values and derivatives, which is all a cubic Hermite
//! interpolant needs.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    /// Absolute and relative local error tolerance per unit time.
    pub tol: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
}

/// One accepted step `[t0, t1]` with endpoint values and slopes.
#[derive(Clone, Copy, Debug)]
pub struct AcceptedStep<const D: usize> {
    pub t0: f64,
    pub y0: [f64; D],
    pub f0: [f64; D],
    pub t1: f64,
    pub y1: [f64; D],
    pub f1: [f64; D],
}

impl<const D: usize> AcceptedStep<D> {
    /// Cubic Hermite interpolation of component `i` at `t ∈ [t0, t1]`.
    pub fn hermite(&self, i: usize, t: f64) -> f64 {
        hermite(self.t0, self.y0[i], self.f0[i], self.t1, self.y1[i], self.f1[i], t)
    }
}

/// Cubic Hermite interpolant through `(t0, y0, f0)` and `(t1, y1, f1)`.
pub fn hermite(t0: f64, y0: f64, f0: f64, t1: f64, y1: f64, f1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * f0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * f1
}

fn axpy<const D: usize>(y: &[f64; D], terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += c * k[i];
        }
    }
    out
}

/// Integrate `dy/dt = f(y)` from `(t0, y0)` to `t_end`, calling `on_step`
/// for every accepted step. Returns the final state.
pub fn integrate<const D: usize, F, S>(f: F, t0: f64, y0: [f64; D], t_end: f64, ctl: StepControl, mut on_step: S) -> Result<[f64; D]>
where
    F: Fn(&[f64; D]) -> [f64; D],
    S: FnMut(&AcceptedStep<D>),
{
    if !(ctl.tol > 0.0) || !(ctl.max_step > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {} and max step {} must be positive", ctl.tol, ctl.max_step)));
    }
    if t_end < t0 {
        return Err(Error::InvalidParameter(format!("t_end = {t_end} precedes t0 = {t0}")));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = initial_step(&y, &k1, ctl).min(t_end - t0).min(ctl.max_step);
    while t < t_end {
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let floor = 1e-14 * t.abs().max(1.0);
        if h < floor && !last {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let k2 = f(&axpy(&y, &[(h * A21, &k1)]));
        let k3 = f(&axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]));
        let k4 = f(&axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]));
        let k5 = f(&axpy(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]));
        let k6 = f(&axpy(&y, &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)]));
        let y_new = axpy(&y, &[(h * B1, &k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
        let k7 = f(&y_new);
        let mut err = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = h * ctl.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err += (e / scale).powi(2);
        }
        let err = (err / D as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            on_step(&AcceptedStep { t0: t, y0: y, f0: k1, t1: t_new, y1: y_new, f1: k7 });
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                break;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.25)).clamp(0.2, 5.0) };
        h = (h * factor).min(ctl.max_step);
        if err > 1.0 && h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
    }
    Ok(y)
}

fn initial_step<const D: usize>(y: &[f64; D], f: &[f64; D], ctl: StepControl) -> f64 {
    let scale = |i: usize| ctl.tol + ctl.tol * y[i].abs();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / D as f64).sqrt();
    let d1 = (f.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / D as f64).sqrt();
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).max(1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let ctl = StepControl { tol: 1e-12, max_step: 1.0 };
        let y = integrate(|y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 10.0, ctl, |_| {}).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence_with_fixed_steps() {
        // Force fixed steps via max_step with a loose tolerance.
        let run = |h: f64| {
            let ctl = StepControl { tol: 1.0, max_step: h };
            integrate(|y: &[f64; 1]| [-y[0] * y[0]], 0.0, [1.0], 1.0, ctl, |_| {}).unwrap()[0]
        };
        let exact = 0.5;
        let e1 = (run(0.1) - exact).abs();
        let e2 = (run(0.05) - exact).abs();
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn steps_tile_the_interval() {
        let ctl = StepControl { tol: 1e-8, max_step: 0.3 };
        let mut steps = Vec::new();
        integrate(|y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, ctl, |s| steps.push((s.t0, s.t1))).unwrap();
        assert_eq!(steps[0].0, 0.0);
        assert_eq!(steps.last().unwrap().1, 2.0);
        for w in steps.windows(2) {
            assert_eq!(w[0].1, w[1].0);
            assert!(w[0].1 - w[0].0 <= 0.3 + 1e-15);
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |t: f64| 2.0 * t * t * t - t + 0.5;
        let dp = |t: f64| 6.0 * t * t - 1.0;
        for t in [0.3, 0.8, 1.1] {
            let v = hermite(0.2, p(0.2), dp(0.2), 1.4, p(1.4), dp(1.4), t);
            assert!((v - p(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn blow_up_reports_underflow() {
        let ctl = StepControl { tol: 1e-10, max_step: 1.0 };
        let r = integrate(|y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, ctl, |_| {});
        assert!(matches!(r, Err(Error::StepSizeUnderflow { .. })));
    }
}
