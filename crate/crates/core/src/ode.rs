//! Dormand–Prince 5(4) with step-size control and cubic Hermite dense output.

/// Step-level control returned by the observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Reached `t_end`.
    Completed,
    /// The observer asked to stop.
    Stopped,
    /// The controller asked for a step below `h_min`.
    StepUnderflow,
    MaxSteps,
    /// The right-hand side produced a non-finite value.
    NonFinite,
}

/// One accepted step, with endpoint values and slopes.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub dy0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
    pub dy1: [f64; N],
}

impl<const N: usize> Step<N> {
    /// Cubic Hermite interpolant on `[t0, t1]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        hermite(self.t0, &self.y0, &self.dy0, self.t1, &self.y1, &self.dy1, t)
    }
}

pub fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    dy0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    dy1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|i| h00 * y0[i] + h10 * h * dy0[i] + h01 * y1[i] + h11 * h * dy1[i])
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub status: Status,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-4,
            h_min: 1e-14,
            h_max: 0.05,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

impl Dopri5 {
    /// Integrate `y' = f(t, y)` from `t0` to `t_end`, calling `observe` after
    /// every accepted step.
    pub fn integrate<const N: usize, F, O>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut observe: O,
    ) -> Outcome<N>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        O: FnMut(&Step<N>) -> Control,
    {
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.h_init.min(self.h_max).min(t_end - t0);
        let mut accepted = 0;
        let mut rejected = 0;
        let finish = |t, y, status, accepted, rejected| Outcome {
            t,
            y,
            status,
            accepted,
            rejected,
        };
        if !k1.iter().all(|v| v.is_finite()) {
            return finish(t, y, Status::NonFinite, 0, 0);
        }
        loop {
            if t >= t_end {
                return finish(t, y, Status::Completed, accepted, rejected);
            }
            if accepted + rejected >= self.max_steps {
                return finish(t, y, Status::MaxSteps, accepted, rejected);
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + h,
                &axpy(
                    &y,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = f(t + h, &y_new);

            let mut err2 = 0.0;
            let mut finite = true;
            for i in 0..N {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err2 += (e / sc).powi(2);
                finite &= y_new[i].is_finite() && k7[i].is_finite();
            }
            let err = (err2 / N as f64).sqrt();
            if !finite || !err.is_finite() {
                rejected += 1;
                h *= 0.2;
                if h < self.h_min {
                    return finish(t, y, Status::NonFinite, accepted, rejected);
                }
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                let t_new = if last { t_end } else { t + h };
                let step = Step {
                    t0: t,
                    y0: y,
                    dy0: k1,
                    t1: t_new,
                    y1: y_new,
                    dy1: k7,
                };
                accepted += 1;
                t = t_new;
                y = y_new;
                k1 = k7;
                if observe(&step) == Control::Stop {
                    return finish(t, y, Status::Stopped, accepted, rejected);
                }
                h = (h * factor).min(self.h_max);
            } else {
                rejected += 1;
                h *= factor.min(1.0);
                if h < self.h_min {
                    return finish(t, y, Status::StepUnderflow, accepted, rejected);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_harmonic_oscillator() {
        let solver = Dopri5::default();
        let out = solver.integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, |_| Control::Continue);
        assert_eq!(out.status, Status::Completed);
        assert!((out.y[0] - 2f64.exp()).abs() < 1e-8);

        let mut worst: f64 = 0.0;
        let out = solver.integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            10.0,
            |s| {
                let tm = 0.5 * (s.t0 + s.t1);
                let yi = s.interpolate(tm);
                worst = worst.max((yi[0] - tm.sin()).abs());
                Control::Continue
            },
        );
        assert!((out.y[0] - 10f64.sin()).abs() < 1e-8);
        assert!(worst < 1e-6, "dense output error {worst}");
    }

    #[test]
    fn observer_can_stop() {
        let out = Dopri5::default().integrate(
            |_, y: &[f64; 1]| [-1.0 + 0.0 * y[0]],
            0.0,
            [1.0],
            5.0,
            |s| {
                if s.y1[0] < 0.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        assert_eq!(out.status, Status::Stopped);
        assert!(out.y[0] < 0.0 && out.t < 1.2);
    }

    #[test]
    fn blow_up_is_reported() {
        let out = Dopri5::default().integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            |_| Control::Continue,
        );
        assert!(matches!(
            out.status,
            Status::StepUnderflow | Status::NonFinite | Status::MaxSteps
        ));
        assert!(out.t < 1.0 + 1e-6);
    }
}
